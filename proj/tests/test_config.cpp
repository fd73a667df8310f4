#include <doctest.h>

#include <cstdlib>

#include "vecanim/commands.hpp"
#include "vecanim/config.hpp"

using namespace vecanim;

TEST_CASE("config defaults mirror the vectorizer defaults") {
  const CliConfig c;
  CHECK(c.vectorize.total_paths == 500);
  CHECK(c.vectorize.n_levels == 5);
  CHECK(c.vectorize.weights.merged == 1.0);
}

TEST_CASE("config JSON overlays known keys") {
  const CliConfig c = apply_config_json(CliConfig{}, R"({"paths": 120, "lr_point": 0.5, "seed": 9,
      "image": "x.png", "w_back": 0.25, "render_aa": 16})");
  CHECK(c.vectorize.total_paths == 120);
  CHECK(c.vectorize.lr_point == 0.5);
  CHECK(c.vectorize.rng_seed == 9);
  CHECK(c.image == "x.png");
  CHECK(c.vectorize.weights.back == 0.25);
  CHECK(c.render_aa == 16);
  CHECK(c.vectorize.n_levels == 5);

  const CliConfig again = apply_config_json(CliConfig{}, config_to_json(c));
  CHECK(config_to_json(again) == config_to_json(c));
}

TEST_CASE("config rejects unknown keys and wrong types") {
  try {
    apply_config_json(CliConfig{}, R"({"pathz": 3})");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("pathz") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_config_json(CliConfig{}, R"({"paths": "many"})"), ParseError);
  CHECK_THROWS_AS(apply_config_json(CliConfig{}, R"({"paths": 2.5})"), ParseError);
  CHECK_THROWS_AS(apply_config_json(CliConfig{}, R"({"seed": -1})"), ParseError);
  CHECK_THROWS_AS(apply_config_json(CliConfig{}, R"([1])"), ParseError);
  CHECK_THROWS_AS(apply_config_json(CliConfig{}, R"({"paths": )"), ParseError);
  CHECK_THROWS_AS(load_config(CliConfig{}, "/nonexistent/config.json"), IoError);
}

TEST_CASE("output override applies to relative paths only") {
  ::setenv("VECANIM_OUT_DIR", "/tmp/outdir", 1);
  CHECK(resolve_output("a/b.svg") == std::filesystem::path("/tmp/outdir/a/b.svg"));
  CHECK(resolve_output("/abs/b.svg") == std::filesystem::path("/abs/b.svg"));
  ::unsetenv("VECANIM_OUT_DIR");
  CHECK(resolve_output("a/b.svg") == std::filesystem::path("a/b.svg"));
}

TEST_CASE("metrics formatting") {
  const RasterImage a = RasterImage::filled(16, 16, {0.2, 0.3, 0.4});
  CHECK(format_metrics(compute_metrics(a, a)) == "mse=0 psnr=inf ssim=1");
  AblationRow row{100, 5, {0.5, 3.0103, 0.25}, 1.5};
  CHECK(format_ablation_row(row) == "100,5,0.5,3.0103,0.25,1.5");
}
