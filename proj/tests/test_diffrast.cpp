#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "vecanim/diffrast.hpp"

using namespace vecanim;

namespace {

RenderConfig config(int w, int h, int aa = 2) {
  RenderConfig cfg;
  cfg.width = w;
  cfg.height = h;
  cfg.aa_samples = aa;
  return cfg;
}

bool bit_equal(const RasterImage& a, const RasterImage& b) {
  for (int c = 0; c < 3; ++c) {
    if (!(a.plane(c) == b.plane(c)).all()) return false;
  }
  return true;
}

std::vector<ClosedPathd> random_scene(std::mt19937_64& rng, int n_paths, double jitter = 0.8) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<ClosedPathd> paths;
  for (int i = 0; i < n_paths; ++i) {
    paths.push_back(circle_path<double>({4 + 8 * u(rng), 4 + 8 * u(rng)}, 2 + 4 * u(rng), 8,
                                        {u(rng), u(rng), u(rng), 0.5 + 0.5 * u(rng)}));
    for (Eigen::Index r = 0; r < paths.back().points().rows(); ++r) {
      paths.back().points().row(r) += jitter * Eigen::RowVector2d(2 * u(rng) - 1, 2 * u(rng) - 1);
    }
  }
  return paths;
}

RasterImage random_target(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0, 1);
  RasterImage t(w, h, 3);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) t.at(x, y, c) = u(rng);
    }
  }
  return t;
}

}  // namespace

TEST_CASE("empty scene renders the background") {
  RenderConfig cfg = config(5, 4);
  cfg.background = {0.1, 0.2, 0.3};
  const RasterImage im = render({}, cfg);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 5; ++x) CHECK(im.rgb(x, y) == Eigen::Vector3d(0.1, 0.2, 0.3));
  }
}

TEST_CASE("full-canvas opaque path gives its fill everywhere") {
  const std::vector<ClosedPathd> paths = {
      oracle::polygon_path({{-1, -1}, {9, -1}, {9, 9}, {-1, 9}}, {0.3, 0.6, 0.9, 1.0})};
  const RasterImage im = render(paths, config(8, 8, 3));
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) CHECK((im.rgb(x, y) - Eigen::Vector3d(0.3, 0.6, 0.9)).norm() < 1e-15);
  }
}

TEST_CASE("left half of a pixel matches the supersample oracle") {
  const std::vector<Point2d> corners = {{1, 1}, {1.5, 1}, {1.5, 2}, {1, 2}};
  const std::vector<ClosedPathd> paths = {oracle::polygon_path(corners, {0, 0, 0, 1})};
  const double expected = oracle::supersample_coverage(corners, 4, 4, 64)(1, 1);
  CHECK(expected == doctest::Approx(0.5));
  for (const int aa : {1, 2, 4, 8}) {
    const RasterImage im = render(paths, config(4, 4, aa));
    CHECK(std::abs(im.at(1, 1, 0) - (1 - expected)) <= 0.51 / (aa * aa) + 1e-12);
  }
}

TEST_CASE("path coverage matches an independent winding-number oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    const auto paths = random_scene(rng, 1, 1.5);
    RenderConfig cfg = config(16, 16, 8);
    const Plane cov = path_coverage(paths[0], cfg);
    const Plane ref = oracle::supersample_coverage(oracle::dense_outline(paths[0], 4000), 16, 16, 8);
    CHECK((cov - ref).abs().maxCoeff() <= 1.0 / 64 + 1e-12);
    CHECK(cov.minCoeff() >= 0);
    CHECK(cov.maxCoeff() <= 1);
  }
}

TEST_CASE("render is deterministic and an opaque top path hides the rest") {
  std::mt19937_64 rng(12);
  auto paths = random_scene(rng, 3);
  const RenderConfig cfg = config(16, 16, 4);
  CHECK(bit_equal(render(paths, cfg), render(paths, cfg)));

  paths.push_back(oracle::polygon_path({{-1, -1}, {17, -1}, {17, 17}, {-1, 17}}, {0.2, 0.4, 0.6, 1}));
  const RasterImage a = render(paths, cfg);
  for (std::size_t i = 0; i + 1 < paths.size(); ++i) paths[i].fill() << 1, 0, 1, 1;
  CHECK(bit_equal(a, render(paths, cfg)));
}

TEST_CASE("render_with_grad reproduces render and rejects mismatched targets") {
  std::mt19937_64 rng(13);
  const auto paths = random_scene(rng, 2);
  const RenderConfig cfg = config(16, 16, 3);
  const RasterImage target = random_target(rng, 16, 16);
  const RenderResult r = render_with_grad(paths, cfg, target);
  CHECK(bit_equal(r.image, render(paths, cfg)));
  CHECK(r.loss == doctest::Approx(masked_mse(r.image, target, nullptr)).epsilon(1e-14));
  CHECK(r.grad.paths.size() == 2);
  CHECK(r.grad.paths[0].points.rows() == paths[0].points().rows());
  CHECK(r.grad.all_finite());
  CHECK_THROWS_AS(render_with_grad(paths, cfg, random_target(rng, 8, 8)), DomainError);
}

TEST_CASE("exact target gives zero loss and zero gradients") {
  std::mt19937_64 rng(14);
  const auto paths = random_scene(rng, 3);
  const RenderConfig cfg = config(16, 16, 3);
  const RasterImage target = render(paths, cfg);
  const RenderResult r = render_with_grad(paths, cfg, target);
  CHECK(r.loss == 0);
  for (const auto& g : r.grad.paths) {
    CHECK(g.points.cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(g.fill.cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("masked_mse weights and normalizes by the mask") {
  RasterImage a(2, 1, 3, 0.0), b(2, 1, 3, 0.0);
  b.set_rgb(0, 0, {1, 1, 1});
  b.set_rgb(1, 0, {0.5, 0.5, 0.5});
  CHECK(masked_mse(a, b, nullptr) == doctest::Approx((1 + 0.25) / 2));
  Mask m(2, 1);
  m.values << 0, 1;
  CHECK(masked_mse(a, b, &m) == doctest::Approx(0.25));
  const Mask empty(2, 1);
  CHECK(masked_mse(a, b, &empty) == 0);
}

TEST_CASE("fill gradients match central differences") {
  std::mt19937_64 rng(15);
  const auto paths = random_scene(rng, 3);
  const RenderConfig cfg = config(16, 16, 8);
  const RasterImage target = random_target(rng, 16, 16);
  Mask mask(16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) mask.values(y, x) = (x + y) % 3 == 0 ? 0.0 : 1.0;
  }
  for (const Mask* mk : std::initializer_list<const Mask*>{nullptr, &mask}) {
    const RenderResult r = render_with_grad(paths, cfg, target, mk);
    for (std::size_t i = 0; i < paths.size(); ++i) {
      for (int c = 0; c < 4; ++c) {
        const double h = 1e-3;
        auto plus = paths, minus = paths;
        plus[i].fill()[c] += h;
        minus[i].fill()[c] -= h;
        const double fd = (masked_mse(render(plus, cfg), target, mk) -
                           masked_mse(render(minus, cfg), target, mk)) / (2 * h);
        CHECK(std::abs(r.grad.paths[i].fill[c] - fd) <= 1e-4 * std::max(std::abs(fd), 1e-3));
      }
    }
  }
}

TEST_CASE("control-point gradients match central differences on a single path") {
  std::mt19937_64 rng(16);
  const auto paths = random_scene(rng, 1);
  const RasterImage target = random_target(rng, 16, 16);
  RenderConfig cfg = config(16, 16, 32);
  cfg.boundary_samples = 1024;
  RenderConfig fine = cfg;
  fine.aa_samples = 256;
  const double h = 0.05;
  for (const Eigen::Index row : {Eigen::Index(0), Eigen::Index(4), Eigen::Index(13)}) {
    for (int axis = 0; axis < 2; ++axis) {
      auto plus = paths, minus = paths;
      plus[0].points()(row, axis) += h;
      minus[0].points()(row, axis) -= h;
      const double fd = (masked_mse(render(plus, fine), target, nullptr) -
                         masked_mse(render(minus, fine), target, nullptr)) / (2 * h);
      double an = 0;
      for (std::uint64_t seed = 0; seed < 8; ++seed) {
        cfg.rng_seed = seed;
        an += render_with_grad(paths, cfg, target).grad.paths[0].points(row, axis) / 8;
      }
      CHECK(std::abs(an - fd) <= 0.1 * std::max(std::abs(fd), 1e-3));
    }
  }
}

TEST_CASE("control-point gradients handle a self-overlapping path") {
  // Limacon r = 1 + 2 cos(theta): the inner loop has winding number 2.
  constexpr int kSegments = 16;
  const double dt = 2 * M_PI / kSegments;
  const auto at = [](double th) {
    const double r = 2.4 * (1 + 2 * std::cos(th));
    return Point2d(6 + r * std::cos(th), 8 + r * std::sin(th));
  };
  const auto tangent = [](double th) {
    const double r = 2.4 * (1 + 2 * std::cos(th)), dr = -4.8 * std::sin(th);
    return Point2d(dr * std::cos(th) - r * std::sin(th), dr * std::sin(th) + r * std::cos(th));
  };
  ClosedPathd::PointList pts(3 * kSegments, 2);
  for (int k = 0; k < kSegments; ++k) {
    const double a = k * dt, b = (k + 1) * dt;
    pts.row(3 * k) = at(a).transpose();
    pts.row(3 * k + 1) = (at(a) + tangent(a) * dt / 3).transpose();
    pts.row(3 * k + 2) = (at(b) - tangent(b) * dt / 3).transpose();
  }
  const std::vector<ClosedPathd> paths = {ClosedPathd(pts, Rgbad(0.9, 0.2, 0.1, 0.8))};
  int max_winding = 0;
  const auto outline = oracle::dense_outline(paths[0], 64);
  for (double y = 0.05; y < 16; y += 0.1) {
    for (double x = 0.05; x < 16; x += 0.1) {
      max_winding = std::max(max_winding, std::abs(oracle::winding_number(outline, {x, y})));
    }
  }
  REQUIRE(max_winding == 2);

  std::mt19937_64 rng(17);
  const RasterImage target = random_target(rng, 16, 16);
  RenderConfig cfg = config(16, 16, 64);
  cfg.boundary_samples = 2048;
  RenderConfig fine = cfg;
  fine.aa_samples = 2048;
  const double h = 0.005;
  const RenderResult res = render_with_grad(paths, cfg, target);
  double num = 0, den = 0;
  for (Eigen::Index row = 0; row < pts.rows(); ++row) {
    for (int axis = 0; axis < 2; ++axis) {
      auto plus = paths, minus = paths;
      plus[0].points()(row, axis) += h;
      minus[0].points()(row, axis) -= h;
      const double fd = (masked_mse(render(plus, fine), target, nullptr) -
                         masked_mse(render(minus, fine), target, nullptr)) / (2 * h);
      const double an = res.grad.paths[0].points(row, axis);
      num += (an - fd) * (an - fd);
      den += fd * fd;
    }
  }
  CHECK(std::sqrt(num / den) < 0.02);
}

TEST_CASE("flattening and signed area of a circle") {
  const ClosedPathd c = circle_path<double>({5, 5}, 3.0, 8, {0, 0, 0, 1});
  const auto poly = flatten_path(c, 1e-3);
  for (const auto& p : poly) CHECK(std::abs((p - Point2d(5, 5)).norm() - 3) < 1e-3);
  CHECK(std::abs(signed_path_area(c, 1e-4)) == doctest::Approx(std::numbers::pi * 9).epsilon(1e-4));
}

TEST_CASE("render config validation") {
  RenderConfig cfg = config(4, 4);
  cfg.aa_samples = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = config(4, 4);
  cfg.boundary_samples = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  CHECK_THROWS_AS(render({}, config(0, 4)), DomainError);
}
