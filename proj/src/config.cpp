#include "vecanim/config.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace vecanim {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ParseError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ParseError("");
    } else {
      if (!v.is_number()) throw ParseError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ParseError("config: key '" + key + "' has the wrong type");
  }
}

using Setter = std::function<void(CliConfig&, const json&, const std::string&)>;

template <typename T>
Setter field(T CliConfig::*member) {
  return [member](CliConfig& c, const json& v, const std::string& k) {
    c.*member = get_as<T>(v, k);
  };
}

template <typename T>
Setter vfield(T VectorizeConfig::*member) {
  return [member](CliConfig& c, const json& v, const std::string& k) {
    c.vectorize.*member = get_as<T>(v, k);
  };
}

Setter wfield(double LossWeights::*member) {
  return [member](CliConfig& c, const json& v, const std::string& k) {
    c.vectorize.weights.*member = get_as<double>(v, k);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"image", field(&CliConfig::image)},
      {"fore_mask", field(&CliConfig::fore_mask)},
      {"local_mask", field(&CliConfig::local_mask)},
      {"out", field(&CliConfig::out)},
      {"log", field(&CliConfig::log)},
      {"render_aa", field(&CliConfig::render_aa)},
      {"paths", vfield(&VectorizeConfig::total_paths)},
      {"levels", vfield(&VectorizeConfig::n_levels)},
      {"segments", vfield(&VectorizeConfig::segments_per_path)},
      {"lr_point", vfield(&VectorizeConfig::lr_point)},
      {"lr_color", vfield(&VectorizeConfig::lr_color)},
      {"iters_per_level", vfield(&VectorizeConfig::iters_per_level)},
      {"iters_final", vfield(&VectorizeConfig::iters_final)},
      {"lambda_max", vfield(&VectorizeConfig::lambda_max)},
      {"aa_samples", vfield(&VectorizeConfig::aa_samples)},
      {"boundary_samples", vfield(&VectorizeConfig::boundary_samples)},
      {"w_back", wfield(&LossWeights::back)},
      {"w_fore", wfield(&LossWeights::fore)},
      {"w_local", wfield(&LossWeights::local)},
      {"w_merged", wfield(&LossWeights::merged)},
      {"seed",
       [](CliConfig& c, const json& v, const std::string& k) {
         if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
           throw ParseError("config: key '" + k + "' must be a non-negative integer");
         }
         c.vectorize.rng_seed = v.get<std::uint64_t>();
       }},
  };
  return table;
}

}  // namespace

CliConfig apply_config_json(const CliConfig& base, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config: top level must be an object");
  CliConfig out = base;
  for (const auto& [key, value] : j.items()) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ParseError("config: unknown key '" + key + "'");
    it->second(out, value, key);
  }
  return out;
}

CliConfig load_config(const CliConfig& base, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return apply_config_json(base, ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const CliConfig& c) {
  const VectorizeConfig& v = c.vectorize;
  const json j = {
      {"image", c.image},
      {"fore_mask", c.fore_mask},
      {"local_mask", c.local_mask},
      {"out", c.out},
      {"log", c.log},
      {"render_aa", c.render_aa},
      {"paths", v.total_paths},
      {"levels", v.n_levels},
      {"segments", v.segments_per_path},
      {"lr_point", v.lr_point},
      {"lr_color", v.lr_color},
      {"iters_per_level", v.iters_per_level},
      {"iters_final", v.iters_final},
      {"lambda_max", v.lambda_max},
      {"aa_samples", v.aa_samples},
      {"boundary_samples", v.boundary_samples},
      {"w_back", v.weights.back},
      {"w_fore", v.weights.fore},
      {"w_local", v.weights.local},
      {"w_merged", v.weights.merged},
      {"seed", v.rng_seed},
  };
  return j.dump(2);
}

std::filesystem::path resolve_output(const std::filesystem::path& path) {
  const char* dir = std::getenv("VECANIM_OUT_DIR");
  if (!dir || !*dir || path.is_absolute()) return path;
  return std::filesystem::path(dir) / path;
}

}  // namespace vecanim
