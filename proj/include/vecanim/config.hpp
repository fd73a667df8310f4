#pragma once

#include <filesystem>
#include <string>

#include "vecanim/vectorize.hpp"

namespace vecanim {

// Everything the CLI can be configured with. JSON keys mirror the long flag
// names with dashes replaced by underscores.
struct CliConfig {
  VectorizeConfig vectorize;
  // Supersampling for final renders (metrics, PNG output).
  int render_aa = 64;
  std::string image;
  std::string fore_mask;
  std::string local_mask;
  std::string out = "out.svg";
  std::string log;
};

// Overlays the keys present in `json_text` onto `base`; unknown keys and
// mistyped values raise ParseError.
CliConfig apply_config_json(const CliConfig& base, const std::string& json_text);
CliConfig load_config(const CliConfig& base, const std::filesystem::path& path);
std::string config_to_json(const CliConfig& cfg);

// Output paths are placed under $VECANIM_OUT_DIR when it is set and the given
// path is relative.
std::filesystem::path resolve_output(const std::filesystem::path& path);

}  // namespace vecanim
