#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "vecanim/document.hpp"

namespace vecanim {

// SVG 1.1 subset: three groups (background, local, foreground) of filled
// paths drawn with absolute M/C/Z commands, coordinates at 4 decimals.
std::string write_svg(const SvgDocument& doc);

// Parses the subset produced by write_svg. Transforms, strokes, arcs and
// other elements raise UnsupportedFeatureError naming the element.
SvgDocument parse_svg(std::string_view text);

void save_svg(const SvgDocument& doc, const std::filesystem::path& path);
SvgDocument load_svg(const std::filesystem::path& path);

}  // namespace vecanim
