#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "vecanim/geometry.hpp"

namespace vecanim {

// Stacking order, bottom to top.
enum class Layer { background = 0, local = 1, foreground = 2 };

inline constexpr std::array<Layer, 3> kLayers{Layer::background, Layer::local, Layer::foreground};

std::string_view layer_name(Layer layer);

struct DocPath {
  std::string id;
  ClosedPathd path;
};

struct SvgDocument {
  int width = 0;
  int height = 0;
  std::array<std::vector<DocPath>, 3> layers;

  std::vector<DocPath>& layer(Layer l) { return layers[static_cast<std::size_t>(l)]; }
  const std::vector<DocPath>& layer(Layer l) const { return layers[static_cast<std::size_t>(l)]; }

  std::size_t path_count() const;
  // All paths in render order (background first).
  std::vector<ClosedPathd> flattened() const;
  std::vector<ClosedPathd> layer_paths(Layer l) const;
};

}  // namespace vecanim
