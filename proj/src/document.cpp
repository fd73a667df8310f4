#include "vecanim/document.hpp"

namespace vecanim {

std::string_view layer_name(Layer layer) {
  switch (layer) {
    case Layer::background:
      return "background";
    case Layer::local:
      return "local";
    case Layer::foreground:
      return "foreground";
  }
  return "";
}

std::size_t SvgDocument::path_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.size();
  return n;
}

std::vector<ClosedPathd> SvgDocument::flattened() const {
  std::vector<ClosedPathd> out;
  out.reserve(path_count());
  for (const auto& l : layers) {
    for (const auto& p : l) out.push_back(p.path);
  }
  return out;
}

std::vector<ClosedPathd> SvgDocument::layer_paths(Layer l) const {
  std::vector<ClosedPathd> out;
  for (const auto& p : layer(l)) out.push_back(p.path);
  return out;
}

}  // namespace vecanim
