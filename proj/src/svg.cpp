#include "vecanim/svg.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace vecanim {

namespace {

void put_number(std::string& out, double v) {
  char buf[48];
  // Avoid "-0.0000" so identical geometry always prints identically.
  if (std::abs(v) < 5e-5) v = 0.0;
  std::snprintf(buf, sizeof buf, "%.4f", v);
  out += buf;
}

void put_point(std::string& out, const Eigen::RowVector2d& p) {
  put_number(out, p.x());
  out += ' ';
  put_number(out, p.y());
}

std::string hex_color(const Rgbad& c) {
  char buf[8];
  const auto q = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255)); };
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", q(c[0]), q(c[1]), q(c[2]));
  return buf;
}

std::string path_data(const ClosedPathd& path) {
  const auto& pts = path.points();
  std::string d = "M ";
  put_point(d, pts.row(0));
  for (int k = 0; k < path.segment_count(); ++k) {
    d += " C ";
    put_point(d, pts.row(path.point_index(k, 1)));
    d += ' ';
    put_point(d, pts.row(path.point_index(k, 2)));
    d += ' ';
    put_point(d, pts.row(path.point_index(k, 3)));
  }
  d += " Z";
  return d;
}

}  // namespace

std::string write_svg(const SvgDocument& doc) {
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         std::to_string(doc.width) + "\" height=\"" + std::to_string(doc.height) +
         "\" viewBox=\"0 0 " + std::to_string(doc.width) + " " + std::to_string(doc.height) +
         "\">\n";
  for (const Layer layer : kLayers) {
    out += "  <g id=\"";
    out += layer_name(layer);
    out += "\">\n";
    for (const DocPath& p : doc.layer(layer)) {
      out += "    <path id=\"" + p.id + "\" d=\"" + path_data(p.path) + "\" fill=\"" +
             hex_color(p.path.fill()) + "\" fill-opacity=\"";
      put_number(out, std::clamp(p.path.fill()[3], 0.0, 1.0));
      out += "\"/>\n";
    }
    out += "  </g>\n";
  }
  out += "</svg>\n";
  return out;
}

namespace {

struct Tag {
  std::string name;
  std::map<std::string, std::string> attrs;
  bool closing = false;
  bool self_closing = false;
};

class XmlReader {
 public:
  explicit XmlReader(std::string_view text) : s_(text) {}

  // Next tag, skipping text, comments and processing instructions.
  std::optional<Tag> next() {
    while (true) {
      const std::size_t lt = s_.find('<', pos_);
      if (lt == std::string_view::npos) {
        if (s_.find_first_not_of(" \t\r\n", pos_) != std::string_view::npos) {
          throw ParseError("svg: trailing text after the last element");
        }
        return std::nullopt;
      }
      pos_ = lt;
      if (s_.compare(pos_, 4, "<!--") == 0) {
        skip_past("-->");
      } else if (s_.compare(pos_, 2, "<?") == 0) {
        skip_past("?>");
      } else if (s_.compare(pos_, 2, "<!") == 0) {
        throw UnsupportedFeatureError("svg: unsupported markup declaration");
      } else {
        return read_tag();
      }
    }
  }

 private:
  void skip_past(std::string_view end) {
    const std::size_t e = s_.find(end, pos_);
    if (e == std::string_view::npos) throw ParseError("svg: unterminated markup");
    pos_ = e + end.size();
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string read_name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '-' ||
            s_[pos_] == ':' || s_[pos_] == '_' || s_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ == start) throw ParseError("svg: expected a name at offset " + std::to_string(pos_));
    return std::string(s_.substr(start, pos_ - start));
  }

  Tag read_tag() {
    Tag tag;
    ++pos_;  // '<'
    if (pos_ < s_.size() && s_[pos_] == '/') {
      tag.closing = true;
      ++pos_;
    }
    tag.name = read_name();
    while (true) {
      skip_ws();
      if (pos_ >= s_.size()) throw ParseError("svg: unterminated tag <" + tag.name + ">");
      if (s_[pos_] == '>') {
        ++pos_;
        return tag;
      }
      if (s_.compare(pos_, 2, "/>") == 0) {
        pos_ += 2;
        tag.self_closing = true;
        return tag;
      }
      const std::string key = read_name();
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != '=') {
        throw ParseError("svg: attribute '" + key + "' of <" + tag.name + "> has no value");
      }
      ++pos_;
      skip_ws();
      if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) {
        throw ParseError("svg: attribute '" + key + "' of <" + tag.name + "> is not quoted");
      }
      const char quote = s_[pos_++];
      const std::size_t end = s_.find(quote, pos_);
      if (end == std::string_view::npos) throw ParseError("svg: unterminated attribute value");
      tag.attrs[key] = std::string(s_.substr(pos_, end - pos_));
      pos_ = end + 1;
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

double parse_double(std::string_view v, const std::string& what) {
  double out = 0;
  const auto* first = v.data();
  const auto* last = v.data() + v.size();
  while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  if (first < last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(out)) {
    throw ParseError("svg: invalid number '" + std::string(v) + "' in " + what);
  }
  return out;
}

int parse_dimension(const Tag& tag, const std::string& key) {
  const auto it = tag.attrs.find(key);
  if (it == tag.attrs.end()) throw ParseError("svg: <svg> is missing '" + key + "'");
  std::string v = it->second;
  if (v.size() > 2 && v.compare(v.size() - 2, 2, "px") == 0) v.resize(v.size() - 2);
  const double d = parse_double(v, "<svg " + key + ">");
  if (d != std::floor(d)) throw ParseError("svg: " + key + " must be an integer");
  return static_cast<int>(d);
}

void check_attrs(const Tag& tag, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : tag.attrs) {
    bool ok = false;
    for (const auto a : allowed) ok = ok || key == a;
    if (!ok) {
      throw UnsupportedFeatureError("svg: unsupported attribute '" + key + "' on <" + tag.name +
                                    ">");
    }
  }
}

ClosedPathd parse_path_data(std::string_view d, const Rgbad& fill, const std::string& id) {
  const std::string what = "path '" + id + "'";
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < d.size()) {
    const char ch = d[i];
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(ch)) && ch != 'e' && ch != 'E') {
      if (ch != 'M' && ch != 'C' && ch != 'Z') {
        throw UnsupportedFeatureError("svg: unsupported path command '" + std::string(1, ch) +
                                      "' in <path> " + what);
      }
      tokens.emplace_back(1, ch);
      ++i;
    } else {
      std::size_t j = i + 1;
      while (j < d.size() && !std::isspace(static_cast<unsigned char>(d[j])) && d[j] != ',' &&
             !(std::isalpha(static_cast<unsigned char>(d[j])) && d[j] != 'e' && d[j] != 'E') &&
             !(d[j] == '-' && d[j - 1] != 'e' && d[j - 1] != 'E')) {
        ++j;
      }
      tokens.emplace_back(d.substr(i, j - i));
      i = j;
    }
  }
  std::size_t t = 0;
  const auto number = [&]() {
    if (t >= tokens.size() || std::isalpha(static_cast<unsigned char>(tokens[t][0]))) {
      throw ParseError("svg: truncated path data in " + what);
    }
    return parse_double(tokens[t++], what);
  };
  const auto point = [&]() {
    const double x = number();
    const double y = number();
    return Point2d(x, y);
  };
  if (tokens.empty() || tokens[t++] != "M") throw ParseError("svg: " + what + " must start with M");
  const Point2d start = point();
  Point2d cursor = start;
  std::vector<CubicBezierd> segs;
  bool closed = false;
  while (t < tokens.size()) {
    if (tokens[t] == "C") {
      ++t;
      // Repeated coordinate triples continue the C command.
      do {
        const Point2d b = point(), c = point(), e = point();
        segs.emplace_back(cursor, b, c, e);
        cursor = e;
      } while (t < tokens.size() && !std::isalpha(static_cast<unsigned char>(tokens[t][0])));
    } else if (tokens[t] == "Z") {
      ++t;
      closed = true;
      if (t != tokens.size()) throw UnsupportedFeatureError("svg: multiple subpaths in " + what);
    } else {
      throw UnsupportedFeatureError("svg: unsupported path command '" + tokens[t] + "' in " +
                                    what);
    }
  }
  if (!closed) throw ParseError("svg: " + what + " is not closed with Z");
  if (segs.empty()) throw ParseError("svg: " + what + " has no curve segments");
  if ((cursor - start).norm() > 1e-9) {
    // Z closes with a straight edge; express it as a cubic.
    segs.emplace_back(cursor, cursor + (start - cursor) / 3.0, cursor + 2.0 * (start - cursor) / 3.0,
                      start);
  }
  segs.back().ctrl.row(3) = start.transpose();
  return ClosedPathd::from_segments(segs, fill);
}

Rgbad parse_fill(const Tag& tag, const std::string& id) {
  const auto it = tag.attrs.find("fill");
  if (it == tag.attrs.end()) throw ParseError("svg: path '" + id + "' has no fill");
  const std::string& v = it->second;
  if (v.size() != 7 || v[0] != '#') {
    throw UnsupportedFeatureError("svg: unsupported fill '" + v + "' on path '" + id + "'");
  }
  Rgbad c;
  for (int k = 0; k < 3; ++k) {
    int byte = 0;
    const auto res = std::from_chars(v.data() + 1 + 2 * k, v.data() + 3 + 2 * k, byte, 16);
    if (res.ec != std::errc() || res.ptr != v.data() + 3 + 2 * k) {
      throw ParseError("svg: invalid fill '" + v + "' on path '" + id + "'");
    }
    c[k] = byte / 255.0;
  }
  c[3] = 1.0;
  if (const auto op = tag.attrs.find("fill-opacity"); op != tag.attrs.end()) {
    c[3] = std::clamp(parse_double(op->second, "fill-opacity of '" + id + "'"), 0.0, 1.0);
  }
  return c;
}

}  // namespace

SvgDocument parse_svg(std::string_view text) {
  XmlReader reader(text);
  SvgDocument doc;
  bool in_svg = false, done = false;
  int group = -1;  // open layer group, if any
  bool seen[3] = {false, false, false};
  while (auto tag = reader.next()) {
    if (done) throw ParseError("svg: content after </svg>");
    if (tag->name == "svg") {
      if (tag->closing) {
        if (!in_svg || group >= 0) throw ParseError("svg: unbalanced </svg>");
        done = true;
        continue;
      }
      if (in_svg) throw ParseError("svg: nested <svg>");
      check_attrs(*tag, {"xmlns", "xmlns:xlink", "version", "width", "height", "viewBox"});
      doc.width = parse_dimension(*tag, "width");
      doc.height = parse_dimension(*tag, "height");
      if (doc.width <= 0 || doc.height <= 0) throw ParseError("svg: non-positive dimensions");
      in_svg = true;
      if (tag->self_closing) done = true;
    } else if (tag->name == "g") {
      if (!in_svg) throw ParseError("svg: <g> outside <svg>");
      if (tag->closing) {
        if (group < 0) throw ParseError("svg: unbalanced </g>");
        group = -1;
        continue;
      }
      if (group >= 0) throw UnsupportedFeatureError("svg: nested <g> groups");
      check_attrs(*tag, {"id"});
      const auto id = tag->attrs.find("id");
      std::optional<Layer> layer;
      for (const Layer l : kLayers) {
        if (id != tag->attrs.end() && id->second == layer_name(l)) layer = l;
      }
      if (!layer) throw ParseError("svg: <g> must have id background, local or foreground");
      const int idx = static_cast<int>(*layer);
      if (seen[idx]) throw ParseError("svg: duplicate group '" + id->second + "'");
      for (int k = idx + 1; k < 3; ++k) {
        if (seen[k]) throw ParseError("svg: groups out of order at '" + id->second + "'");
      }
      seen[idx] = true;
      if (!tag->self_closing) group = idx;
    } else if (tag->name == "path") {
      if (tag->closing) continue;
      if (group < 0) throw ParseError("svg: <path> outside a layer group");
      check_attrs(*tag, {"id", "d", "fill", "fill-opacity"});
      const auto idit = tag->attrs.find("id");
      const std::string id = idit == tag->attrs.end() ? "" : idit->second;
      const auto dit = tag->attrs.find("d");
      if (dit == tag->attrs.end()) throw ParseError("svg: path '" + id + "' has no 'd'");
      const Rgbad fill = parse_fill(*tag, id);
      doc.layer(static_cast<Layer>(group)).push_back({id, parse_path_data(dit->second, fill, id)});
      if (!tag->self_closing) {
        auto end = reader.next();
        if (!end || !end->closing || end->name != "path") {
          throw UnsupportedFeatureError("svg: <path> '" + id + "' has child elements");
        }
      }
    } else {
      throw UnsupportedFeatureError("svg: unsupported element <" + tag->name + ">");
    }
  }
  if (!in_svg) throw ParseError("svg: no <svg> root element");
  if (!done) throw ParseError("svg: missing </svg>");
  return doc;
}

void save_svg(const SvgDocument& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write SVG '" + path.string() + "'");
  out << write_svg(doc);
  if (!out) throw IoError("failed writing SVG '" + path.string() + "'");
}

SvgDocument load_svg(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read SVG '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_svg(ss.str());
  } catch (const UnsupportedFeatureError& e) {
    throw UnsupportedFeatureError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace vecanim
