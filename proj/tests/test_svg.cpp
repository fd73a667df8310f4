#include <doctest.h>

#include <regex>
#include <sstream>
#include <random>

#include "oracles.hpp"
#include "vecanim/commands.hpp"
#include "vecanim/svg.hpp"

using namespace vecanim;

namespace {

SvgDocument random_document(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> count(0, 6), segs(4, 12);
  SvgDocument doc;
  doc.width = 32 + int(200 * u(rng));
  doc.height = 32 + int(200 * u(rng));
  int id = 0;
  for (const Layer l : kLayers) {
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const int s = segs(rng);
      ClosedPathd::PointList pts(3 * s, 2);
      for (int r = 0; r < 3 * s; ++r) pts.row(r) << (u(rng) * 1.2 - 0.1) * doc.width, (u(rng) * 1.2 - 0.1) * doc.height;
      doc.layer(l).push_back({"p" + std::to_string(id++), ClosedPathd(pts, {u(rng), u(rng), u(rng), u(rng)})});
    }
  }
  return doc;
}

const char* kMinimal = R"(<?xml version="1.0"?>
<!-- comment -->
<svg xmlns="http://www.w3.org/2000/svg" width="10" height="10" viewBox="0 0 10 10">
  <g id="background"></g>
  <g id="local"/>
  <g id="foreground">
    <path id="a" d="M 1 1 C 2 1 3 1 4 1 C 4 2 4 3 4 4 C 3 4 2 4 1 4 C 1 3 1 2 1 1 Z" fill="#ff8000" fill-opacity="0.5"/>
  </g>
</svg>
)";

std::string with_path(const std::string& path_element) {
  std::string s = kMinimal;
  const std::string marker = "  </g>\n</svg>";
  s.replace(s.find(marker), marker.size(), "    " + path_element + "\n" + marker);
  return s;
}

}  // namespace

TEST_CASE("round-trip preserves geometry and color on random documents") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const SvgDocument doc = random_document(rng);
    const SvgDocument back = parse_svg(write_svg(doc));
    CHECK(back.width == doc.width);
    CHECK(back.height == doc.height);
    for (const Layer l : kLayers) {
      REQUIRE(back.layer(l).size() == doc.layer(l).size());
      for (std::size_t i = 0; i < doc.layer(l).size(); ++i) {
        const auto& a = doc.layer(l)[i];
        const auto& b = back.layer(l)[i];
        CHECK(a.id == b.id);
        REQUIRE(a.path.points().rows() == b.path.points().rows());
        CHECK((a.path.points() - b.path.points()).cwiseAbs().maxCoeff() <= 1e-4);
        CHECK((a.path.fill() - b.path.fill()).cwiseAbs().maxCoeff() <= 1.0 / 255);
      }
    }
    CHECK(write_svg(back) == write_svg(doc));
  }
}

TEST_CASE("writer output follows the subset grammar") {
  std::mt19937_64 rng(2);
  const std::string number = R"(-?\d+\.\d{4})";
  const std::string pt = number + " " + number;
  const std::regex d_attr("d=\"M " + pt + "( C " + pt + " " + pt + " " + pt + ")+ Z\"");
  const std::regex path_el("<path id=\"[^\"]+\" d=\"[^\"]+\" fill=\"#[0-9a-f]{6}\" fill-opacity=\"" + number + "\"/>");
  for (int trial = 0; trial < 10; ++trial) {
    const std::string svg = write_svg(random_document(rng));
    CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
    CHECK(svg.find("viewBox=\"0 0 ") != std::string::npos);
    const auto bg = svg.find("<g id=\"background\">"), lo = svg.find("<g id=\"local\">"),
               fg = svg.find("<g id=\"foreground\">");
    CHECK(bg < lo);
    CHECK(lo < fg);
    std::istringstream lines(svg);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find("<path") == std::string::npos) continue;
      const std::string trimmed = line.substr(line.find('<'));
      CHECK(std::regex_match(trimmed, path_el));
      CHECK(std::regex_search(trimmed, d_attr));
    }
  }
}

TEST_CASE("parser reads the minimal subset") {
  const SvgDocument doc = parse_svg(kMinimal);
  CHECK(doc.width == 10);
  CHECK(doc.layer(Layer::background).empty());
  REQUIRE(doc.layer(Layer::foreground).size() == 1);
  const ClosedPathd& p = doc.layer(Layer::foreground)[0].path;
  CHECK(p.segment_count() == 4);
  CHECK(p.fill()[0] == 1.0);
  CHECK(p.fill()[1] == doctest::Approx(128.0 / 255));
  CHECK(p.fill()[3] == 0.5);
}

TEST_CASE("foreign features are rejected by name") {
  const auto expect_unsupported = [](const std::string& text, const std::string& name) {
    try {
      parse_svg(text);
      FAIL("expected UnsupportedFeatureError for " << name);
    } catch (const UnsupportedFeatureError& e) {
      CHECK(std::string(e.what()).find(name) != std::string::npos);
    }
  };
  expect_unsupported(with_path("<circle cx=\"1\" cy=\"1\" r=\"1\"/>"), "circle");
  expect_unsupported(with_path("<path id=\"s\" d=\"M 0 0 C 1 1 1 1 2 2 Z\" stroke=\"#000000\"/>"), "stroke");
  expect_unsupported(with_path("<path id=\"t\" d=\"M 0 0 C 1 1 1 1 2 2 Z\" transform=\"scale(2)\"/>"), "transform");
  expect_unsupported(with_path("<path id=\"r\" d=\"M 0 0 A 1 1 0 0 1 2 2 Z\" fill=\"#000000\"/>"), "A");
  expect_unsupported(with_path("<path id=\"l\" d=\"M 0 0 L 2 2 Z\" fill=\"#000000\"/>"), "L");
  std::string doc = kMinimal;
  doc.replace(doc.find("<g id=\"local\"/>"), 15, "<g id=\"middle\"/>");
  CHECK_THROWS_AS(parse_svg(doc), ParseError);
  CHECK_THROWS_AS(parse_svg("<svg"), ParseError);
  CHECK_THROWS_AS(load_svg("/nonexistent/file.svg"), IoError);
}

TEST_CASE("rendering a round-tripped document matches the original") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    const SvgDocument doc = random_document(rng);
    const RasterImage a = render_document(doc, doc.width, doc.height, 4);
    const RasterImage b = render_document(parse_svg(write_svg(doc)), doc.width, doc.height, 4);
    // A 1e-4 coordinate shift can only flip samples lying that close to an edge.
    double mean = 0;
    for (int c = 0; c < 3; ++c) mean += (a.plane(c) - b.plane(c)).abs().mean() / 3;
    CHECK(mean <= 1e-3);
  }
  CHECK_THROWS_AS(render_document(SvgDocument{10, 10, {}}, 0, 10, 2), DomainError);
}
