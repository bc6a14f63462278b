#pragma once

// Minimal SVG writers for scenes on the unit square and for line charts.

#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "goalinfer/eval.hpp"
#include "goalinfer/geom.hpp"
#include "goalinfer/planner.hpp"

namespace goalinfer {

std::string xml_escape(const std::string& s);

/// Accumulates SVG elements in pixel coordinates.
class SvgCanvas {
 public:
  SvgCanvas(double width, double height);

  void rect(double x, double y, double w, double h, const std::string& style);
  void line(double x1, double y1, double x2, double y2, const std::string& style);
  void polyline(std::span<const Point> pts, const std::string& style);
  void polygon(std::span<const Point> pts, const std::string& style);
  void circle(double cx, double cy, double r, const std::string& style, const std::string& cls = {});
  void text(double x, double y, const std::string& content, const std::string& style = {});

  std::string str() const;

 private:
  double width_;
  double height_;
  std::ostringstream body_;
};

/// Scene on the unit square, y pointing up, drawn at size x size pixels.
class SceneSvg {
 public:
  explicit SceneSvg(double size = 480.0);

  void map(const WorldMap& m, const std::string& fill = "#555");
  void polygon(const Polygon& p, const std::string& style);
  void path(std::span<const Point> pts, const std::string& stroke, double width = 1.0, double opacity = 1.0);
  void series(const LocationSeries& z, const std::string& fill, double radius = 3.0);
  void start(const Point& p);
  /// One circle element carrying the given class.
  void sample(const Point& p, const std::string& cls, const std::string& fill);
  void title(const std::string& t);

  std::string str() const { return canvas_.str(); }

 private:
  Point to_px(const Point& p) const;
  double size_;
  SvgCanvas canvas_;
};

/// Binned KL against transitions on a log axis, one line per strategy.
/// marked[k], when present, adds a circle to strategy k's line.
std::string render_curve_svg(const ConvergenceCurve& curve, std::span<const StrategySpec> strategies,
                             std::span<const int> marked);

}  // namespace goalinfer
