#include "goalinfer/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>

namespace goalinfer {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

std::string points_attr(std::span<const Point> pts) {
  std::string out;
  for (const auto& p : pts) {
    if (!out.empty()) out += ' ';
    out += num(p[0]) + "," + num(p[1]);
  }
  return out;
}

constexpr std::array<const char*, 6> kPalette = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

SvgCanvas::SvgCanvas(double width, double height) : width_(width), height_(height) {}

void SvgCanvas::rect(double x, double y, double w, double h, const std::string& style) {
  body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\""
        << num(h) << "\" style=\"" << xml_escape(style) << "\"/>\n";
}

void SvgCanvas::line(double x1, double y1, double x2, double y2, const std::string& style) {
  body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\""
        << num(y2) << "\" style=\"" << xml_escape(style) << "\"/>\n";
}

void SvgCanvas::polyline(std::span<const Point> pts, const std::string& style) {
  body_ << "<polyline points=\"" << points_attr(pts) << "\" style=\"" << xml_escape(style) << "\"/>\n";
}

void SvgCanvas::polygon(std::span<const Point> pts, const std::string& style) {
  body_ << "<polygon points=\"" << points_attr(pts) << "\" style=\"" << xml_escape(style) << "\"/>\n";
}

void SvgCanvas::circle(double cx, double cy, double r, const std::string& style, const std::string& cls) {
  body_ << "<circle";
  if (!cls.empty()) body_ << " class=\"" << xml_escape(cls) << "\"";
  body_ << " cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r) << "\" style=\""
        << xml_escape(style) << "\"/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& content, const std::string& style) {
  body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\"";
  if (!style.empty()) body_ << " style=\"" << xml_escape(style) << "\"";
  body_ << ">" << xml_escape(content) << "</text>\n";
}

std::string SvgCanvas::str() const {
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_) << "\" height=\""
     << num(height_) << "\" viewBox=\"0 0 " << num(width_) << " " << num(height_) << "\">\n"
     << body_.str() << "</svg>\n";
  return os.str();
}

SceneSvg::SceneSvg(double size) : size_(size), canvas_(size, size) {
  canvas_.rect(0, 0, size, size, "fill:#fafafa;stroke:#222;stroke-width:1");
}

Point SceneSvg::to_px(const Point& p) const { return {p[0] * size_, (1.0 - p[1]) * size_}; }

void SceneSvg::map(const WorldMap& m, const std::string& fill) {
  for (const auto& poly : m.obstacles()) polygon(poly, "fill:" + fill + ";stroke:none");
}

void SceneSvg::polygon(const Polygon& p, const std::string& style) {
  std::vector<Point> px;
  for (const auto& v : p.vertices()) px.push_back(to_px(v));
  canvas_.polygon(px, style);
}

void SceneSvg::path(std::span<const Point> pts, const std::string& stroke, double width, double opacity) {
  std::vector<Point> px;
  for (const auto& v : pts) px.push_back(to_px(v));
  canvas_.polyline(px, "fill:none;stroke:" + stroke + ";stroke-width:" + num(width) +
                           ";stroke-opacity:" + num(opacity));
}

void SceneSvg::series(const LocationSeries& z, const std::string& fill, double radius) {
  for (Eigen::Index k = 0; k < z.cols(); ++k) {
    const Point p = to_px(z.col(k));
    canvas_.rect(p[0] - radius, p[1] - radius, 2 * radius, 2 * radius, "fill:" + fill + ";stroke:#333;stroke-width:0.5");
  }
}

void SceneSvg::start(const Point& p) {
  const Point q = to_px(p);
  canvas_.rect(q[0] - 5, q[1] - 5, 10, 10, "fill:#ff8c00;stroke:#333;stroke-width:1");
}

void SceneSvg::sample(const Point& p, const std::string& cls, const std::string& fill) {
  const Point q = to_px(p);
  canvas_.circle(q[0], q[1], 3.5, "fill:" + fill + ";fill-opacity:0.7;stroke:#222;stroke-width:0.5", cls);
}

void SceneSvg::title(const std::string& t) { canvas_.text(8, 18, t, "font:14px sans-serif;fill:#111"); }

std::string render_curve_svg(const ConvergenceCurve& curve, std::span<const StrategySpec> strategies,
                             std::span<const int> marked) {
  constexpr double W = 640, H = 420, L = 70, R = 170, T = 30, B = 50;
  SvgCanvas c(W, H);
  c.rect(0, 0, W, H, "fill:#fff;stroke:none");

  std::map<std::string, std::vector<const CurvePoint*>> lines;
  double max_kl = 0.0;
  int min_t = std::numeric_limits<int>::max();
  int max_t = 1;
  for (const auto& p : curve.points) {
    lines[p.strategy].push_back(&p);
    max_kl = std::max(max_kl, p.kl);
    min_t = std::min(min_t, std::max(p.transitions, 1));
    max_t = std::max(max_t, p.transitions);
  }
  if (curve.points.empty()) min_t = 1;
  if (max_kl <= 0.0) max_kl = 1.0;
  const double lo = std::log10(static_cast<double>(min_t));
  const double hi = std::max(std::log10(static_cast<double>(max_t)), lo + 1.0);
  // Zero transitions sit at the left edge alongside the smallest positive count.
  auto x_of = [&](int t) { return L + (std::log10(std::max(t, 1)) - lo) / (hi - lo) * (W - L - R); };
  auto y_of = [&](double kl) { return H - B - kl / (1.05 * max_kl) * (H - T - B); };

  c.line(L, H - B, W - R, H - B, "stroke:#222");
  c.line(L, T, L, H - B, "stroke:#222");
  for (int e = static_cast<int>(std::floor(lo)); e <= static_cast<int>(std::ceil(hi)); ++e) {
    const double x = L + (e - lo) / (hi - lo) * (W - L - R);
    if (x < L - 1e-9 || x > W - R + 1e-9) continue;
    c.line(x, H - B, x, H - B + 5, "stroke:#222");
    c.text(x - 10, H - B + 20, "1e" + std::to_string(e), "font:11px sans-serif");
  }
  for (int k = 0; k <= 4; ++k) {
    const double v = 1.05 * max_kl * k / 4.0;
    c.line(L - 5, y_of(v), L, y_of(v), "stroke:#222");
    c.text(8, y_of(v) + 4, num(v), "font:11px sans-serif");
  }
  c.text(L + 150, H - 10, "MH transitions", "font:12px sans-serif");
  c.text(8, 18, "binned KL from reference", "font:12px sans-serif");

  for (std::size_t k = 0; k < strategies.size(); ++k) {
    const std::string label = strategies[k].label();
    const auto it = lines.find(label);
    if (it == lines.end()) continue;
    const std::string colour = kPalette[k % kPalette.size()];
    std::vector<Point> pts;
    for (const CurvePoint* p : it->second) pts.emplace_back(x_of(p->transitions), y_of(p->kl));
    c.polyline(pts, "fill:none;stroke:" + colour + ";stroke-width:2");
    if (k < marked.size()) {
      for (const CurvePoint* p : it->second) {
        if (p->transitions == marked[k]) {
          c.circle(x_of(p->transitions), y_of(p->kl), 6, "fill:none;stroke:" + colour + ";stroke-width:2", "marker");
        }
      }
    }
    const double ly = T + 20.0 * static_cast<double>(k);
    c.line(W - R + 15, ly, W - R + 40, ly, "stroke:" + colour + ";stroke-width:2");
    c.text(W - R + 45, ly + 4, label, "font:12px sans-serif");
  }
  return c.str();
}

}  // namespace goalinfer
