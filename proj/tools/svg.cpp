#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace etc::report {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

}  // namespace

std::string render(const std::vector<Chart>& panels, int width, int ph) {
  const int ml = 70, mr = 130, mt = 30, mb = 40;
  const int height = static_cast<int>(panels.size()) * ph;
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (size_t p = 0; p < panels.size(); ++p) {
    const auto& ch = panels[p];
    const double top = p * ph + mt, bot = (p + 1) * ph - mb;
    const double left = ml, right = width - mr;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto ty = [&](double v) { return ch.logy ? std::log10(std::max(v, 1e-300)) : v; };
    for (const auto& s : ch.series)
      for (size_t k = 0; k < s.x.size(); ++k) {
        if (!std::isfinite(s.y[k]) || (ch.logy && s.y[k] <= 0)) continue;
        x0 = std::min(x0, s.x[k]);
        x1 = std::max(x1, s.x[k]);
        y0 = std::min(y0, ty(s.y[k]));
        y1 = std::max(y1, ty(s.y[k]));
      }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 <= 0) y0 -= 0.5, y1 += 0.5;
    bool stems = false;
    for (const auto& s : ch.series) stems = stems || s.stems;
    if (!ch.logy && stems) y0 = std::min(y0, 0.0);
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto X = [&](double v) { return left + (v - x0) / (x1 - x0) * (right - left); };
    auto Y = [&](double v) { return bot - (ty(v) - y0) / (y1 - y0) * (bot - top); };

    os << "<text x=\"" << left << "\" y=\"" << top - 10 << "\" font-size=\"13\">" << esc(ch.title)
       << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left
       << "\" height=\"" << bot - top << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      double fx = x0 + k * (x1 - x0) / 4, fy = y0 + k * (y1 - y0) / 4;
      double px = X(fx), py = bot - k * (bot - top) / 4;
      os << "<line x1=\"" << px << "\" y1=\"" << bot << "\" x2=\"" << px << "\" y2=\"" << bot + 4
         << "\" stroke=\"#444\"/><text x=\"" << px << "\" y=\"" << bot + 16
         << "\" text-anchor=\"middle\">" << num(fx) << "</text>\n";
      os << "<line x1=\"" << left - 4 << "\" y1=\"" << py << "\" x2=\"" << left << "\" y2=\"" << py
         << "\" stroke=\"#444\"/><text x=\"" << left - 6 << "\" y=\"" << py + 4
         << "\" text-anchor=\"end\">" << (ch.logy ? "1e" + num(fy) : num(fy)) << "</text>\n";
    }
    os << "<text x=\"" << (left + right) / 2 << "\" y=\"" << bot + 32
       << "\" text-anchor=\"middle\">" << esc(ch.xlabel) << "</text>\n";
    os << "<text transform=\"translate(14," << (top + bot) / 2
       << ") rotate(-90)\" text-anchor=\"middle\">" << esc(ch.ylabel) << "</text>\n";

    for (size_t si = 0; si < ch.series.size(); ++si) {
      const auto& s = ch.series[si];
      const char* col = kColors[si % 8];
      if (s.stems) {
        const double base = ch.logy ? bot : std::clamp(Y(0.0), top, bot);
        for (size_t k = 0; k < s.x.size(); ++k) {
          if (!std::isfinite(s.y[k])) continue;
          os << "<line x1=\"" << X(s.x[k]) << "\" y1=\"" << base << "\" x2=\"" << X(s.x[k])
             << "\" y2=\"" << Y(s.y[k]) << "\" stroke=\"" << col << "\"/><circle cx=\""
             << X(s.x[k]) << "\" cy=\"" << Y(s.y[k]) << "\" r=\"2\" fill=\"" << col << "\"/>\n";
        }
      } else {
        std::ostringstream pts;
        pts << std::fixed << std::setprecision(2);
        int cnt = 0;
        for (size_t k = 0; k < s.x.size(); ++k) {
          if (!std::isfinite(s.y[k]) || (ch.logy && s.y[k] <= 0)) continue;
          pts << X(s.x[k]) << "," << Y(s.y[k]) << " ";
          ++cnt;
        }
        if (cnt == 1) {
          for (size_t k = 0; k < s.x.size(); ++k)
            if (std::isfinite(s.y[k]))
              os << "<circle cx=\"" << X(s.x[k]) << "\" cy=\"" << Y(s.y[k]) << "\" r=\"3\" fill=\""
                 << col << "\"/>\n";
        } else if (cnt > 1) {
          os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\""
             << pts.str() << "\"/>\n";
        }
      }
      const double ly = top + 14 + 16 * si;
      os << "<line x1=\"" << right + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << right + 30
         << "\" y2=\"" << ly - 4 << "\" stroke=\"" << col << "\" stroke-width=\"2\"/><text x=\""
         << right + 34 << "\" y=\"" << ly << "\">" << esc(s.name) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace etc::report
