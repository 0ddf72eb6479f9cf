#include "rinst/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "rinst/errors.hpp"

namespace rinst {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 150;
constexpr int kMarginTop = 36;
constexpr int kMarginBottom = 48;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

const char* palette(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

void frame(std::ostringstream& os, const ChartOptions& opt, double lo, double hi,
           bool log_y) {
  const int pw = opt.width - kMarginLeft - kMarginRight;
  const int ph = opt.height - kMarginTop - kMarginBottom;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
     << opt.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << opt.width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(opt.title) << "</text>\n";
  os << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << pw
     << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double y = kMarginTop + ph * (1.0 - f);
    double v = lo + f * (hi - lo);
    if (log_y) v = std::pow(10.0, v);
    os << "<line x1=\"" << kMarginLeft - 4 << "\" x2=\"" << kMarginLeft + pw << "\" y1=\""
       << num(y) << "\" y2=\"" << num(y) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << num(y + 4)
       << "\" text-anchor=\"end\">" << tick(v) << "</text>\n";
  }
  os << "<text x=\"" << kMarginLeft + pw / 2 << "\" y=\"" << opt.height - 10
     << "\" text-anchor=\"middle\">" << escape(opt.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << kMarginTop + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(opt.y_label) << "</text>\n";
}

void legend(std::ostringstream& os, const ChartOptions& opt,
            const std::vector<std::pair<std::string, std::string>>& entries) {
  const int x = opt.width - kMarginRight + 12;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const int y = kMarginTop + 10 + static_cast<int>(i) * 18;
    os << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"10\" fill=\""
       << entries[i].second << "\"/>\n";
    os << "<text x=\"" << x + 18 << "\" y=\"" << y << "\">" << escape(entries[i].first)
       << "</text>\n";
  }
}

}  // namespace

std::string line_chart_svg(const std::vector<LineSeries>& series, const ChartOptions& opt) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t n = 1;
  auto tf = [&](double v) { return opt.log_y ? std::log10(v) : v; };
  for (const auto& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y) {
      if (!std::isfinite(v) || (opt.log_y && v <= 0.0)) continue;
      lo = std::min(lo, tf(v));
      hi = std::max(hi, tf(v));
    }
  }
  if (!(lo <= hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.04 * (hi - lo);
  lo -= pad;
  hi += pad;

  std::ostringstream os;
  frame(os, opt, lo, hi, opt.log_y);
  const int pw = opt.width - kMarginLeft - kMarginRight;
  const int ph = opt.height - kMarginTop - kMarginBottom;
  const double xscale = n > 1 ? static_cast<double>(pw) / static_cast<double>(n - 1) : 0.0;

  std::vector<std::pair<std::string, std::string>> entries;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::string color = s.color.empty() ? palette(si) : s.color;
    entries.emplace_back(s.label, color);
    std::string path;
    bool pen_down = false;
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double v = s.y[i];
      if (!std::isfinite(v) || (opt.log_y && v <= 0.0)) {
        pen_down = false;
        continue;
      }
      const double x = kMarginLeft + xscale * static_cast<double>(i);
      const double y = kMarginTop + ph * (1.0 - (tf(v) - lo) / (hi - lo));
      path += (pen_down ? "L" : "M") + num(x) + " " + num(y) + " ";
      pen_down = true;
    }
    os << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.2\"" << (s.dashed ? " stroke-dasharray=\"4 3\"" : "")
       << "/>\n";
  }
  legend(os, opt, entries);
  os << "</svg>\n";
  return os.str();
}

std::string bar_chart_svg(const std::vector<std::string>& series_names,
                          const std::vector<BarGroup>& groups, const ChartOptions& opt) {
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& g : groups) {
    for (double v : g.values) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  hi += 0.05 * (hi - lo);

  std::ostringstream os;
  frame(os, opt, lo, hi, false);
  const int pw = opt.width - kMarginLeft - kMarginRight;
  const int ph = opt.height - kMarginTop - kMarginBottom;
  const double gw = groups.empty() ? pw : static_cast<double>(pw) / groups.size();
  const double bw = 0.8 * gw / std::max<std::size_t>(series_names.size(), 1);
  auto ypos = [&](double v) { return kMarginTop + ph * (1.0 - (v - lo) / (hi - lo)); };
  const double y0 = ypos(0.0);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double gx = kMarginLeft + gw * gi + 0.1 * gw;
    for (std::size_t si = 0; si < groups[gi].values.size() && si < series_names.size(); ++si) {
      const double v = groups[gi].values[si];
      if (!std::isfinite(v)) continue;
      const double top = std::min(ypos(v), y0);
      os << "<rect x=\"" << num(gx + bw * si) << "\" y=\"" << num(top) << "\" width=\""
         << num(bw * 0.92) << "\" height=\"" << num(std::abs(ypos(v) - y0)) << "\" fill=\""
         << palette(si) << "\"><title>" << escape(series_names[si]) << ": " << tick(v)
         << "</title></rect>\n";
    }
    os << "<text x=\"" << num(kMarginLeft + gw * (gi + 0.5)) << "\" y=\""
       << opt.height - kMarginBottom + 16 << "\" text-anchor=\"middle\">"
       << escape(groups[gi].label) << "</text>\n";
  }
  std::vector<std::pair<std::string, std::string>> entries;
  for (std::size_t si = 0; si < series_names.size(); ++si) {
    entries.emplace_back(series_names[si], palette(si));
  }
  legend(os, opt, entries);
  os << "</svg>\n";
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace rinst
