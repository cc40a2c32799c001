#include "tdekws/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "tdekws/error.hpp"
#include "tdekws/model_io.hpp"

namespace tdekws {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

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

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

class Canvas {
 public:
  Canvas(const ChartText& text, Range x, Range y) : x_(x), y_(y) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
         << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\" "
         << "font-size=\"12\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" "
         << "text-anchor=\"middle\" font-size=\"15\">" << escape(text.title)
         << "</text>\n"
         << "<text x=\"" << num(kLeft + plot_w() / 2) << "\" y=\""
         << num(kHeight - 12) << "\" text-anchor=\"middle\">"
         << escape(text.x_label) << "</text>\n"
         << "<text transform=\"translate(16," << num(kTop + plot_h() / 2)
         << ") rotate(-90)\" text-anchor=\"middle\">" << escape(text.y_label)
         << "</text>\n"
         << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
         << num(plot_w()) << "\" height=\"" << num(plot_h())
         << "\" fill=\"none\" stroke=\"black\"/>\n";
  }

  static double plot_w() { return kWidth - kLeft - kRight; }
  static double plot_h() { return kHeight - kTop - kBottom; }
  double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * plot_w(); }
  double py(double y) const { return kTop + (y_.hi - y) / (y_.hi - y_.lo) * plot_h(); }

  void y_ticks() {
    for (int i = 0; i <= 5; ++i) {
      const double v = y_.lo + (y_.hi - y_.lo) * i / 5.0;
      out_ << "<line x1=\"" << kLeft - 4 << "\" x2=\"" << kLeft << "\" y1=\""
           << num(py(v)) << "\" y2=\"" << num(py(v)) << "\" stroke=\"black\"/>"
           << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(v) + 4)
           << "\" text-anchor=\"end\">" << tick_label(v) << "</text>\n";
    }
  }
  void x_ticks() {
    for (int i = 0; i <= 5; ++i) {
      const double v = x_.lo + (x_.hi - x_.lo) * i / 5.0;
      x_tick(px(v), tick_label(v));
    }
  }
  void x_tick(double x, const std::string& label) {
    const double base = kTop + plot_h();
    out_ << "<line x1=\"" << num(x) << "\" x2=\"" << num(x) << "\" y1=\""
         << num(base) << "\" y2=\"" << num(base + 4) << "\" stroke=\"black\"/>"
         << "<text x=\"" << num(x) << "\" y=\"" << num(base + 18)
         << "\" text-anchor=\"middle\">" << escape(label) << "</text>\n";
  }
  void legend(const std::vector<Series>& series) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      const double y = kTop + 10 + 18.0 * i;
      const double x = kWidth - kRight + 12;
      out_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y - 9)
           << "\" width=\"12\" height=\"12\" fill=\"" << color(i) << "\"/>"
           << "<text x=\"" << num(x + 18) << "\" y=\"" << num(y + 2) << "\">"
           << escape(series[i].label) << "</text>\n";
    }
  }
  void error_bar(double x, double y, double e, const char* c) {
    out_ << "<line x1=\"" << num(px(x)) << "\" x2=\"" << num(px(x))
         << "\" y1=\"" << num(py(y - e)) << "\" y2=\"" << num(py(y + e))
         << "\" stroke=\"" << c << "\"/>\n";
  }
  std::ostringstream& raw() { return out_; }
  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  Range x_, y_;
  std::ostringstream out_;
};

void check_series(const std::vector<Series>& series) {
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) {
      throw StructuralError("series '" + s.label + "': x and y differ in length");
    }
    if (!s.err.empty() && s.err.size() != s.y.size()) {
      throw StructuralError("series '" + s.label + "': err and y differ in length");
    }
  }
}

std::pair<Range, Range> ranges(const std::vector<Series>& series) {
  Range xr, yr;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xr.add(s.x[i]);
      const double e = s.err.empty() ? 0.0 : s.err[i];
      yr.add(s.y[i] - e);
      yr.add(s.y[i] + e);
    }
  }
  xr.finish();
  yr.finish();
  return {xr, yr};
}

}  // namespace

std::string line_chart(const ChartText& text, const std::vector<Series>& series) {
  check_series(series);
  const auto [xr, yr] = ranges(series);
  Canvas c(text, xr, yr);
  c.x_ticks();
  c.y_ticks();
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    c.raw() << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << color(i)
            << "\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      c.raw() << (k ? " " : "") << num(c.px(s.x[k])) << ',' << num(c.py(s.y[k]));
    }
    c.raw() << "\"/>\n";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      c.raw() << "<circle r=\"3\" fill=\"" << color(i) << "\" cx=\""
              << num(c.px(s.x[k])) << "\" cy=\"" << num(c.py(s.y[k])) << "\"/>\n";
      if (!s.err.empty()) c.error_bar(s.x[k], s.y[k], s.err[k], color(i));
    }
  }
  c.legend(series);
  return c.finish();
}

std::string scatter_chart(const ChartText& text,
                          const std::vector<Series>& series) {
  check_series(series);
  const auto [xr, yr] = ranges(series);
  Canvas c(text, xr, yr);
  c.x_ticks();
  c.y_ticks();
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      c.raw() << "<circle r=\"4\" fill-opacity=\"0.7\" fill=\"" << color(i)
              << "\" cx=\"" << num(c.px(s.x[k])) << "\" cy=\""
              << num(c.py(s.y[k])) << "\"/>\n";
    }
  }
  c.legend(series);
  return c.finish();
}

std::string bar_chart(const ChartText& text,
                      const std::vector<std::string>& categories,
                      const std::vector<Series>& series) {
  for (const auto& s : series) {
    if (s.y.size() != categories.size()) {
      throw StructuralError("series '" + s.label + "' needs one value per category");
    }
  }
  Range xr{-0.5, categories.empty() ? 0.5 : categories.size() - 0.5};
  Range yr;
  yr.add(0.0);
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.y.size(); ++k) {
      yr.add(s.y[k] + (s.err.empty() ? 0.0 : s.err[k]));
    }
  }
  yr.finish();
  yr.lo = std::min(yr.lo, 0.0);
  Canvas c(text, xr, yr);
  c.y_ticks();
  const double group = 0.8;
  const double bar = series.empty() ? group : group / series.size();
  for (std::size_t k = 0; k < categories.size(); ++k) {
    c.x_tick(c.px(static_cast<double>(k)), categories[k]);
    for (std::size_t i = 0; i < series.size(); ++i) {
      const double x0 = k - group / 2 + bar * i;
      const double v = series[i].y[k];
      const double top = c.py(std::max(v, 0.0));
      const double bottom = c.py(std::min(v, 0.0));
      c.raw() << "<rect fill=\"" << color(i) << "\" x=\"" << num(c.px(x0))
              << "\" y=\"" << num(top) << "\" width=\""
              << num(c.px(x0 + bar) - c.px(x0)) << "\" height=\""
              << num(bottom - top) << "\"/>\n";
      if (!series[i].err.empty()) {
        c.error_bar(x0 + bar / 2, v, series[i].err[k], "black");
      }
    }
  }
  c.legend(series);
  return c.finish();
}

void save_svg(const std::filesystem::path& path, const std::string& svg) {
  write_text_file(path, svg);
}

}  // namespace tdekws
