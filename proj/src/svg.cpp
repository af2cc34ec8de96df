#include "optospring/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace optospring {

namespace {

// Fixed layout: 860 x 560 canvas with room for a legend / color bar on the
// right. All coordinates are plain pixels.
constexpr double canvas_w = 860.0, canvas_h = 560.0;
constexpr double margin_l = 90.0, margin_r = 190.0, margin_t = 50.0, margin_b = 65.0;
constexpr double plot_w = canvas_w - margin_l - margin_r;
constexpr double plot_h = canvas_h - margin_t - margin_b;

const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                         "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v, const char* spec = "%.2f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void feed(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad(double fraction) {
        if (!(lo <= hi)) {  // nothing fed; pick an arbitrary unit box
            lo = 0.0;
            hi = 1.0;
            return;
        }
        if (lo == hi) {
            const double bump = lo == 0.0 ? 1.0 : std::abs(lo) * 0.5;
            lo -= bump;
            hi += bump;
            return;
        }
        const double w = hi - lo;
        lo -= fraction * w;
        hi += fraction * w;
    }
};

/// Tick step of the form {1,2,5} * 10^k giving 4-8 ticks over the range.
double nice_step(double span) {
    const double rough = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(rough)));
    const double r = rough / mag;
    if (r < 1.5) return mag;
    if (r < 3.5) return 2.0 * mag;
    if (r < 7.5) return 5.0 * mag;
    return 10.0 * mag;
}

class Chart {
  public:
    Chart(const std::string& title, const std::string& x_label, const std::string& y_label,
          Range x, Range y, bool log_y)
        : x_(x), y_(y), log_y_(log_y) {
        body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(canvas_w, "%g") +
                 "\" height=\"" + fmt(canvas_h, "%g") +
                 "\" font-family=\"Helvetica, Arial, sans-serif\" font-size=\"13\">\n";
        body_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        body_ += "<text x=\"" + fmt(margin_l + plot_w / 2) +
                 "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" + escape(title) +
                 "</text>\n";
        body_ += "<text x=\"" + fmt(margin_l + plot_w / 2) + "\" y=\"" +
                 fmt(canvas_h - 14) + "\" text-anchor=\"middle\">" + escape(x_label) +
                 "</text>\n";
        body_ += "<text x=\"24\" y=\"" + fmt(margin_t + plot_h / 2) +
                 "\" text-anchor=\"middle\" transform=\"rotate(-90 24 " +
                 fmt(margin_t + plot_h / 2) + ")\">" + escape(y_label) + "</text>\n";
    }

    double px(double x) const { return margin_l + (x - x_.lo) / (x_.hi - x_.lo) * plot_w; }
    double py(double y) const {
        const double v = log_y_ ? std::log10(y) : y;
        return margin_t + plot_h - (v - y_.lo) / (y_.hi - y_.lo) * plot_h;
    }

    void comment(const std::string& text) { body_ += "<!-- " + text + " -->\n"; }

    void axes() {
        body_ += "<rect x=\"" + fmt(margin_l) + "\" y=\"" + fmt(margin_t) + "\" width=\"" +
                 fmt(plot_w) + "\" height=\"" + fmt(plot_h) +
                 "\" fill=\"none\" stroke=\"black\"/>\n";
        const double step = nice_step(x_.hi - x_.lo);
        for (double t = std::ceil(x_.lo / step) * step; t <= x_.hi + 1e-9 * step;
             t += step) {
            const double x = px(t);
            body_ += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(margin_t + plot_h) +
                     "\" x2=\"" + fmt(x) + "\" y2=\"" + fmt(margin_t + plot_h + 6) +
                     "\" stroke=\"black\"/>\n";
            body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(margin_t + plot_h + 22) +
                     "\" text-anchor=\"middle\">" + fmt(t + 0.0, "%g") + "</text>\n";
        }
        if (log_y_) {
            for (double d = std::ceil(y_.lo); d <= y_.hi + 1e-9; d += 1.0) {
                y_tick(std::pow(10.0, d), "1e" + fmt(d, "%g"));
            }
        } else {
            const double ystep = nice_step(y_.hi - y_.lo);
            for (double t = std::ceil(y_.lo / ystep) * ystep; t <= y_.hi + 1e-9 * ystep;
                 t += ystep) {
                y_tick(t, fmt(t + 0.0, "%g"));
            }
        }
    }

    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& color, double width) {
        std::string run;
        auto flush = [&] {
            if (!run.empty()) {
                body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
                         fmt(width, "%g") + "\" points=\"" + run + "\"/>\n";
                run.clear();
            }
        };
        for (const auto& [x, y] : pts) {
            const bool drawable =
                std::isfinite(x) && std::isfinite(y) && (!log_y_ || y > 0.0);
            if (!drawable) {
                flush();
                continue;
            }
            run += fmt(px(x)) + "," + fmt(py(y)) + " ";
        }
        flush();
    }

    void legend_entry(std::size_t index, const std::string& color,
                      const std::string& label) {
        const double y = margin_t + 12.0 + 22.0 * static_cast<double>(index);
        const double x = margin_l + plot_w + 16.0;
        body_ += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(x + 22) +
                 "\" y2=\"" + fmt(y) + "\" stroke=\"" + color +
                 "\" stroke-width=\"2.5\"/>\n";
        body_ += "<text x=\"" + fmt(x + 28) + "\" y=\"" + fmt(y + 4) + "\">" +
                 escape(label) + "</text>\n";
    }

    void raw(const std::string& markup) { body_ += markup; }

    std::string finish() { return body_ + "</svg>\n"; }

  private:
    void y_tick(double value, const std::string& label) {
        const double y = py(value);
        body_ += "<line x1=\"" + fmt(margin_l - 6) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
                 fmt(margin_l) + "\" y2=\"" + fmt(y) + "\" stroke=\"black\"/>\n";
        body_ += "<text x=\"" + fmt(margin_l - 10) + "\" y=\"" + fmt(y + 4) +
                 "\" text-anchor=\"end\">" + label + "</text>\n";
    }

    std::string body_;
    Range x_, y_;
    bool log_y_;
};

/// Five-stop gradient from red (low) through green (middle) to dark blue
/// (high), echoing a damping chart where deep cooling reads blue.
std::string heat_color(double t) {
    static const double stops[5][3] = {{178, 24, 43},
                                       {244, 165, 130},
                                       {27, 150, 55},
                                       {67, 147, 195},
                                       {5, 48, 97}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const int k = std::min(3, static_cast<int>(t));
    const double f = t - k;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(std::lround(stops[k][0] + f * (stops[k + 1][0] - stops[k][0]))),
                  static_cast<int>(std::lround(stops[k][1] + f * (stops[k + 1][1] - stops[k][1]))),
                  static_cast<int>(std::lround(stops[k][2] + f * (stops[k + 1][2] - stops[k][2]))));
    return buf;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<SvgSeries>& series, bool log_y) {
    Range x, y;
    for (const SvgSeries& s : series) {
        for (const auto& [px_, py_] : s.points) {
            if (log_y && !(py_ > 0.0)) continue;
            if (std::isfinite(px_) && std::isfinite(py_)) {
                x.feed(px_);
                y.feed(log_y ? std::log10(py_) : py_);
            }
        }
    }
    x.pad(0.04);
    y.pad(0.06);

    Chart chart(title, x_label, y_label, x, y, log_y);
    chart.axes();
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::string color = palette[i % (sizeof(palette) / sizeof(*palette))];
        chart.polyline(series[i].points, color, 1.8);
        chart.legend_entry(i, color, series[i].label);
    }
    return chart.finish();
}

std::string heat_map_svg(const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<double>& xs,
                         const std::vector<double>& ys,
                         const std::vector<std::vector<double>>& values,
                         const std::vector<std::pair<double, double>>& overlay) {
    Range x, y, v;
    for (double t : xs) x.feed(t);
    for (double t : ys) y.feed(t);
    for (const auto& column : values) {
        for (double t : column) v.feed(t);
    }
    // Extend to the outer cell edges so edge cells get full width.
    const double dx = xs.size() > 1 ? (xs.back() - xs.front()) / (xs.size() - 1.0) : 1.0;
    const double dy = ys.size() > 1 ? (ys.back() - ys.front()) / (ys.size() - 1.0) : 1.0;
    x.lo -= dx / 2;
    x.hi += dx / 2;
    y.lo -= dy / 2;
    y.hi += dy / 2;
    v.pad(0.0);

    Chart chart(title, x_label, y_label, x, y, false);
    chart.comment("color range (auto-scaled): " + fmt(v.lo, "%.6g") + " .. " +
                  fmt(v.hi, "%.6g") + "; gray = outside the reachable region");
    const double cell_w = plot_w * dx / (x.hi - x.lo);
    const double cell_h = plot_h * dy / (y.hi - y.lo);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < ys.size(); ++j) {
            const double value = values[i][j];
            const std::string color =
                std::isfinite(value) ? heat_color((value - v.lo) / (v.hi - v.lo))
                                     : std::string("#dddddd");
            chart.raw("<rect x=\"" + fmt(chart.px(xs[i]) - cell_w / 2) + "\" y=\"" +
                      fmt(chart.py(ys[j]) - cell_h / 2) + "\" width=\"" + fmt(cell_w) +
                      "\" height=\"" + fmt(cell_h) + "\" fill=\"" + color + "\"/>\n");
        }
    }
    chart.polyline(overlay, "black", 2.2);
    chart.axes();

    // Color bar with the scale endpoints.
    const double bar_x = margin_l + plot_w + 24.0;
    for (int k = 0; k < 40; ++k) {
        const double t = (k + 0.5) / 40.0;
        chart.raw("<rect x=\"" + fmt(bar_x) + "\" y=\"" +
                  fmt(margin_t + plot_h * (1.0 - t) - plot_h / 40.0 / 2) + "\" width=\"18\" height=\"" +
                  fmt(plot_h / 40.0 + 0.5) + "\" fill=\"" + heat_color(t) + "\"/>\n");
    }
    chart.raw("<text x=\"" + fmt(bar_x + 24) + "\" y=\"" + fmt(margin_t + plot_h) + "\">" +
              fmt(v.lo, "%.4g") + "</text>\n");
    chart.raw("<text x=\"" + fmt(bar_x + 24) + "\" y=\"" + fmt(margin_t + 10) + "\">" +
              fmt(v.hi, "%.4g") + "</text>\n");
    return chart.finish();
}

}  // namespace optospring
