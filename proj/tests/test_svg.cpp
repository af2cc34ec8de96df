#include <cmath>
#include <limits>
#include <string>

#include "doctest.h"
#include "optospring/svg.hpp"

using namespace optospring;

namespace {

std::size_t count(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("line chart emits one polyline per series plus legend and axes") {
    const std::vector<SvgSeries> series = {
        {"first", {{0.0, 1.0}, {1.0, 2.0}, {2.0, 1.5}}},
        {"second & more", {{0.0, 3.0}, {1.0, 0.5}, {2.0, 2.5}}},
    };
    const std::string svg =
        line_chart_svg("demo", "detuning", "ratio", series);
    CHECK(svg.rfind("<svg xmlns=", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count(svg, "<polyline") == 2);
    CHECK(svg.find("second &amp; more") != std::string::npos);
    CHECK(svg.find("detuning") != std::string::npos);
    CHECK(count(svg, "<text") >= 8);  // title, axis labels, ticks, legend

    CHECK(line_chart_svg("demo", "detuning", "ratio", series) == svg);
}

TEST_CASE("line chart survives log scale, NaN gaps and degenerate input") {
    std::vector<SvgSeries> series = {
        {"spectrum",
         {{814e3, 1e-30},
          {814.1e3, std::numeric_limits<double>::quiet_NaN()},
          {814.2e3, 1e-26},
          {814.3e3, 0.0}}},
    };
    const std::string svg = line_chart_svg("log", "Hz", "m^2/Hz", series, true);
    CHECK(svg.find("</svg>") != std::string::npos);
    // NaN splits the run; the zero sample cannot appear on a log axis.
    CHECK(count(svg, "<polyline") == 2);
    CHECK(svg.find("1e-3") != std::string::npos);  // decade tick labels

    const std::string empty = line_chart_svg("empty", "x", "y", {});
    CHECK(empty.find("</svg>") != std::string::npos);
    const std::string flat = line_chart_svg("flat", "x", "y", {{"s", {{0, 5}, {1, 5}}}});
    CHECK(flat.find("</svg>") != std::string::npos);
}

TEST_CASE("heat map colors every cell and documents the auto-scaled range") {
    const std::vector<double> xs = {-1.0, 0.0, 1.0};
    const std::vector<double> ys = {0.0, 5.0};
    const std::vector<std::vector<double>> values = {
        {1.0, 2.0}, {1.0, std::numeric_limits<double>::quiet_NaN()}, {1.0, -3.0}};
    const std::string svg = heat_map_svg("map", "phi", "P (W)", xs, ys, values,
                                         {{0.2, 1.0}, {0.8, 3.0}});
    CHECK(svg.rfind("<svg xmlns=", 0) == 0);
    CHECK(svg.find("color range (auto-scaled): -3 .. 2") != std::string::npos);
    CHECK(count(svg, "<rect") >= 3 * 2 + 40);  // cells + color bar
    CHECK(svg.find("#dddddd") != std::string::npos);  // the NaN cell
    CHECK(count(svg, "<polyline") == 1);
    CHECK(heat_map_svg("map", "phi", "P (W)", xs, ys, values,
                       {{0.2, 1.0}, {0.8, 3.0}}) == svg);
}
