/*
 * Copyright 2026 the tcpsim authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "tcpsim/engine.hpp"
#include "tcpsim/metrics.hpp"

namespace tcpsim {

struct ChartSeries {
    std::string label;
    std::vector<SeriesPoint> points;
};

namespace svgdetail {

inline std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

/// 1/2/5-progression step so that the axis gets a handful of round ticks.
inline double nice_step(double range, int target_ticks) {
    if (range <= 0)
        return 1.0;
    double raw = range / target_ticks;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag)
            return m * mag;
    return 10.0 * mag;
}

}  // namespace svgdetail

/// Self-contained SVG line chart: axes with ticks, one polyline per series,
/// legend when more than one series. Throws ConfigError when there is
/// nothing to plot.
inline std::string render_line_chart(const std::string& title, const std::string& x_label,
                                     const std::string& y_label,
                                     const std::vector<ChartSeries>& series, int width = 860,
                                     int height = 520) {
    using namespace svgdetail;
    bool have_points = false;
    for (const ChartSeries& s : series)
        if (!s.points.empty())
            have_points = true;
    if (!have_points)
        throw ConfigError("plot: empty series, nothing to draw");

    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool first = true;
    for (const ChartSeries& s : series) {
        for (const SeriesPoint& p : s.points) {
            if (first) {
                xmin = xmax = p.t;
                ymin = ymax = p.value;
                first = false;
            } else {
                xmin = std::min(xmin, p.t);
                xmax = std::max(xmax, p.t);
                ymin = std::min(ymin, p.value);
                ymax = std::max(ymax, p.value);
            }
        }
    }
    ymin = std::min(ymin, 0.0);  // rates and cwnd live above zero; anchor the axis there
    if (xmax == xmin)
        xmax = xmin + 1;
    if (ymax == ymin)
        ymax = ymin + 1;
    ymax += (ymax - ymin) * 0.05;

    const double ml = 80, mr = 24, mt = 48, mb = 56;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b"};
    const int palette_n = 6;

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
           std::to_string(width) + " " + std::to_string(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + num(width / 2.0) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" +
           escape(title) + "</text>\n";

    // gridlines and ticks
    double ystep = nice_step(ymax - ymin, 6);
    for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + 1e-12; y += ystep) {
        out += "<line x1=\"" + num(ml) + "\" y1=\"" + num(sy(y)) + "\" x2=\"" + num(ml + pw) +
               "\" y2=\"" + num(sy(y)) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        out += "<text x=\"" + num(ml - 8) + "\" y=\"" + num(sy(y) + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               tick_label(y) + "</text>\n";
    }
    double xstep = nice_step(xmax - xmin, 8);
    for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-12; x += xstep) {
        out += "<line x1=\"" + num(sx(x)) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(sx(x)) +
               "\" y2=\"" + num(mt + ph + 5) + "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
        out += "<text x=\"" + num(sx(x)) + "\" y=\"" + num(mt + ph + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               tick_label(x) + "</text>\n";
    }

    // axes
    out += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) + "\" y2=\"" +
           num(mt + ph) + "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    out += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(ml + pw) +
           "\" y2=\"" + num(mt + ph) + "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    out += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(height - 12.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           escape(x_label) + "</text>\n";
    out += "<text x=\"20\" y=\"" + num(mt + ph / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 20 " +
           num(mt + ph / 2) + ")\">" + escape(y_label) + "</text>\n";

    // series
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].points.empty())
            continue;
        const char* color = palette[i % palette_n];
        out += "<polyline fill=\"none\" stroke=\"";
        out += color;
        out += "\" stroke-width=\"1.5\" points=\"";
        for (const SeriesPoint& p : series[i].points) {
            out += num(sx(p.t));
            out += ',';
            out += num(sy(p.value));
            out += ' ';
        }
        out += "\"/>\n";
    }

    if (series.size() > 1) {
        double lx = ml + pw - 150, ly = mt + 12;
        for (std::size_t i = 0; i < series.size(); ++i) {
            const char* color = palette[i % palette_n];
            out += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 24) +
                   "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
            out += "<text x=\"" + num(lx + 30) + "\" y=\"" + num(ly + 4) +
                   "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(series[i].label) +
                   "</text>\n";
            ly += 18;
        }
    }

    out += "</svg>\n";
    return out;
}

}  // namespace tcpsim
