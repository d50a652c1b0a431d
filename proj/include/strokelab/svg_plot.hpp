#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strokelab/error.hpp"
#include "strokelab/lognormal.hpp"
#include "strokelab/types.hpp"

namespace strokelab {

/// Blue-to-red ramp clamped to [0, 300] mm/s, matching the trajectory
/// view's legend.
inline std::string speed_color(double speed_mm_s) {
    const double f = std::clamp(speed_mm_s / 300.0, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255.0 * f));
    const int b = 255 - r;
    char buf[24];
    std::snprintf(buf, sizeof buf, "rgb(%d,0,%d)", r, b);
    return buf;
}

namespace detail {

inline void append_num(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    out += buf;
}

inline void polyline_path(std::string& out, std::span<const double> xs,
                          std::span<const double> ys) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out += i == 0 ? "M" : " L";
        append_num(out, xs[i]);
        out += ' ';
        append_num(out, ys[i]);
    }
}

struct Frame {
    double x0, y0, w, h;      // pixel box
    double vx0, vy0, vw, vh;  // value box

    double px(double v) const { return x0 + (v - vx0) / vw * w; }
    // value y grows upward, pixel y downward
    double py(double v) const { return y0 + h - (v - vy0) / vh * h; }
};

} // namespace detail

/// Reconstruction view: observed speed (black), each component's D*Lambda
/// curve (yellow), and the speed of their vector sum (dashed). The
/// observed curve appears only when the stroke is supplied.
inline std::string reconstruction_svg_fragment(const StrokeDecomposition& decomp,
                                               const Stroke* observed, double fs,
                                               double width, double height, double y_offset) {
    // grid: from the observed stroke when present, else from the components
    std::vector<double> t;
    if (observed) {
        t.resize(observed->size());
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = observed->t[i] - observed->t[0];
    } else {
        double end = 0.0;
        for (const auto& c : decomp.components)
            end = std::max(end, lognormal_fraction_time(c, kZ999));
        const std::size_t n = static_cast<std::size_t>(std::ceil(end * fs)) + 1;
        t.resize(std::max<std::size_t>(n, 2));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) / fs;
    }
    const std::size_t n = t.size();

    std::vector<double> sum_vx(n, 0.0), sum_vy(n, 0.0), sum_speed(n);
    eval_components(decomp.components, t, sum_vx, sum_vy);
    for (std::size_t i = 0; i < n; ++i) sum_speed[i] = std::hypot(sum_vx[i], sum_vy[i]);

    double vmax = 1e-9;
    for (double v : sum_speed) vmax = std::max(vmax, v);
    if (observed)
        for (double v : observed->speed) vmax = std::max(vmax, v);

    const detail::Frame fr{50, y_offset + 15, width - 70, height - 55,
                           0.0, 0.0, std::max(t.back(), 1e-9), vmax * 1.05};

    std::string svg;
    auto curve = [&](std::span<const double> values, const char* cls, const char* style) {
        std::vector<double> xs(n), ys(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = fr.px(t[i]);
            ys[i] = fr.py(values[i]);
        }
        svg += "<path class=\"";
        svg += cls;
        svg += "\" fill=\"none\" ";
        svg += style;
        svg += " d=\"";
        detail::polyline_path(svg, xs, ys);
        svg += "\"/>\n";
    };

    svg += "<rect x=\"50\" y=\"" + std::to_string(y_offset + 15) + "\" width=\"" +
           std::to_string(static_cast<int>(width - 70)) + "\" height=\"" +
           std::to_string(static_cast<int>(height - 55)) +
           "\" fill=\"none\" stroke=\"#999\"/>\n";

    std::vector<double> comp_speed(n);
    for (const auto& c : decomp.components) {
        for (std::size_t i = 0; i < n; ++i) comp_speed[i] = c.D * lognormal_value(t[i], c);
        curve(comp_speed, "curve component", "stroke=\"#e6c200\" stroke-width=\"1.2\"");
    }
    if (observed)
        curve(observed->speed, "curve observed", "stroke=\"black\" stroke-width=\"1.5\"");
    curve(sum_speed, "curve sum",
          "stroke=\"black\" stroke-width=\"1.2\" stroke-dasharray=\"6 3\"");

    svg += "<text x=\"52\" y=\"" + std::to_string(y_offset + 12) +
           "\" font-size=\"11\">speed [mm/s] vs time [s], stroke " + decomp.stroke_id +
           ", nblog=" + std::to_string(decomp.nblog) + "</text>\n";
    return svg;
}

/// Trajectory view: the (x, y) polyline drawn segment by segment, each
/// colored by local speed on the [0, 300] mm/s ramp, plus a legend.
inline std::string trajectory_svg_fragment(const Stroke& stroke, double width, double height,
                                           double y_offset) {
    double xmin = stroke.x[0], xmax = stroke.x[0], ymin = stroke.y[0], ymax = stroke.y[0];
    for (std::size_t i = 0; i < stroke.size(); ++i) {
        xmin = std::min(xmin, stroke.x[i]);
        xmax = std::max(xmax, stroke.x[i]);
        ymin = std::min(ymin, stroke.y[i]);
        ymax = std::max(ymax, stroke.y[i]);
    }
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-6});
    const double box = std::min(width - 160, height - 40);
    const detail::Frame fr{30, y_offset + 20, box, box, xmin, ymin, span, span};

    std::string svg;
    svg += "<g class=\"trajectory\">\n";
    for (std::size_t i = 0; i + 1 < stroke.size(); ++i) {
        const double spd = 0.5 * (stroke.speed[i] + stroke.speed[i + 1]);
        svg += "<line x1=\"";
        detail::append_num(svg, fr.px(stroke.x[i]));
        svg += "\" y1=\"";
        detail::append_num(svg, fr.py(stroke.y[i]));
        svg += "\" x2=\"";
        detail::append_num(svg, fr.px(stroke.x[i + 1]));
        svg += "\" y2=\"";
        detail::append_num(svg, fr.py(stroke.y[i + 1]));
        svg += "\" stroke=\"" + speed_color(spd) + "\" stroke-width=\"2\"/>\n";
    }
    svg += "</g>\n";

    // legend: the ramp with its end labels
    const double lx = width - 110, ly = y_offset + 30;
    svg += "<rect x=\"" + std::to_string(static_cast<int>(lx)) + "\" y=\"" +
           std::to_string(static_cast<int>(ly)) +
           "\" width=\"18\" height=\"120\" fill=\"url(#speedramp)\" stroke=\"#666\"/>\n";
    svg += "<text x=\"" + std::to_string(static_cast<int>(lx + 24)) + "\" y=\"" +
           std::to_string(static_cast<int>(ly + 124)) + "\" font-size=\"11\">0 mm/s</text>\n";
    svg += "<text x=\"" + std::to_string(static_cast<int>(lx + 24)) + "\" y=\"" +
           std::to_string(static_cast<int>(ly + 10)) + "\" font-size=\"11\">300 mm/s</text>\n";
    svg += "<text x=\"32\" y=\"" + std::to_string(static_cast<int>(y_offset + 14)) +
           "\" font-size=\"11\">trajectory " + stroke.id + " colored by speed</text>\n";
    return svg;
}

/// Whole-document plot: reconstruction view when a decomposition is
/// given, trajectory view when the stroke is given, both stacked when
/// both are present.
inline std::string plot_svg(const StrokeDecomposition* decomp, const Stroke* stroke,
                            double fs = 200.0) {
    if (!decomp && !stroke) throw ValidationError("plot_svg: nothing to draw");
    const double width = 760, view_h = 300;
    const int views = (decomp ? 1 : 0) + (stroke ? 1 : 0);
    const double height = view_h * views + 20;

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           std::to_string(static_cast<int>(width)) + "\" height=\"" +
           std::to_string(static_cast<int>(height)) + "\">\n";
    svg += "<defs><linearGradient id=\"speedramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">"
           "<stop offset=\"0\" stop-color=\"rgb(0,0,255)\"/>"
           "<stop offset=\"1\" stop-color=\"rgb(255,0,0)\"/>"
           "</linearGradient></defs>\n";
    double y = 0.0;
    if (decomp) {
        svg += reconstruction_svg_fragment(*decomp, stroke, fs, width, view_h, y);
        y += view_h;
    }
    if (stroke) svg += trajectory_svg_fragment(*stroke, width, view_h, y);
    svg += "</svg>\n";
    return svg;
}

} // namespace strokelab
