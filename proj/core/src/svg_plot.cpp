#include "graingraph/svg_plot.hpp"

#include "graingraph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace graingraph {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return std::string(buf);
}

std::string tick_label(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return std::string(buf);
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    // data -> pixel, increasing for x, decreasing for y
    double to_px(double v, double px_lo, double px_hi) const {
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

Axis padded_axis(double lo, double hi) {
    if (lo > hi) {
        std::swap(lo, hi);
    }
    double span = hi - lo;
    if (span == 0.0) {
        span = std::abs(lo) > 0.0 ? std::abs(lo) * 0.1 : 1.0;
        return Axis{lo - span, hi + span};
    }
    return Axis{lo - 0.05 * span, hi + 0.05 * span};
}

void append_header(std::string& svg, const std::string& title) {
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
           "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
           num(kHeight) + "\">\n";
    svg += "  <rect width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" fill=\"white\"/>\n";
    svg += "  <text x=\"" + num(kWidth / 2.0) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
           xml_escape(title) + "</text>\n";
}

void append_axes(std::string& svg, const Axis& xa, const Axis& ya, const std::string& x_label,
                 const std::string& y_label) {
    const double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const double y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    svg += "  <line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) +
           "\" y2=\"" + num(y0) + "\" stroke=\"black\"/>\n";
    svg += "  <line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) +
           "\" y2=\"" + num(y1) + "\" stroke=\"black\"/>\n";
    constexpr int kTicks = 5;
    for (int i = 0; i < kTicks; ++i) {
        const double f = static_cast<double>(i) / (kTicks - 1);
        const double xv = xa.lo + f * (xa.hi - xa.lo);
        const double xp = xa.to_px(xv, x0, x1);
        svg += "  <line x1=\"" + num(xp) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(xp) +
               "\" y2=\"" + num(y0 + 5.0) + "\" stroke=\"black\"/>\n";
        svg += "  <text x=\"" + num(xp) + "\" y=\"" + num(y0 + 18.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               xml_escape(tick_label(xv)) + "</text>\n";
        const double yv = ya.lo + f * (ya.hi - ya.lo);
        const double yp = ya.to_px(yv, y0, y1);
        svg += "  <line x1=\"" + num(x0 - 5.0) + "\" y1=\"" + num(yp) + "\" x2=\"" + num(x0) +
               "\" y2=\"" + num(yp) + "\" stroke=\"black\"/>\n";
        svg += "  <text x=\"" + num(x0 - 8.0) + "\" y=\"" + num(yp + 4.0) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               xml_escape(tick_label(yv)) + "</text>\n";
    }
    svg += "  <text x=\"" + num((x0 + x1) / 2.0) + "\" y=\"" + num(kHeight - 12.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           xml_escape(x_label) + "</text>\n";
    svg += "  <text x=\"16\" y=\"" + num((y0 + y1) / 2.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 16 " +
           num((y0 + y1) / 2.0) + ")\">" + xml_escape(y_label) + "</text>\n";
}

} // namespace

std::string render_scatter_svg(const std::vector<SamplePrediction>& samples,
                               const std::string& title) {
    if (samples.empty()) {
        throw ValueError("scatter plot needs at least one sample");
    }
    double lo = samples.front().y_true, hi = lo;
    for (const SamplePrediction& s : samples) {
        lo = std::min({lo, s.y_true, s.y_pred});
        hi = std::max({hi, s.y_true, s.y_pred});
    }
    const Axis ax = padded_axis(lo, hi); // shared range keeps the identity line at 45 degrees
    const double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const double y0 = kHeight - kMarginBottom, y1 = kMarginTop;

    std::string svg;
    append_header(svg, title);
    append_axes(svg, ax, ax, "measured (MPa)", "predicted (MPa)");
    svg += "  <line x1=\"" + num(ax.to_px(ax.lo, x0, x1)) + "\" y1=\"" +
           num(ax.to_px(ax.lo, y0, y1)) + "\" x2=\"" + num(ax.to_px(ax.hi, x0, x1)) +
           "\" y2=\"" + num(ax.to_px(ax.hi, y0, y1)) +
           "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    for (const SamplePrediction& s : samples) {
        svg += "  <circle cx=\"" + num(ax.to_px(s.y_true, x0, x1)) + "\" cy=\"" +
               num(ax.to_px(s.y_pred, y0, y1)) +
               "\" r=\"4\" fill=\"steelblue\" fill-opacity=\"0.8\"/>\n";
    }

    // caption R^2 only when it exists (non-constant measured values)
    double mean = 0.0;
    for (const SamplePrediction& s : samples) {
        mean += s.y_true;
    }
    mean /= static_cast<double>(samples.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (const SamplePrediction& s : samples) {
        ss_tot += (s.y_true - mean) * (s.y_true - mean);
        ss_res += (s.y_true - s.y_pred) * (s.y_true - s.y_pred);
    }
    if (ss_tot > 0.0) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "R&#178; = %.4f", 1.0 - ss_res / ss_tot);
        svg += "  <text x=\"" + num(x0 + 12.0) + "\" y=\"" + num(y1 + 18.0) +
               "\" font-family=\"sans-serif\" font-size=\"13\">" + buf + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::string render_loss_svg(const std::vector<double>& loss_trace, const std::string& title) {
    if (loss_trace.empty()) {
        throw ValueError("loss plot needs at least one epoch");
    }
    double lo = loss_trace.front(), hi = lo;
    for (const double v : loss_trace) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const Axis ya = padded_axis(lo, hi);
    const Axis xa = loss_trace.size() > 1
                        ? Axis{0.0, static_cast<double>(loss_trace.size() - 1)}
                        : Axis{-0.5, 0.5};
    const double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const double y0 = kHeight - kMarginBottom, y1 = kMarginTop;

    std::string svg;
    append_header(svg, title);
    append_axes(svg, xa, ya, "epoch", "training loss");
    if (loss_trace.size() == 1) {
        svg += "  <circle cx=\"" + num(xa.to_px(0.0, x0, x1)) + "\" cy=\"" +
               num(ya.to_px(loss_trace[0], y0, y1)) + "\" r=\"4\" fill=\"firebrick\"/>\n";
    } else {
        svg += "  <polyline fill=\"none\" stroke=\"firebrick\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < loss_trace.size(); ++i) {
            if (i > 0) {
                svg += ' ';
            }
            svg += num(xa.to_px(static_cast<double>(i), x0, x1)) + "," +
                   num(ya.to_px(loss_trace[i], y0, y1));
        }
        svg += "\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

void write_svg_file(const std::string& svg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << svg;
    if (!out) {
        throw IoError("failed writing svg: " + path);
    }
}

} // namespace graingraph
