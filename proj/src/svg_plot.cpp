#include "proxmmse/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "proxmmse/error.hpp"

namespace proxmmse::svg {
namespace {

constexpr double kLeft = 90, kRight = 30, kTop = 50, kBottom = 70;

std::string fmt(double v, const char* pattern = "%.2f") {
    char buf[48];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string escape(const std::string& s) {
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

struct Range {
    double lo, hi;
};

Range finite_range(const std::vector<double>& v) {
    Range r{INFINITY, -INFINITY};
    for (double d : v)
        if (std::isfinite(d)) {
            r.lo = std::min(r.lo, d);
            r.hi = std::max(r.hi, d);
        }
    if (!std::isfinite(r.lo)) return {0.0, 1.0};
    if (r.hi - r.lo < 1e-12 * (1.0 + std::fabs(r.lo))) {
        r.lo -= 0.5;
        r.hi += 0.5;
    }
    const double pad = 0.05 * (r.hi - r.lo);
    return {r.lo - pad, r.hi + pad};
}

/// 1, 2 or 5 times a power of ten, giving at most ~8 ticks.
double tick_step(const Range& r) {
    const double raw = (r.hi - r.lo) / 8.0;
    const double p = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0})
        if (m * p >= raw) return m * p;
    return 10.0 * p;
}

void panel(std::ostream& out, const Panel& p, double offset) {
    const double w = kPanelWidth - kLeft - kRight, h = kPanelHeight - kTop - kBottom;
    const Range rx = finite_range(p.x), ry = finite_range(p.y);
    auto px = [&](double x) { return kLeft + (x - rx.lo) / (rx.hi - rx.lo) * w; };
    auto py = [&](double y) { return offset + kTop + (ry.hi - y) / (ry.hi - ry.lo) * h; };

    out << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(offset + kTop) << "\" width=\"" << fmt(w)
        << "\" height=\"" << fmt(h) << "\" fill=\"white\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt(kPanelWidth / 2.0) << "\" y=\"" << fmt(offset + kTop - 15)
        << "\" text-anchor=\"middle\" font-size=\"18\">" << escape(p.title) << "</text>\n";
    out << "<text x=\"" << fmt(kLeft + w / 2) << "\" y=\"" << fmt(offset + kPanelHeight - 20)
        << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(p.x_label) << "</text>\n";
    out << "<text x=\"20\" y=\"" << fmt(offset + kTop + h / 2)
        << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 20 "
        << fmt(offset + kTop + h / 2) << ")\">" << escape(p.y_label) << "</text>\n";

    for (int axis = 0; axis < 2; ++axis) {
        const Range& r = axis == 0 ? rx : ry;
        const double step = tick_step(r);
        for (double t = std::ceil(r.lo / step) * step; t <= r.hi; t += step) {
            const double v = std::fabs(t) < 1e-9 * step ? 0.0 : t;
            if (axis == 0)
                out << "<text x=\"" << fmt(px(v)) << "\" y=\"" << fmt(offset + kTop + h + 20)
                    << "\" text-anchor=\"middle\" font-size=\"12\">" << fmt(v, "%g") << "</text>\n"
                    << "<line x1=\"" << fmt(px(v)) << "\" y1=\"" << fmt(offset + kTop) << "\" x2=\""
                    << fmt(px(v)) << "\" y2=\"" << fmt(offset + kTop + h)
                    << "\" stroke=\"#dddddd\"/>\n";
            else
                out << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(py(v) + 4)
                    << "\" text-anchor=\"end\" font-size=\"12\">" << fmt(v, "%g") << "</text>\n"
                    << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(py(v)) << "\" x2=\""
                    << fmt(kLeft + w) << "\" y2=\"" << fmt(py(v)) << "\" stroke=\"#dddddd\"/>\n";
        }
    }

    // Non-finite samples break the line into separate polylines.
    std::string points;
    auto flush = [&] {
        if (!points.empty())
            out << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"2\" points=\""
                << points << "\"/>\n";
        points.clear();
    };
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        if (!std::isfinite(p.x[i]) || !std::isfinite(p.y[i])) {
            flush();
            continue;
        }
        if (!points.empty()) points += ' ';
        points += fmt(px(p.x[i])) + ',' + fmt(py(p.y[i]));
    }
    flush();
}

}  // namespace

void write_panels(std::ostream& out, const std::vector<Panel>& panels) {
    for (const auto& p : panels)
        if (p.x.size() != p.y.size()) throw InvalidArgument("plot series differ in length");
    const int height = kPanelHeight * static_cast<int>(panels.size());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPanelWidth << "\" height=\""
        << height << "\" viewBox=\"0 0 " << kPanelWidth << ' ' << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < panels.size(); ++i)
        panel(out, panels[i], static_cast<double>(i) * kPanelHeight);
    out << "</svg>\n";
}

}  // namespace proxmmse::svg
