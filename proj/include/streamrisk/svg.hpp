#pragma once

// Minimal hand-written SVG plots: a log-log MSE chart and a CLT scatter with
// the theoretical one-standard-deviation ellipse.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "streamrisk/asymptotics.hpp"
#include "streamrisk/io.hpp"

namespace streamrisk::svg {

struct Curve {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (x, y), both positive for log axes
    bool dashed = false;
    bool markers = true;
};

namespace detail {

inline constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c",
                                                     "#9467bd", "#ff7f0e", "#8c564b"};

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Frame {
    double x0, x1, y0, y1;  // data range (already transformed)
    double left = 70, right = 170, top = 30, bottom = 50;
    double width = 720, height = 480;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

inline void open(std::ostream& out, const Frame& f, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << num(f.width / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
        << title << "</text>\n"
        << "<rect x=\"" << num(f.left) << "\" y=\"" << num(f.top) << "\" width=\""
        << num(f.width - f.left - f.right) << "\" height=\"" << num(f.height - f.top - f.bottom)
        << "\" fill=\"none\" stroke=\"black\"/>\n";
}

inline void axis_labels(std::ostream& out, const Frame& f, const std::string& xl, const std::string& yl) {
    out << "<text x=\"" << num(f.left + (f.width - f.left - f.right) / 2) << "\" y=\""
        << num(f.height - 10) << "\" text-anchor=\"middle\">" << xl << "</text>\n"
        << "<text x=\"15\" y=\"" << num(f.top + (f.height - f.top - f.bottom) / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
        << num(f.top + (f.height - f.top - f.bottom) / 2) << ")\">" << yl << "</text>\n";
}

inline void polyline(std::ostream& out, const std::vector<std::pair<double, double>>& pts,
                     const char* colour, bool dashed) {
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\""
        << (dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
        out << (i ? " " : "") << num(pts[i].first) << ',' << num(pts[i].second);
    out << "\"/>\n";
}

}  // namespace detail

// Log-log chart; decade ticks on both axes.
inline void loglog_plot(std::ostream& out, std::span<const Curve> curves, const std::string& title,
                        const std::string& xlabel, const std::string& ylabel) {
    double lx0 = std::numeric_limits<double>::infinity(), lx1 = -lx0, ly0 = lx0, ly1 = -lx0;
    for (const auto& c : curves)
        for (auto [x, y] : c.points) {
            if (!(x > 0.0) || !(y > 0.0)) continue;
            lx0 = std::min(lx0, std::log10(x));
            lx1 = std::max(lx1, std::log10(x));
            ly0 = std::min(ly0, std::log10(y));
            ly1 = std::max(ly1, std::log10(y));
        }
    if (!(lx1 >= lx0)) lx0 = 0, lx1 = 1, ly0 = 0, ly1 = 1;
    lx0 = std::floor(lx0), lx1 = std::ceil(lx1), ly0 = std::floor(ly0), ly1 = std::ceil(ly1);
    if (lx1 == lx0) lx1 += 1;
    if (ly1 == ly0) ly1 += 1;

    detail::Frame f{lx0, lx1, ly0, ly1};
    detail::open(out, f, title);
    for (double d = lx0; d <= lx1; d += 1)
        out << "<line x1=\"" << detail::num(f.px(d)) << "\" y1=\"" << detail::num(f.py(ly0)) << "\" x2=\""
            << detail::num(f.px(d)) << "\" y2=\"" << detail::num(f.py(ly1))
            << "\" stroke=\"#ddd\"/>\n<text x=\"" << detail::num(f.px(d)) << "\" y=\""
            << detail::num(f.py(ly0) + 16) << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
    for (double d = ly0; d <= ly1; d += 1)
        out << "<line x1=\"" << detail::num(f.px(lx0)) << "\" y1=\"" << detail::num(f.py(d)) << "\" x2=\""
            << detail::num(f.px(lx1)) << "\" y2=\"" << detail::num(f.py(d))
            << "\" stroke=\"#ddd\"/>\n<text x=\"" << detail::num(f.px(lx0) - 6) << "\" y=\""
            << detail::num(f.py(d) + 4) << "\" text-anchor=\"end\">1e" << d << "</text>\n";
    detail::axis_labels(out, f, xlabel, ylabel);

    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& c = curves[i];
        const char* colour = detail::kPalette[i % detail::kPalette.size()];
        std::vector<std::pair<double, double>> pts;
        for (auto [x, y] : c.points)
            if (x > 0.0 && y > 0.0) pts.emplace_back(f.px(std::log10(x)), f.py(std::log10(y)));
        detail::polyline(out, pts, colour, c.dashed);
        if (c.markers)
            for (auto [x, y] : pts)
                out << "<circle cx=\"" << detail::num(x) << "\" cy=\"" << detail::num(y)
                    << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
        const double ly = f.top + 16.0 * static_cast<double>(i + 1);
        const double lx = f.width - f.right + 10;
        out << "<line x1=\"" << detail::num(lx) << "\" y1=\"" << detail::num(ly - 4) << "\" x2=\""
            << detail::num(lx + 20) << "\" y2=\"" << detail::num(ly - 4) << "\" stroke=\"" << colour
            << "\" stroke-width=\"1.5\"" << (c.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n"
            << "<text x=\"" << detail::num(lx + 26) << "\" y=\"" << detail::num(ly) << "\">" << c.label
            << "</text>\n";
    }
    out << "</svg>\n";
}

// Points on the ellipse {z : z' cov^-1 z = 1} centred at the origin.
inline std::vector<std::pair<double, double>> ellipse_points(const SymMatrix2& cov, int count = 128) {
    const double tr = cov.xx + cov.yy;
    const double det = cov.xx * cov.yy - cov.xy * cov.xy;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double l1 = tr / 2.0 + disc, l2 = std::max(0.0, tr / 2.0 - disc);
    const double angle = 0.5 * std::atan2(2.0 * cov.xy, cov.xx - cov.yy);
    const double c = std::cos(angle), s = std::sin(angle);
    std::vector<std::pair<double, double>> pts;
    for (int k = 0; k <= count; ++k) {
        const double t = 2.0 * std::numbers::pi * k / count;
        const double u = std::sqrt(l1) * std::cos(t), v = std::sqrt(l2) * std::sin(t);
        pts.emplace_back(c * u - s * v, s * u + c * v);
    }
    return pts;
}

// Scatter of rescaled errors with an optional theoretical ellipse.
inline void clt_scatter(std::ostream& out, std::span<const std::array<double, 2>> samples,
                        const std::optional<SymMatrix2>& theory, const std::string& title) {
    std::vector<std::pair<double, double>> ell;
    if (theory) ell = ellipse_points(*theory);
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    auto grow = [&](double x, double y) {
        x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    };
    for (const auto& p : samples) grow(p[0], p[1]);
    for (auto [x, y] : ell) grow(x, y);
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double mx = 0.05 * (x1 - x0), my = 0.05 * (y1 - y0);
    detail::Frame f{x0 - mx, x1 + mx, y0 - my, y1 + my};
    detail::open(out, f, title);
    out << "<line x1=\"" << detail::num(f.px(0)) << "\" y1=\"" << detail::num(f.py(f.y0)) << "\" x2=\""
        << detail::num(f.px(0)) << "\" y2=\"" << detail::num(f.py(f.y1)) << "\" stroke=\"#ccc\"/>\n"
        << "<line x1=\"" << detail::num(f.px(f.x0)) << "\" y1=\"" << detail::num(f.py(0)) << "\" x2=\""
        << detail::num(f.px(f.x1)) << "\" y2=\"" << detail::num(f.py(0)) << "\" stroke=\"#ccc\"/>\n";
    for (double v : {f.x0, f.x1})
        out << "<text x=\"" << detail::num(f.px(v)) << "\" y=\"" << detail::num(f.py(f.y0) + 16)
            << "\" text-anchor=\"middle\">" << io::format_double(std::round(v * 100) / 100) << "</text>\n";
    for (double v : {f.y0, f.y1})
        out << "<text x=\"" << detail::num(f.px(f.x0) - 6) << "\" y=\"" << detail::num(f.py(v) + 4)
            << "\" text-anchor=\"end\">" << io::format_double(std::round(v * 100) / 100) << "</text>\n";
    detail::axis_labels(out, f, "rescaled quantile error", "rescaled superquantile error");
    for (const auto& p : samples)
        out << "<circle cx=\"" << detail::num(f.px(p[0])) << "\" cy=\"" << detail::num(f.py(p[1]))
            << "\" r=\"1.5\" fill=\"#1f77b4\" fill-opacity=\"0.5\"/>\n";
    if (!ell.empty()) {
        std::vector<std::pair<double, double>> pts;
        for (auto [x, y] : ell) pts.emplace_back(f.px(x), f.py(y));
        detail::polyline(out, pts, "#d62728", false);
        out << "<text x=\"" << detail::num(f.width - f.right + 10) << "\" y=\"" << detail::num(f.top + 16)
            << "\" fill=\"#d62728\">theory 1-SD</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace streamrisk::svg
