#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace enspace::svg {

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
};

/// Shaded region between lo(x) and hi(x).
struct Band {
    std::string label;
    std::vector<double> x, lo, hi;
    std::string color = "#2ca02c";
};

struct Chart {
    std::string title, x_label, y_label;
    std::vector<Band> bands;
    std::vector<Series> series;
    int width = 900, height = 420;
};

namespace detail {

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

/// 1, 2 or 5 times a power of ten, giving about `n` ticks over the span.
inline double tick_step(double span, int n) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / n;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return mag * (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0);
}

struct Range {
    double lo = INFINITY, hi = -INFINITY;
    void add(double v) {
        if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
    }
    void finish() {
        if (!(lo <= hi)) lo = 0.0, hi = 1.0;
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
            const double pad = std::max(1e-9, 0.05 * std::abs(hi));
            lo -= pad, hi += pad;
        }
    }
};

}  // namespace detail

inline void write_chart(std::ostream& os, const Chart& c) {
    using detail::num;
    const double ml = 80, mr = 20, mt = 36, mb = 48;
    const double pw = c.width - ml - mr, ph = c.height - mt - mb;
    detail::Range xr, yr;
    for (const auto& s : c.series) {
        for (double v : s.x) xr.add(v);
        for (double v : s.y) yr.add(v);
    }
    for (const auto& b : c.bands) {
        for (double v : b.x) xr.add(v);
        for (double v : b.lo) yr.add(v);
        for (double v : b.hi) yr.add(v);
    }
    xr.finish();
    yr.finish();
    const double ypad = 0.04 * (yr.hi - yr.lo);
    yr.lo -= ypad, yr.hi += ypad;
    auto X = [&](double x) { return ml + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto Y = [&](double y) { return mt + (yr.hi - std::clamp(y, yr.lo, yr.hi)) / (yr.hi - yr.lo) * ph; };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << c.width << "\" height=\"" << c.height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << c.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << detail::escape(c.title)
       << "</text>\n";

    const double xs = detail::tick_step(xr.hi - xr.lo, 8), ys = detail::tick_step(yr.hi - yr.lo, 6);
    for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi + 1e-9 * xs; t += xs) {
        os << "<line x1=\"" << num(X(t)) << "\" y1=\"" << mt << "\" x2=\"" << num(X(t)) << "\" y2=\"" << mt + ph
           << "\" stroke=\"#eee\"/>";
        os << "<text x=\"" << num(X(t)) << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">"
           << num(std::abs(t) < 1e-12 * xs ? 0.0 : t) << "</text>\n";
    }
    for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi + 1e-9 * ys; t += ys) {
        os << "<line x1=\"" << ml << "\" y1=\"" << num(Y(t)) << "\" x2=\"" << ml + pw << "\" y2=\"" << num(Y(t))
           << "\" stroke=\"#eee\"/>";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << num(Y(t) + 4) << "\" text-anchor=\"end\">"
           << num(std::abs(t) < 1e-12 * ys ? 0.0 : t) << "</text>\n";
    }
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << c.height - 8 << "\" text-anchor=\"middle\">"
       << detail::escape(c.x_label) << "</text>\n";
    os << "<text transform=\"translate(16," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << detail::escape(c.y_label) << "</text>\n";

    for (const auto& b : c.bands) {
        if (b.x.empty()) continue;
        os << "<polygon fill=\"" << b.color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
        for (std::size_t k = 0; k < b.x.size(); ++k) os << num(X(b.x[k])) << ',' << num(Y(b.hi[k])) << ' ';
        for (std::size_t k = b.x.size(); k-- > 0;) os << num(X(b.x[k])) << ',' << num(Y(b.lo[k])) << ' ';
        os << "\"/>\n";
    }
    for (const auto& s : c.series) {
        os << "<polyline fill=\"none\" stroke-width=\"1.3\" stroke=\"" << s.color << "\" points=\"";
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k)
            if (std::isfinite(s.x[k]) && std::isfinite(s.y[k])) os << num(X(s.x[k])) << ',' << num(Y(s.y[k])) << ' ';
        os << "\"/>\n";
    }

    double ly = mt + 14;
    auto legend = [&](const std::string& label, const std::string& color, bool block) {
        if (label.empty()) return;
        if (block)
            os << "<rect x=\"" << ml + pw - 150 << "\" y=\"" << ly - 9 << "\" width=\"18\" height=\"10\" fill=\"" << color
               << "\" fill-opacity=\"0.3\"/>";
        else
            os << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ml + pw - 132 << "\" y2=\""
               << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
        os << "<text x=\"" << ml + pw - 126 << "\" y=\"" << ly << "\">" << detail::escape(label) << "</text>\n";
        ly += 16;
    };
    for (const auto& b : c.bands) legend(b.label, b.color, true);
    for (const auto& s : c.series) legend(s.label, s.color, false);
    os << "</svg>\n";
}

}  // namespace enspace::svg
