#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "rdg/experiment.hpp"

namespace rdg {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 450.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 180.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
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

struct Axis {
    bool log = false;
    double lo = 0.0;
    double hi = 1.0;

    double map(double v) const { return log ? std::log10(v) : v; }
    double frac(double v) const { return hi > lo ? (map(v) - lo) / (hi - lo) : 0.5; }

    std::vector<double> ticks() const {
        std::vector<double> out;
        if (log) {
            for (double e = std::floor(lo); e <= std::ceil(hi); e += 1.0)
                if (e >= lo - 1e-9 && e <= hi + 1e-9) out.push_back(std::pow(10.0, e));
            if (out.size() >= 2) return out;
            out.clear();
        }
        const double span = hi - lo;
        if (span <= 0) return {log ? std::pow(10.0, lo) : lo};
        const double raw = span / 5.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (double m : {1.0, 2.0, 5.0, 10.0})
            if (raw <= m * mag) {
                step = m * mag;
                break;
            }
        for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * std::abs(hi); v += step)
            out.push_back(log ? std::pow(10.0, v) : v);
        return out;
    }
};

Axis fit_axis(const std::vector<double>& values, bool log) {
    Axis a;
    a.log = log;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : values) {
        if (!std::isfinite(v) || (log && v <= 0)) continue;
        lo = std::min(lo, a.map(v));
        hi = std::max(hi, a.map(v));
    }
    if (!std::isfinite(lo)) return a;
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    } else if (!log) {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    a.lo = lo;
    a.hi = hi;
    return a;
}

}  // namespace

std::string render_svg(const Series& s) {
    const bool log_x = s.kind == "loglog" || s.kind == "sweep";
    const bool log_y = s.kind == "loglog";
    std::vector<double> ys;
    for (const auto& curve : s.y) ys.insert(ys.end(), curve.begin(), curve.end());
    const Axis ax = fit_axis(s.x, log_x);
    const Axis ay = fit_axis(ys, log_y);

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + ax.frac(v) * pw; };
    auto py = [&](double v) { return kTop + (1.0 - ay.frac(v)) * ph; };

    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
                      num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + num(kLeft) + "\" y=\"24\" font-size=\"15\">" + escape(s.name) + "</text>\n";
    out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
           "\" fill=\"none\" stroke=\"#333\"/>\n";

    for (double t : ax.ticks()) {
        const double x = px(t);
        out += "<line x1=\"" + num(x) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(x) + "\" y2=\"" +
               num(kTop + ph + 5) + "\" stroke=\"#333\"/>\n";
        out += "<text x=\"" + num(x) + "\" y=\"" + num(kTop + ph + 18) + "\" text-anchor=\"middle\">" +
               tick_label(t) + "</text>\n";
    }
    for (double t : ay.ticks()) {
        const double y = py(t);
        out += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(y) +
               "\" stroke=\"#333\"/>\n";
        out += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + tick_label(t) +
               "</text>\n";
    }
    out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 18) + "\" text-anchor=\"middle\">" +
           escape(s.x_label) + (log_x ? " (log)" : "") + "</text>\n";
    out += "<text transform=\"translate(18," + num(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
           escape(s.y_label) + (log_y ? " (log)" : "") + "</text>\n";

    for (std::size_t k = 0; k < s.y.size(); ++k) {
        const std::string color = kPalette[k % std::size(kPalette)];
        std::string points;
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y[k].size()); ++i) {
            const double x = s.x[i], y = s.y[k][i];
            if (!std::isfinite(x) || !std::isfinite(y) || (log_x && x <= 0) || (log_y && y <= 0)) continue;
            points += num(px(x)) + "," + num(py(y)) + " ";
            if (s.kind == "sweep")
                out += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"3.5\" fill=\"" + color +
                       "\"/>\n";
        }
        out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
        const std::string name = k < s.labels.size() ? s.labels[k] : "series " + std::to_string(k);
        const double ly = kTop + 14 + 18 * static_cast<double>(k);
        out += "<line x1=\"" + num(kLeft + pw + 12) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(kLeft + pw + 32) +
               "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + num(kLeft + pw + 38) + "\" y=\"" + num(ly) + "\">" + escape(name) + "</text>\n";
    }
    if (!s.annotation.empty())
        out += "<text x=\"" + num(kLeft + 8) + "\" y=\"" + num(kTop + 16) + "\" fill=\"#444\">" +
               escape(s.annotation) + "</text>\n";
    out += "</svg>\n";
    return out;
}

}  // namespace rdg
