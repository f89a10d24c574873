#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvsdde::svg {

struct Series {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
    std::string color = "#1f6fb4";
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace detail

/// Static log-log line chart: one polyline per series, decade grid lines,
/// and a dashed guide of the given slope anchored at the first data point of
/// the first series. Pure text emission, byte-stable for identical inputs.
inline std::string loglog_chart(const std::string& title, const std::string& x_label,
                                const std::string& y_label, const std::vector<Series>& series,
                                double guide_slope, const std::string& guide_label) {
    double lx_min = 0.0, lx_max = 0.0, ly_min = 0.0, ly_max = 0.0;
    bool first = true;
    for (const auto& s : series) {
        if (s.xs.size() != s.ys.size()) throw std::invalid_argument("loglog_chart: series size mismatch");
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (!(s.xs[i] > 0.0) || !(s.ys[i] > 0.0))
                throw std::invalid_argument("loglog_chart: log axes need positive data");
            const double lx = std::log10(s.xs[i]);
            const double ly = std::log10(s.ys[i]);
            if (first) {
                lx_min = lx_max = lx;
                ly_min = ly_max = ly;
                first = false;
            } else {
                lx_min = std::min(lx_min, lx);
                lx_max = std::max(lx_max, lx);
                ly_min = std::min(ly_min, ly);
                ly_max = std::max(ly_max, ly);
            }
        }
    }
    if (first) throw std::invalid_argument("loglog_chart: no data");

    // Guide line through the first point of the first series.
    const auto& anchor = series.front();
    const double ax = std::log10(anchor.xs.front());
    const double ay = std::log10(anchor.ys.front());
    for (const double lx : {lx_min, lx_max}) {
        const double ly = ay + guide_slope * (lx - ax);
        ly_min = std::min(ly_min, ly);
        ly_max = std::max(ly_max, ly);
    }

    const double pad_x = std::max(0.08 * (lx_max - lx_min), 0.05);
    const double pad_y = std::max(0.08 * (ly_max - ly_min), 0.05);
    lx_min -= pad_x;
    lx_max += pad_x;
    ly_min -= pad_y;
    ly_max += pad_y;

    const double width = 640.0, height = 480.0;
    const double left = 70.0, right = 20.0, top = 40.0, bottom = 50.0;
    auto px = [&](double lx) {
        return left + (lx - lx_min) / (lx_max - lx_min) * (width - left - right);
    };
    auto py = [&](double ly) {
        return height - bottom - (ly - ly_min) / (ly_max - ly_min) * (height - top - bottom);
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
          "font-family=\"sans-serif\">"
       << title << "</text>\n";

    // Decade grid with 10^k labels.
    for (int k = static_cast<int>(std::ceil(lx_min)); k <= static_cast<int>(std::floor(lx_max)); ++k) {
        const double x = px(k);
        os << "<line x1=\"" << detail::fmt(x) << "\" y1=\"" << py(ly_min) << "\" x2=\"" << detail::fmt(x)
           << "\" y2=\"" << py(ly_max) << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << detail::fmt(x) << "\" y=\"" << height - bottom + 18
           << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">1e" << k
           << "</text>\n";
    }
    for (int k = static_cast<int>(std::ceil(ly_min)); k <= static_cast<int>(std::floor(ly_max)); ++k) {
        const double y = py(k);
        os << "<line x1=\"" << px(lx_min) << "\" y1=\"" << detail::fmt(y) << "\" x2=\"" << px(lx_max)
           << "\" y2=\"" << detail::fmt(y) << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << left - 8 << "\" y=\"" << detail::fmt(y + 4)
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">1e" << k << "</text>\n";
    }

    // Axes frame.
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right
       << "\" height=\"" << height - top - bottom << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    os << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << x_label
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << (top + height - bottom) / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 16 "
       << (top + height - bottom) / 2 << ")\">" << y_label << "</text>\n";

    // Guide line.
    {
        const double y1 = ay + guide_slope * (lx_min - ax);
        const double y2 = ay + guide_slope * (lx_max - ax);
        os << "<line x1=\"" << detail::fmt(px(lx_min)) << "\" y1=\"" << detail::fmt(py(y1)) << "\" x2=\""
           << detail::fmt(px(lx_max)) << "\" y2=\"" << detail::fmt(py(y2))
           << "\" stroke=\"#888888\" stroke-dasharray=\"6,4\"/>\n";
        os << "<text x=\"" << width - right - 8 << "\" y=\"" << top + 16
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\" fill=\"#666666\">"
           << guide_label << "</text>\n";
    }

    double legend_y = top + 34.0;
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (i) os << ' ';
            os << detail::fmt(px(std::log10(s.xs[i]))) << ',' << detail::fmt(py(std::log10(s.ys[i])));
        }
        os << "\"/>\n";
        for (std::size_t i = 0; i < s.xs.size(); ++i)
            os << "<circle cx=\"" << detail::fmt(px(std::log10(s.xs[i]))) << "\" cy=\""
               << detail::fmt(py(std::log10(s.ys[i]))) << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
        os << "<text x=\"" << width - right - 8 << "\" y=\"" << detail::fmt(legend_y)
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\" fill=\"" << s.color
           << "\">" << s.label << "</text>\n";
        legend_y += 14.0;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace mvsdde::svg
