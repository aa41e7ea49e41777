#include "tempshift/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace tempshift {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 480;
constexpr double kLeft = 64;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 56;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
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

struct Frame {
    double x0, x1, y0, y1; // data range

    double px(double x) const {
        return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
    }
    double py(double y) const {
        return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
    }
};

void open_svg(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
       << escape(title) << "</text>\n";
}

void axes(std::ostringstream& os, const Frame& f, const std::string& xl, const std::string& yl,
          int x_ticks, int y_ticks) {
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
       << kWidth - kLeft - kRight << "\" height=\"" << kHeight - kTop - kBottom
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= x_ticks; ++i) {
        const double v = f.x0 + (f.x1 - f.x0) * i / x_ticks;
        os << "<text x=\"" << num(f.px(v)) << "\" y=\"" << kHeight - kBottom + 18
           << "\" text-anchor=\"middle\">" << (f.x1 > 10 ? std::to_string(static_cast<long>(v)) : num(v))
           << "</text>\n";
    }
    for (int i = 0; i <= y_ticks; ++i) {
        const double v = f.y0 + (f.y1 - f.y0) * i / y_ticks;
        char buf[32];
        std::snprintf(buf, sizeof buf, f.y1 < 0.1 ? "%.2e" : "%.2f", v);
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(f.py(v) + 4)
           << "\" text-anchor=\"end\">" << buf << "</text>\n";
    }
    os << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 14
       << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n"
       << "<text transform=\"translate(16," << (kTop + kHeight - kBottom) / 2
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
}

} // namespace

std::string svg_curve(const std::string& title, const std::string& x_label,
                      const std::string& y_label, std::span<const CurvePoint> points,
                      bool reference, std::optional<double> baseline) {
    const Frame f{0, 1, 0, 1};
    std::ostringstream os;
    open_svg(os, title);
    axes(os, f, x_label, y_label, 5, 5);
    if (reference) {
        os << "<line x1=\"" << f.px(0) << "\" y1=\"" << f.py(0) << "\" x2=\"" << f.px(1)
           << "\" y2=\"" << f.py(1) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
    }
    if (baseline) {
        os << "<line x1=\"" << f.px(0) << "\" y1=\"" << num(f.py(*baseline)) << "\" x2=\""
           << f.px(1) << "\" y2=\"" << num(f.py(*baseline))
           << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"";
    for (const auto& p : points) os << num(f.px(p.x)) << ',' << num(f.py(p.y)) << ' ';
    os << "\"/>\n</svg>\n";
    return os.str();
}

std::string svg_timeline(const std::string& title, const ScoreTrace& trace) {
    const std::size_t n = trace.size();
    double hi = 0.0;
    for (double s : trace.scores) hi = std::max(hi, s);
    if (hi <= 0.0) hi = 1.0;
    const Frame f{0, static_cast<double>(std::max<std::size_t>(n, 1)), 0, hi * 1.05};

    std::ostringstream os;
    open_svg(os, title);
    // Anomalous runs as shaded bands.
    for (std::size_t i = 0; i < n;) {
        if (!trace.labels[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && trace.labels[j]) ++j;
        os << "<rect x=\"" << num(f.px(static_cast<double>(i))) << "\" y=\"" << kTop
           << "\" width=\"" << num(f.px(static_cast<double>(j)) - f.px(static_cast<double>(i)))
           << "\" height=\"" << kHeight - kTop - kBottom << "\" fill=\"#f4c7c3\"/>\n";
        i = j;
    }
    for (std::size_t b : trace.clip_boundaries) {
        if (b == 0) continue;
        os << "<line x1=\"" << num(f.px(static_cast<double>(b))) << "\" y1=\"" << kTop
           << "\" x2=\"" << num(f.px(static_cast<double>(b))) << "\" y2=\"" << kHeight - kBottom
           << "\" stroke=\"#999\" stroke-dasharray=\"2 3\"/>\n";
    }
    axes(os, f, "test frame (concatenated)", "frame score", 5, 4);
    os << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
        os << num(f.px(static_cast<double>(i) + 0.5)) << ',' << num(f.py(trace.scores[i])) << ' ';
    }
    os << "\"/>\n</svg>\n";
    return os.str();
}

} // namespace tempshift
