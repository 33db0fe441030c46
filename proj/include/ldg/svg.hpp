#ifndef LDG_SVG_HPP
#define LDG_SVG_HPP

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "ldg/errors.hpp"

namespace ldg {

struct ChartSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> sd;  // band half-width; zeros for no band
};

// Self-contained SVG line chart: one polyline per series with a shaded
// mean +/- sd band, axes with ticks, and a legend. Deliberately plain.
inline void write_line_chart(std::ostream& os, const std::string& title,
                             const std::string& xlabel,
                             const std::string& ylabel,
                             const std::vector<ChartSeries>& series) {
    if (series.empty()) throw ConfigError("chart: no series");
    static const char* colors[] = {"#2a9d2a", "#d62728", "#1f77b4",
                                   "#ff7f0e", "#9467bd", "#8c564b"};
    const double width = 840, height = 520;
    const double ml = 80, mr = 170, mt = 50, mb = 60;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const ChartSeries& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            double lo = s.mean[i] - (i < s.sd.size() ? s.sd[i] : 0.0);
            double hi = s.mean[i] + (i < s.sd.size() ? s.sd[i] : 0.0);
            ymin = std::min(ymin, lo);
            ymax = std::max(ymax, hi);
        }
    }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;
    double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) { return ml + pw * (x - xmin) / (xmax - xmin); };
    auto py = [&](double y) {
        return mt + ph * (1.0 - (y - ymin) / (ymax - ymin));
    };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return std::string(buf);
    };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
       << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
       << height << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << ml + pw / 2 << "\" y=\"28\" font-size=\"16\" "
          "text-anchor=\"middle\" font-family=\"sans-serif\">"
       << title << "</text>\n";

    // axes and ticks
    os << "<g stroke=\"#333\" stroke-width=\"1\">\n"
       << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\""
       << ml + pw << "\" y2=\"" << mt + ph << "\"/>\n"
       << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
       << "\" y2=\"" << mt + ph << "\"/>\n</g>\n";
    os << "<g font-size=\"11\" font-family=\"sans-serif\" fill=\"#333\">\n";
    for (int i = 0; i <= 5; ++i) {
        double fx = xmin + (xmax - xmin) * i / 5.0;
        double fy = ymin + (ymax - ymin) * i / 5.0;
        os << "<line x1=\"" << px(fx) << "\" y1=\"" << mt + ph << "\" x2=\""
           << px(fx) << "\" y2=\"" << mt + ph + 5
           << "\" stroke=\"#333\"/>\n"
           << "<text x=\"" << px(fx) << "\" y=\"" << mt + ph + 18
           << "\" text-anchor=\"middle\">" << fmt(fx) << "</text>\n"
           << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(fy) << "\" x2=\""
           << ml << "\" y2=\"" << py(fy) << "\" stroke=\"#333\"/>\n"
           << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
           << "\" text-anchor=\"end\">" << fmt(fy) << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 14
       << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel
       << "</text>\n"
       << "<text x=\"20\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 "
          "20 "
       << mt + ph / 2 << ")\">" << ylabel << "</text>\n</g>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const ChartSeries& s = series[k];
        const char* color = colors[k % 6];
        bool has_band = false;
        for (double v : s.sd)
            if (v > 0.0) has_band = true;
        if (has_band) {
            os << "<polygon fill=\"" << color
               << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                os << px(s.x[i]) << ',' << py(s.mean[i] + s.sd[i]) << ' ';
            for (std::size_t i = s.x.size(); i-- > 0;)
                os << px(s.x[i]) << ',' << py(s.mean[i] - s.sd[i]) << ' ';
            os << "\"/>\n";
        }
        os << "<polyline fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            os << px(s.x[i]) << ',' << py(s.mean[i]) << ' ';
        os << "\"/>\n";
        double ly = mt + 18 + 20 * static_cast<double>(k);
        os << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << ly << "\" x2=\""
           << ml + pw + 36 << "\" y2=\"" << ly << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n"
           << "<text x=\"" << ml + pw + 42 << "\" y=\"" << ly + 4
           << "\" font-size=\"12\" font-family=\"sans-serif\">" << s.name
           << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace ldg

#endif
