#include "spreadgrad/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spreadgrad/csv.hpp"
#include "spreadgrad/errors.hpp"

namespace spreadgrad {

namespace {

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

std::string num(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

// World (km, y up) to canvas (px, y down), preserving aspect ratio.
class Canvas {
public:
    Canvas(const std::vector<Location>& pts, const SvgStyle& st, double extra_bottom)
        : margin_(st.margin_px), width_(st.width_px) {
        double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
        if (!pts.empty()) {
            xlo = xhi = pts[0].x;
            ylo = yhi = pts[0].y;
            for (const auto& p : pts) {
                xlo = std::min(xlo, p.x);
                xhi = std::max(xhi, p.x);
                ylo = std::min(ylo, p.y);
                yhi = std::max(yhi, p.y);
            }
        }
        const double span = std::max({xhi - xlo, yhi - ylo, 1e-9});
        scale_ = (width_ - 2 * margin_) / span;
        x0_ = xlo;
        y1_ = yhi;
        height_ = 2 * margin_ + (yhi - ylo) * scale_ + extra_bottom;
    }
    double px(double x) const { return margin_ + (x - x0_) * scale_; }
    double py(double y) const { return margin_ + (y1_ - y) * scale_; }
    double scale() const { return scale_; }
    double width() const { return width_; }
    double height() const { return height_; }

private:
    double margin_, width_, height_ = 0, scale_ = 1, x0_ = 0, y1_ = 0;
};

void header(std::ostringstream& os, const Canvas& c, const SvgStyle& st) {
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(c.width()) << "\" height=\""
       << num(c.height()) << "\" viewBox=\"0 0 " << num(c.width()) << ' ' << num(c.height()) << "\">\n"
       << "<defs><marker id=\"head\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"5\" "
          "markerHeight=\"5\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#1f4e8c\"/></marker></defs>\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!st.title.empty())
        os << "<text x=\"" << num(c.width() / 2) << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           << "font-size=\"14\">" << escape(st.title) << "</text>\n";
}

double nice_round(double v) {
    if (!(v > 0.0)) return 1.0;
    const double p = std::pow(10.0, std::floor(std::log10(v)));
    for (double m : {1.0, 2.0, 5.0})
        if (m * p >= v * 0.75) return m * p;
    return 10.0 * p;
}

}  // namespace

std::string quiver_svg(const std::vector<SpreadSummary>& field, const SvgStyle& style) {
    std::vector<Location> pts;
    for (const auto& s : field) pts.push_back(s.point);
    const Canvas c(pts, style, 40.0);

    std::vector<double> speeds;
    for (const auto& s : field)
        if (s.significant && s.speed) speeds.push_back(s.speed->median);
    double typical = 1.0;
    if (!speeds.empty()) {
        std::sort(speeds.begin(), speeds.end());
        typical = speeds[speeds.size() / 2];
    }
    // Median-speed arrow spans about 3% of the plot width.
    const double px_per_speed = 0.03 * (c.width() - 2 * style.margin_px) / typical;

    std::ostringstream os;
    header(os, c, style);
    os << "<g fill=\"#999999\">\n";
    for (const auto& p : pts) os << "<circle cx=\"" << num(c.px(p.x)) << "\" cy=\"" << num(c.py(p.y)) << "\" r=\"1.5\"/>\n";
    os << "</g>\n<g stroke=\"#1f4e8c\" stroke-width=\"1.2\" marker-end=\"url(#head)\">\n";
    for (const auto& s : field) {
        if (!s.significant || !s.speed) continue;
        const double len = px_per_speed * s.speed->median;
        const double x = c.px(s.point.x), y = c.py(s.point.y);
        os << "<line class=\"arrow\" x1=\"" << num(x) << "\" y1=\"" << num(y) << "\" x2=\""
           << num(x + len * s.direction_mean.x()) << "\" y2=\"" << num(y - len * s.direction_mean.y()) << "\"/>\n";
    }
    os << "</g>\n";
    const double ref = nice_round(typical);
    const double ly = c.height() - 20.0;
    os << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<line x1=\"" << num(style.margin_px) << "\" y1=\"" << num(ly) << "\" x2=\""
       << num(style.margin_px + ref * px_per_speed) << "\" y2=\"" << num(ly)
       << "\" stroke=\"#1f4e8c\" stroke-width=\"1.2\" marker-end=\"url(#head)\"/>\n"
       << "<text x=\"" << num(style.margin_px + ref * px_per_speed + 8) << "\" y=\"" << num(ly + 4) << "\">"
       << csv::format(ref) << " km/year</text>\n</g>\n</svg>\n";
    return os.str();
}

std::string jumps_svg(const std::vector<Location>& sites, const std::vector<RayleighResult>& rayleigh,
                      const std::vector<BoxTestResult>& boxes, const SvgStyle& style) {
    std::vector<Location> pts = sites;
    for (const auto& b : boxes)
        for (const auto& s : box_sides(b.center, b.side)) {
            pts.push_back(s.start());
            pts.push_back(s.end());
        }
    const Canvas c(pts, style, 0.0);
    std::ostringstream os;
    header(os, c, style);
    os << "<g fill=\"#999999\">\n";
    for (const auto& p : sites) os << "<circle cx=\"" << num(c.px(p.x)) << "\" cy=\"" << num(c.py(p.y)) << "\" r=\"1.5\"/>\n";
    os << "</g>\n<g fill=\"black\">\n";
    for (const auto& r : rayleigh)
        if (r.flagged)
            os << "<circle class=\"rayleigh\" cx=\"" << num(c.px(r.center.x)) << "\" cy=\"" << num(c.py(r.center.y))
               << "\" r=\"3.5\"/>\n";
    os << "</g>\n<g stroke=\"#d62728\" stroke-width=\"2\">\n";
    for (const auto& b : boxes) {
        if (!b.flagged) continue;
        const auto sides = box_sides(b.center, b.side);
        for (std::size_t k = 0; k < 4; ++k) {
            if (b.sides[k] != SideClass::Out) continue;
            const auto& s = sides[k];
            os << "<line class=\"box-side\" x1=\"" << num(c.px(s.start().x)) << "\" y1=\"" << num(c.py(s.start().y))
               << "\" x2=\"" << num(c.px(s.end().x)) << "\" y2=\"" << num(c.py(s.end().y)) << "\"/>\n";
        }
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

}  // namespace spreadgrad
