#include "spreadgrad/curve_gradient.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "spreadgrad/errors.hpp"
#include "spreadgrad/parallel.hpp"
#include "spreadgrad/quadrature.hpp"
#include "spreadgrad/rng.hpp"
#include "spreadgrad/stats.hpp"

namespace spreadgrad {

CurveSegment::CurveSegment(Location start, Location end, Eigen::Vector2d outward_normal)
    : start_(start), end_(end), normal_(outward_normal) {
    const Eigen::Vector2d dir = end_ - start_;
    const double len = dir.norm();
    if (!start_.finite() || !end_.finite() || !(len > 0.0)) throw InputError("curve segment must have nonzero length");
    if (std::abs(normal_.norm() - 1.0) > 1e-9) throw InputError("curve segment normal must be a unit vector");
    if (std::abs(normal_.dot(dir / len)) > 1e-9) throw InputError("curve segment normal must be orthogonal to it");
}

const char* to_string(SideClass c) {
    switch (c) {
        case SideClass::Out: return "out";
        case SideClass::In: return "in";
        case SideClass::Inconclusive: return "none";
    }
    return "none";
}

double curve_prior_variance(const CurveSegment& segment, const MaternParams& p) {
    // Along a straight segment the normal second derivative of K reduces to
    // sigma2 phi^2 e^{-phi |u - v|}, whose double integral is closed form.
    const double x = p.phi * segment.length();
    return 2.0 * p.sigma2 * (x - 1.0 + std::exp(-x));
}

namespace {

// Integral of e^{-phi sqrt(c^2 + v^2)} over v in [0, len]. The substitution
// v = |c| sinh t removes the kink at v = 0 that appears for sites near the line.
double offset_integral(double c, double len, double phi, const QuadratureRule& rule) {
    const double top = std::asinh(len / c);
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double ch = std::cosh(top * rule.nodes[q]);
        sum += rule.weights[q] * std::exp(-phi * c * ch) * ch;
    }
    return sum * top * c;
}

std::vector<CurveConditional> batch_conditionals(const std::vector<CurveSegment>& segments,
                                                 const std::vector<Location>& sites, const ConditioningFactor& f,
                                                 std::size_t nodes) {
    const QuadratureRule rule = gauss_legendre_unit(nodes);
    const MaternParams& p = f.params.cov;
    const auto n = static_cast<Eigen::Index>(sites.size());
    const auto s_count = static_cast<Eigen::Index>(segments.size());
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(n, s_count);
    const double k = -p.sigma2 * p.phi * p.phi;
    for (Eigen::Index s = 0; s < s_count; ++s) {
        const CurveSegment& seg = segments[static_cast<std::size_t>(s)];
        const double len = seg.length();
        const Eigen::Vector2d& eta = seg.normal();
        const Eigen::Vector2d tangent = (seg.end() - seg.start()) / len;
        for (Eigen::Index j = 0; j < n; ++j) {
            // grad K(d) = -sigma2 phi^2 e^{-phi |d|} d, and <d, eta> is the same c at
            // every point of the segment, so only |d| varies along it.
            const Eigen::Vector2d rel = seg.start() - sites[static_cast<std::size_t>(j)];
            const double c = rel.dot(eta);
            const double ac = std::abs(c);
            if (ac < 1e-12 * len) continue;
            const double a = rel.dot(tangent);  // foot of the perpendicular sits at -a
            if (ac >= 0.25 * len) {
                // Far from the line the integrand is analytic well beyond the segment.
                double sum = 0.0;
                for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                    const double v = a + len * rule.nodes[q];
                    sum += rule.weights[q] * std::exp(-p.phi * std::sqrt(c * c + v * v));
                }
                gamma(j, s) = k * c * len * sum;
                continue;
            }
            const double b = a + len;
            auto signed_part = [&](double v) {
                const double i = offset_integral(ac, std::abs(v), p.phi, rule);
                return v < 0.0 ? -i : i;
            };
            gamma(j, s) = k * c * (signed_part(b) - signed_part(a));
        }
    }
    const Eigen::MatrixXd v = f.chol.half_solve(gamma);
    const Eigen::VectorXd m = gamma.transpose() * f.alpha;
    std::vector<CurveConditional> out(segments.size());
    for (Eigen::Index s = 0; s < s_count; ++s) {
        const CurveSegment& seg = segments[static_cast<std::size_t>(s)];
        const double mu = seg.length() * f.params.mean.gradient().dot(seg.normal());
        out[static_cast<std::size_t>(s)].mean = mu + m(s);
        out[static_cast<std::size_t>(s)].var = curve_prior_variance(seg, p) - v.col(s).squaredNorm();
    }
    return out;
}

}  // namespace

CurveConditional curve_conditional(const CurveSegment& segment, const std::vector<Location>& sites,
                                   const ConditioningFactor& factor, std::size_t nodes) {
    return batch_conditionals({segment}, sites, factor, nodes).front();
}

double curve_deviate(std::uint64_t seed, std::size_t draw) {
    SplitMix64 g(derive_seed(seed, draw, 0xC7));
    std::normal_distribution<double> normal;
    return normal(g);
}

std::vector<CurveGradientResult> avg_normal_gradients(const std::vector<CurveSegment>& segments,
                                                      const WaitingTimeDataset& data, const PosteriorDraws& draws,
                                                      std::size_t nodes, std::uint64_t seed, double level,
                                                      unsigned threads) {
    if (nodes < 4) throw InputError("curve quadrature needs at least 4 nodes");
    if (draws.draws.empty()) throw InputError("no posterior draws");
    const std::size_t m = draws.draws.size();
    std::vector<CurveGradientResult> out;
    out.reserve(segments.size());
    for (const auto& s : segments) out.push_back({s, std::vector<double>(m, 0.0), 0.0, 0.0, SideClass::Inconclusive});
    if (segments.empty()) return out;

    const Eigen::MatrixXd dist = pairwise_distances(data);
    const std::vector<Location> sites = data.locations();
    parallel_for(m, threads, [&](std::size_t d) {
        const ConditioningFactor f = make_conditioning_factor(data, dist, draws.draws[d]);
        const auto conds = batch_conditionals(segments, sites, f, nodes);
        const double z = curve_deviate(seed, d);
        for (std::size_t s = 0; s < segments.size(); ++s) {
            const double total = conds[s].mean + std::sqrt(std::max(conds[s].var, 0.0)) * z;
            if (!std::isfinite(total)) throw NumericalError("non-finite curve gradient from quadrature");
            out[s].avg_normal_gradient_draws[d] = total / segments[s].length();
        }
    });
    for (auto& r : out) {
        const auto [lo, hi] = equal_tailed_interval(r.avg_normal_gradient_draws, level);
        r.lo = lo;
        r.hi = hi;
        r.classification = lo > 0.0 ? SideClass::Out : hi < 0.0 ? SideClass::In : SideClass::Inconclusive;
    }
    return out;
}

CurveGradientResult avg_normal_gradient(const CurveSegment& segment, const WaitingTimeDataset& data,
                                        const PosteriorDraws& draws, std::size_t nodes, std::uint64_t seed,
                                        double level) {
    return avg_normal_gradients({segment}, data, draws, nodes, seed, level).front();
}

std::array<CurveSegment, 4> box_sides(const Location& c, double side) {
    const double h = 0.5 * side;
    const Location nw{c.x - h, c.y + h}, ne{c.x + h, c.y + h}, se{c.x + h, c.y - h}, sw{c.x - h, c.y - h};
    return {CurveSegment{nw, ne, {0.0, 1.0}}, CurveSegment{ne, se, {1.0, 0.0}}, CurveSegment{se, sw, {0.0, -1.0}},
            CurveSegment{sw, nw, {-1.0, 0.0}}};
}

namespace {

double cross(const Location& o, const Location& a, const Location& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew's monotone chain; counter-clockwise, no collinear points.
std::vector<Location> convex_hull(std::vector<Location> pts) {
    std::sort(pts.begin(), pts.end(), [](const Location& a, const Location& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Location> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0.0) --k;
        hull[k++] = pts[i - 1];
    }
    hull.resize(k - 1);
    return hull;
}

bool inside_hull(const std::vector<Location>& hull, const Location& p) {
    if (hull.size() < 3) return false;
    for (std::size_t i = 0; i < hull.size(); ++i)
        if (cross(hull[i], hull[(i + 1) % hull.size()], p) < 0.0) return false;
    return true;
}

}  // namespace

std::vector<Location> hull_grid(const std::vector<Location>& sites, double spacing) {
    if (!(spacing > 0.0)) throw InputError("grid spacing must be positive");
    std::vector<Location> out;
    if (sites.empty()) return out;
    const auto hull = convex_hull(sites);
    double xmin = sites[0].x, xmax = xmin, ymin = sites[0].y, ymax = ymin;
    for (const auto& s : sites) {
        xmin = std::min(xmin, s.x);
        xmax = std::max(xmax, s.x);
        ymin = std::min(ymin, s.y);
        ymax = std::max(ymax, s.y);
    }
    const auto nx = static_cast<std::size_t>(std::floor((xmax - xmin) / spacing));
    const auto ny = static_cast<std::size_t>(std::floor((ymax - ymin) / spacing));
    for (std::size_t j = 0; j <= ny; ++j)
        for (std::size_t i = 0; i <= nx; ++i) {
            const Location p{xmin + static_cast<double>(i) * spacing, ymin + static_cast<double>(j) * spacing};
            if (inside_hull(hull, p)) out.push_back(p);
        }
    return out;
}

std::vector<BoxTestResult> box_jump_scan(const WaitingTimeDataset& data, const PosteriorDraws& draws,
                                         const std::vector<Location>& centers, const BoxScanConfig& config,
                                         std::uint64_t seed) {
    if (!(config.box_side_km > 0.0)) throw InputError("box side must be positive");
    std::vector<BoxTestResult> out;
    if (centers.empty()) return out;
    std::vector<CurveSegment> segments;
    segments.reserve(4 * centers.size());
    for (const auto& c : centers)
        for (const auto& s : box_sides(c, config.box_side_km)) segments.push_back(s);
    const PosteriorDraws used = subsample_draws(draws, config.max_draws);
    const auto res = avg_normal_gradients(segments, data, used, config.nodes, seed, config.level, config.threads);
    out.reserve(centers.size());
    for (std::size_t k = 0; k < centers.size(); ++k) {
        BoxTestResult b;
        b.center = centers[k];
        b.side = config.box_side_km;
        int outs = 0, ins = 0;
        for (std::size_t s = 0; s < 4; ++s) {
            const auto& r = res[4 * k + s];
            b.sides[s] = r.classification;
            double sum = 0.0;
            for (double v : r.avg_normal_gradient_draws) sum += v;
            b.side_means[s] = sum / static_cast<double>(r.avg_normal_gradient_draws.size());
            outs += r.classification == SideClass::Out;
            ins += r.classification == SideClass::In;
        }
        b.flagged = outs >= 2 && ins == 0;
        out.push_back(b);
    }
    return out;
}

std::vector<BoxTestResult> box_jump_scan(const WaitingTimeDataset& data, const PosteriorDraws& draws,
                                         const BoxScanConfig& config, std::uint64_t seed) {
    return box_jump_scan(data, draws, hull_grid(data.locations(), config.grid_spacing_km), config, seed);
}

}  // namespace spreadgrad
