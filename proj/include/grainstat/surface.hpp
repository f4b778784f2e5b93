#pragma once

#include <cstdint>
#include <vector>

#include "grainstat/density.hpp"
#include "grainstat/germgrain.hpp"
#include "grainstat/grid.hpp"

namespace grainstat::surface {

using geom::Vec;
using germgrain::GermGrainModel;
using germgrain::PlacedShape;
using pointproc::Mark;

// ---------------------------------------------------------------------------
// Analytic boundary bookkeeping for the supported composite grains: a union of
// closed discs (the solid bodies) plus lower dimensional decorations (segments
// or circles). Boundary points fall into three classes by volume density of
// the set: 1/2 on body boundary arcs exposed to the outside, 0 on decorations
// clear of every body, 1 never in this catalog (decorations buried inside a
// body are interior points and carry no boundary mass at all).

struct BoundaryDecomposition {
    double essential = 0.0;     // H^{d-1} of the density-1/2 boundary
    double whisker = 0.0;       // H^{d-1} of the density-0 boundary
    double interiorised = 0.0;  // H^{d-1} of the density-1 boundary

    double boundary_measure() const { return essential + whisker + interiorised; }
    double outer_content() const { return essential + 2.0 * whisker; }
};

struct BodyDisc {
    Vec center;
    double radius = 0.0;
};

namespace detail {

inline bool strictly_inside(const Vec& p, const BodyDisc& b) {
    return geom::distance(p, b.center) < b.radius;
}

// Angular intervals of the circle (center c, radius R) that avoid the open
// interior of every body; exact crossing angles, midpoint classification.
inline std::vector<std::pair<double, double>> circle_arcs_outside(
    const Vec& c, double R, const std::vector<BodyDisc>& bodies, const BodyDisc* self) {
    std::vector<double> cuts;
    for (const BodyDisc& b : bodies) {
        if (&b == self) continue;
        const double delta = geom::distance(c, b.center);
        if (delta + R <= b.radius) return {};  // swallowed whole
        if (delta >= R + b.radius || delta + b.radius <= R) continue;  // no crossing
        if (delta == 0.0) continue;
        const double t = (delta * delta + R * R - b.radius * b.radius) / (2.0 * delta * R);
        if (t <= -1.0) return {};
        if (t >= 1.0) continue;
        const double phi = std::atan2(b.center.y - c.y, b.center.x - c.x);
        const double alpha = std::acos(t);
        auto wrap = [](double a) {
            while (a < 0.0) a += 2.0 * geom::pi;
            while (a >= 2.0 * geom::pi) a -= 2.0 * geom::pi;
            return a;
        };
        cuts.push_back(wrap(phi - alpha));
        cuts.push_back(wrap(phi + alpha));
    }
    auto outside_all = [&](double t) {
        const Vec p{c.x + R * std::cos(t), c.y + R * std::sin(t), 0.0};
        for (const BodyDisc& b : bodies) {
            if (&b == self) continue;
            if (strictly_inside(p, b)) return false;
        }
        return true;
    };
    if (cuts.empty()) {
        if (outside_all(0.0)) return {{0.0, 2.0 * geom::pi}};
        return {};
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<std::pair<double, double>> arcs;
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        const double t0 = cuts[i];
        const double t1 = i + 1 < cuts.size() ? cuts[i + 1] : cuts[0] + 2.0 * geom::pi;
        if (outside_all(0.5 * (t0 + t1))) arcs.emplace_back(t0, t1);
    }
    return arcs;
}

// Parameter intervals of the segment a..b avoiding every body's interior.
inline std::vector<std::pair<double, double>> segment_params_outside(
    const Vec& a, const Vec& b, const std::vector<BodyDisc>& bodies) {
    std::vector<double> cuts{0.0, 1.0};
    const Vec d = b - a;
    const double len2 = d.dot(d);
    for (const BodyDisc& body : bodies) {
        const Vec f = a - body.center;
        const double B = 2.0 * f.dot(d);
        const double C = f.dot(f) - body.radius * body.radius;
        const double disc = B * B - 4.0 * len2 * C;
        if (disc <= 0.0) continue;
        const double sq = std::sqrt(disc);
        for (double t : {(-B - sq) / (2.0 * len2), (-B + sq) / (2.0 * len2)})
            if (t > 0.0 && t < 1.0) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto outside_all = [&](double t) {
        const Vec p = a + d * t;
        for (const BodyDisc& body : bodies)
            if (strictly_inside(p, body)) return false;
        return true;
    };
    std::vector<std::pair<double, double>> kept;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (outside_all(0.5 * (cuts[i] + cuts[i + 1]))) kept.emplace_back(cuts[i], cuts[i + 1]);
    return kept;
}

struct CompositeParts {
    std::vector<BodyDisc> bodies;
    std::vector<std::pair<Vec, geom::Segment>> segments;  // placed lower-dim pieces
    std::vector<std::pair<Vec, geom::Circle>> rings;
    const geom::Ball* ball = nullptr;
};

inline CompositeParts classify(const std::vector<PlacedShape>& parts) {
    CompositeParts c;
    for (const auto& p : parts) {
        if (const auto* d = std::get_if<geom::Disc>(&p.shape)) {
            c.bodies.push_back({p.offset, d->radius});
        } else if (const auto* s = std::get_if<geom::Segment>(&p.shape)) {
            c.segments.emplace_back(p.offset, *s);
        } else if (const auto* r = std::get_if<geom::Circle>(&p.shape)) {
            c.rings.emplace_back(p.offset, *r);
        } else if (const auto* b = std::get_if<geom::Ball>(&p.shape)) {
            if (parts.size() != 1)
                throw model_error("boundary catalog: a ball must be the only part");
            c.ball = b;
        } else {
            throw model_error("boundary catalog: unsupported part in composite");
        }
    }
    return c;
}

// Quadrature of `weight` over the three boundary classes of the composite in
// its local frame; weight(z) is evaluated at local boundary points z.
template <class Weight>
void integrate_boundary(const std::vector<PlacedShape>& parts, int steps, Weight&& weight,
                        double& essential_out, double& whisker_out) {
    const CompositeParts c = classify(parts);
    if (c.ball) {
        geom::for_each_quadrature_node(geom::Sphere{c.ball->radius}, steps,
                                       [&](const Vec& z, double w) { essential_out += weight(z) * w; });
        return;
    }
    for (const BodyDisc& b : c.bodies) {
        const double R = b.radius;
        for (const auto& [t0, t1] : circle_arcs_outside(b.center, R, c.bodies, &b)) {
            const double arc = (t1 - t0) * R;
            const int m = std::max(1, static_cast<int>(std::ceil(arc * steps)));
            const double w = arc / m;
            for (int i = 0; i < m; ++i) {
                const double t = t0 + (t1 - t0) * (i + 0.5) / m;
                essential_out += weight(Vec{b.center.x + R * std::cos(t),
                                            b.center.y + R * std::sin(t), 0.0}) *
                                 w;
            }
        }
    }
    auto add_segment = [&](const Vec& a, const Vec& bp) {
        const Vec d = bp - a;
        const double len = d.norm();
        for (const auto& [t0, t1] : segment_params_outside(a, bp, c.bodies)) {
            const double piece = (t1 - t0) * len;
            if (piece <= 0.0) continue;
            const int m = std::max(1, static_cast<int>(std::ceil(piece * steps)));
            const double w = piece / m;
            for (int i = 0; i < m; ++i)
                whisker_out += weight(a + d * (t0 + (t1 - t0) * (i + 0.5) / m)) * w;
        }
    };
    for (const auto& [off, seg] : c.segments)
        add_segment(off + geom::segment_endpoint(seg, 0), off + geom::segment_endpoint(seg, 1));
    for (const auto& [off, ring] : c.rings) {
        const double R = ring.radius;
        for (const auto& [t0, t1] : circle_arcs_outside(off, R, c.bodies, nullptr)) {
            const double arc = (t1 - t0) * R;
            const int m = std::max(1, static_cast<int>(std::ceil(arc * steps)));
            const double w = arc / m;
            for (int i = 0; i < m; ++i) {
                const double t = t0 + (t1 - t0) * (i + 0.5) / m;
                whisker_out +=
                    weight(Vec{off.x + R * std::cos(t), off.y + R * std::sin(t), 0.0}) * w;
            }
        }
    }
}

// Integral of `weight` over the solid part of the composite (union of bodies),
// with respect to volume.
template <class Weight>
double integrate_solid(const std::vector<PlacedShape>& parts, int steps, Weight&& weight) {
    const CompositeParts c = classify(parts);
    double acc = 0.0;
    if (c.ball) {
        geom::for_each_quadrature_node(geom::Ball{c.ball->radius}, steps,
                                       [&](const Vec& z, double w) { acc += weight(z) * w; });
        return acc;
    }
    for (std::size_t i = 0; i < c.bodies.size(); ++i) {
        const BodyDisc& b = c.bodies[i];
        geom::for_each_quadrature_node(geom::Disc{b.radius}, steps, [&](const Vec& z, double w) {
            const Vec p = b.center + z;
            for (std::size_t j = 0; j < i; ++j)
                if (strictly_inside(p, c.bodies[j])) return;  // counted by an earlier body
            acc += weight(p) * w;
        });
    }
    return acc;
}

}  // namespace detail

inline BoundaryDecomposition boundary_decomposition(const std::vector<PlacedShape>& parts,
                                                    int steps = 2048) {
    BoundaryDecomposition out;
    detail::integrate_boundary(parts, steps, [](const Vec&) { return 1.0; }, out.essential,
                               out.whisker);
    return out;
}

inline BoundaryDecomposition boundary_decomposition(const germgrain::ShapeBuilder& builder,
                                                    const Mark& mark, int steps = 2048) {
    return boundary_decomposition(germgrain::build_parts(builder, mark), steps);
}

// ---------------------------------------------------------------------------
// Theoretical specific-area routes.

// Mean number of grains containing x (the exponent of the void probability for
// Poisson germs).
inline double mean_cover_count(const GermGrainModel& model, const Vec& x, int steps = 512) {
    double acc = 0.0;
    for (const auto& [mark, weight] : pointproc::mark_atoms(model.marks, steps)) {
        acc += weight * detail::integrate_solid(
                            germgrain::build_parts(model.builder, mark), steps,
                            [&](const Vec& z) { return model.intensity(x - z, mark); });
    }
    return acc;
}

inline double void_probability_boolean(const GermGrainModel& model, const Vec& x, int steps = 512) {
    if (!std::holds_alternative<pointproc::PoissonLaw>(model.law))
        throw model_error("void probability: closed form requires Poisson germs");
    return std::exp(-mean_cover_count(model, x, steps));
}

// The bracket common to both routes: boundary density of the typical grain at
// x, with the density-0 part counted twice.
inline double sigma_bracket(const GermGrainModel& model, const Vec& x, int steps = 512) {
    double essential = 0.0, whisker = 0.0;
    for (const auto& [mark, weight] : pointproc::mark_atoms(model.marks, steps)) {
        double e = 0.0, w = 0.0;
        detail::integrate_boundary(germgrain::build_parts(model.builder, mark), steps,
                                   [&](const Vec& z) { return model.intensity(x - z, mark); }, e, w);
        essential += weight * e;
        whisker += weight * w;
    }
    return essential + 2.0 * whisker;
}

// Same integral without the doubling: the mean boundary density route for a
// one-grain set, which sigma exceeds by exactly the whisker term.
inline double onegrain_boundary_density(const GermGrainModel& model, const Vec& x, int steps = 512) {
    double total = 0.0;
    for (const auto& [mark, weight] : pointproc::mark_atoms(model.marks, steps)) {
        double e = 0.0, w = 0.0;
        detail::integrate_boundary(germgrain::build_parts(model.builder, mark), steps,
                                   [&](const Vec& z) { return model.intensity(x - z, mark); }, e, w);
        total += weight * (e + w);
    }
    return total;
}

// Specific area of a Boolean model: void probability times the bracket. The
// independence of Poisson grains is what makes this product form valid.
inline double boolean_specific_area_theoretical(const GermGrainModel& model, const Vec& x,
                                                int steps = 512) {
    if (!std::holds_alternative<pointproc::PoissonLaw>(model.law))
        throw model_error("specific area: the product formula applies to Poisson germ processes only");
    return void_probability_boolean(model, x, steps) * sigma_bracket(model, x, steps);
}

// Specific area of a one-grain set: the bracket alone, no void factor.
inline double onegrain_specific_area_theoretical(const GermGrainModel& model, const Vec& x,
                                                 int steps = 512) {
    if (!std::holds_alternative<pointproc::OneGrainLaw>(model.law))
        throw model_error("specific area: this route applies to one-grain models only");
    return sigma_bracket(model, x, steps);
}

// ---------------------------------------------------------------------------
// Monte Carlo estimates.

inline density::DensityEstimate annulus_probability(const GermGrainModel& model, const Vec& x,
                                                    double r, std::int64_t replications,
                                                    std::uint64_t seed, int workers = 1) {
    if (!(r > 0.0)) throw std::invalid_argument("annulus_probability: r must be > 0");
    const auto counts = density::coverage_pass(model, {x}, {r}, replications, seed, workers);
    const double p = static_cast<double>(counts.annulus[0]) / static_cast<double>(counts.n);
    return {p, density::binomial_stderr(p, counts.n), counts.n, r, seed};
}

struct SpecificAreaResult {
    density::RatioCurve curve;  // annulus probability over r, per radius
    density::Extrapolation extrapolated;
};

inline SpecificAreaResult specific_area(const GermGrainModel& model, const Vec& x,
                                        const std::vector<double>& radii,
                                        std::int64_t replications, std::uint64_t seed,
                                        int workers = 1) {
    const auto counts = density::coverage_pass(model, {x}, radii, replications, seed, workers);
    SpecificAreaResult out;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double p = static_cast<double>(counts.annulus[k]) / static_cast<double>(counts.n);
        out.curve.entries.push_back(
            {radii[k], p / radii[k], density::binomial_stderr(p, counts.n) / radii[k]});
    }
    out.curve.validate();
    out.extrapolated = density::extrapolate_to_zero(out.curve);
    return out;
}

struct ContactPoint {
    double r = 0.0;
    double h = 0.0;
    double stderr_value = 0.0;
};

// Conditional contact distribution estimated from shared replications; the
// entries are exactly nondecreasing in r because the annulus indicator is
// monotone per replication.
struct ContactCurve {
    std::vector<ContactPoint> entries;   // ascending r, H(0) = 0
    double conditioning = 0.0;           // estimate of P(x not in the set)
    double conditioning_stderr = 0.0;
    std::int64_t replications = 0;
};

inline ContactCurve contact_distribution(const GermGrainModel& model, const Vec& x,
                                         const std::vector<double>& r_grid,
                                         std::int64_t replications, std::uint64_t seed,
                                         int workers = 1, double min_conditioning = 0.05) {
    std::vector<double> rs;
    for (double r : r_grid)
        if (r > 0.0) rs.push_back(r);
    std::sort(rs.begin(), rs.end(), std::greater<>());
    rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
    if (rs.empty()) throw std::invalid_argument("contact_distribution: need positive radii");

    const auto counts = density::coverage_pass(model, {x}, rs, replications, seed, workers);
    const double vac = static_cast<double>(counts.vacant[0]) / static_cast<double>(counts.n);
    ContactCurve out;
    out.replications = counts.n;
    out.conditioning = vac;
    out.conditioning_stderr = density::binomial_stderr(vac, counts.n);
    if (vac < min_conditioning)
        throw model_error("contact_distribution: conditioning probability below threshold, "
                          "the conditional estimate is ill-posed at this point");

    out.entries.push_back({0.0, 0.0, 0.0});
    for (std::size_t k = rs.size(); k-- > 0;) {
        const double h = static_cast<double>(counts.annulus[k]) /
                         static_cast<double>(counts.vacant[0]);
        out.entries.push_back(
            {rs[k], h, density::binomial_stderr(h, counts.vacant[0])});
    }
    return out;
}

// Right derivative at 0: slope of the error-weighted fit through the origin
// over the smallest positive radii.
inline double contact_derivative_at_zero(const ContactCurve& curve, std::size_t use_points = 3) {
    std::vector<double> xs, ys, ss;
    for (const auto& e : curve.entries) {
        if (e.r <= 0.0) continue;
        xs.push_back(e.r);
        ys.push_back(e.h);
        ss.push_back(e.stderr_value);
        if (xs.size() == use_points) break;
    }
    if (xs.size() < 3)
        throw std::invalid_argument("contact_derivative_at_zero: need at least 3 positive radii");
    return stats::fit_slope_through_origin(xs, ys, ss);
}

// ---------------------------------------------------------------------------
// Local mean outer content: expected band volume over r, by grid.

struct BandSums {
    std::int64_t n = 0;
    std::vector<double> sum, sum2;
    void merge(const BandSums& o) {
        if (o.sum.empty()) return;
        if (sum.empty()) {
            *this = o;
            return;
        }
        n += o.n;
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += o.sum[i];
            sum2[i] += o.sum2[i];
        }
    }
};

inline density::RatioCurve mean_outer_content(const GermGrainModel& model,
                                              const geom::Window& region,
                                              const std::vector<double>& radii,
                                              std::int64_t replications, std::uint64_t seed,
                                              int resolution = 1024, int workers = 1) {
    density::validate_radii(radii);
    if (model.grain_dim() < model.window.dim)
        throw model_error("mean_outer_content: grains are lower dimensional, use the density "
                          "ratio path instead");
    auto make_body = [&]() {
        return [&, scratch = germgrain::Realization{}](std::int64_t rep, rng::Stream&,
                                                       BandSums& acc) mutable {
            if (acc.sum.empty()) {
                acc.sum.assign(radii.size(), 0.0);
                acc.sum2.assign(radii.size(), 0.0);
            }
            germgrain::realize_into(model, rng::sub_seed(seed, static_cast<std::uint64_t>(rep)),
                                    scratch);
            ++acc.n;
            const auto vols =
                geom::annulus_volumes_grid(scratch.grains, radii, region, resolution);
            for (std::size_t k = 0; k < radii.size(); ++k) {
                const double v = vols[k] / radii[k];
                acc.sum[k] += v;
                acc.sum2[k] += v * v;
            }
        };
    };
    BandSums sums = mc::run_replications<BandSums>(replications, seed, workers, make_body);
    density::RatioCurve curve;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double mean = sums.sum[k] / sums.n;
        const double var = std::max(0.0, sums.sum2[k] / sums.n - mean * mean);
        curve.entries.push_back({radii[k], mean, std::sqrt(var / sums.n)});
    }
    curve.validate();
    return curve;
}

}  // namespace grainstat::surface
