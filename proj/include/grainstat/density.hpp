#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grainstat/fit.hpp"
#include "grainstat/germgrain.hpp"
#include "grainstat/mc.hpp"

namespace grainstat::density {

using geom::Vec;
using germgrain::GermGrainModel;
using germgrain::Realization;

// A Monte Carlo scalar with provenance. For indicator-based estimates the
// error is the binomial one divided by whatever the value was normalized by.
struct DensityEstimate {
    double value = 0.0;
    double stderr_value = 0.0;
    std::int64_t replications = 0;
    double radius = 0.0;
    std::uint64_t seed = 0;
};

struct RatioPoint {
    double r = 0.0;
    double value = 0.0;
    double stderr_value = 0.0;
};

// Radii strictly decreasing: curves always run toward the r -> 0 limit.
struct RatioCurve {
    std::vector<RatioPoint> entries;

    void validate() const {
        for (std::size_t i = 1; i < entries.size(); ++i)
            if (!(entries[i].r < entries[i - 1].r))
                throw std::invalid_argument("ratio curve: radii must be strictly decreasing");
    }
};

inline void validate_radii(const std::vector<double>& radii) {
    if (radii.empty()) throw std::invalid_argument("radii: need at least one radius");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0)) throw std::invalid_argument("radii: must be positive");
        if (i > 0 && !(radii[i] < radii[i - 1]))
            throw std::invalid_argument("radii: must be strictly decreasing");
    }
}

// Linear value + slope * r fit over the last (smallest) three radii; the
// leading bias of the supported grain classes is O(r), so the intercept is the
// r -> 0 limit. With fewer than three points the fit degrades gracefully.
struct Extrapolation {
    double value = 0.0;
    double stderr_value = 0.0;
    double fit_residual = 0.0;
};

inline Extrapolation extrapolate_to_zero(const RatioCurve& curve) {
    const auto& e = curve.entries;
    if (e.empty()) throw std::invalid_argument("extrapolate: empty curve");
    if (e.size() == 1) return {e[0].value, e[0].stderr_value, 0.0};
    const std::size_t k = std::min<std::size_t>(3, e.size());
    std::vector<double> xs, ys, ss;
    for (std::size_t i = e.size() - k; i < e.size(); ++i) {
        xs.push_back(e[i].r);
        ys.push_back(e[i].value);
        ss.push_back(e[i].stderr_value);
    }
    const auto fit = stats::fit_linear(xs, ys, ss);
    return {fit.intercept, fit.intercept_stderr, fit.residual_rms};
}

// ---------------------------------------------------------------------------
// Shared coverage pass: one realization per replication serves every radius
// and every query point (common random numbers; the coverage indicator is
// monotone in r, so curves are monotone per replication).

struct CoverageCounts {
    std::int64_t n = 0;
    std::vector<std::int64_t> hit;      // points x radii, d1 <= r
    std::vector<std::int64_t> pair;     // points x radii, d2 <= r
    std::vector<std::int64_t> annulus;  // points x radii, 0 < d1 <= r
    std::vector<std::int64_t> vacant;   // per point, d1 > 0

    void resize(std::size_t pts, std::size_t rads) {
        hit.assign(pts * rads, 0);
        pair.assign(pts * rads, 0);
        annulus.assign(pts * rads, 0);
        vacant.assign(pts, 0);
    }

    void merge(const CoverageCounts& o) {
        if (o.hit.empty()) return;
        if (hit.empty()) {
            *this = o;
            return;
        }
        n += o.n;
        for (std::size_t i = 0; i < hit.size(); ++i) {
            hit[i] += o.hit[i];
            pair[i] += o.pair[i];
            annulus[i] += o.annulus[i];
        }
        for (std::size_t i = 0; i < vacant.size(); ++i) vacant[i] += o.vacant[i];
    }
};

inline CoverageCounts coverage_pass(const GermGrainModel& model, const std::vector<Vec>& points,
                                    const std::vector<double>& radii, std::int64_t replications,
                                    std::uint64_t seed, int workers = 1) {
    validate_radii(radii);
    if (replications <= 0) throw std::invalid_argument("coverage: replications must be positive");
    const std::size_t np = points.size(), nr = radii.size();

    auto make_body = [&]() {
        return [&, scratch = Realization{}](std::int64_t rep, rng::Stream&, CoverageCounts& acc) mutable {
            if (acc.hit.empty()) acc.resize(np, nr);
            germgrain::realize_into(model, rng::sub_seed(seed, static_cast<std::uint64_t>(rep)), scratch);
            ++acc.n;
            for (std::size_t p = 0; p < np; ++p) {
                const auto nd = germgrain::nearest_distances(scratch, points[p]);
                if (nd.d1 > 0.0) ++acc.vacant[p];
                for (std::size_t k = 0; k < nr; ++k) {
                    const double r = radii[k];
                    if (nd.d1 <= r) {
                        ++acc.hit[p * nr + k];
                        if (nd.d1 > 0.0) ++acc.annulus[p * nr + k];
                    }
                    if (nd.d2 <= r) ++acc.pair[p * nr + k];
                }
            }
        };
    };
    CoverageCounts total =
        mc::run_replications<CoverageCounts>(replications, seed, workers, make_body);
    if (total.hit.empty()) total.resize(np, nr);
    return total;
}

inline double binomial_stderr(double p, std::int64_t n) {
    return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Mean density via the intensity-measure representation: the outer integral
// runs over the mark distribution, the inner one over the translated grain in
// its own Hausdorff dimension, weighted by the two-argument intensity.
inline double theoretical_density(const GermGrainModel& model, const Vec& x, int steps = 512) {
    const int n = model.grain_dim();
    double acc = 0.0;
    for (const auto& [mark, weight] : pointproc::mark_atoms(model.marks, steps)) {
        double inner = 0.0;
        for (const auto& part : germgrain::build_parts(model.builder, mark)) {
            if (geom::shape_dim(part.shape) != n) continue;
            inner += geom::translated_grain_integral(
                x - part.offset, part.shape,
                [&](const Vec& germ) { return model.intensity(germ, mark); }, steps);
        }
        acc += weight * inner;
    }
    return acc;
}

inline DensityEstimate hitting_probability(const GermGrainModel& model, const Vec& x, double r,
                                           std::int64_t replications, std::uint64_t seed,
                                           int workers = 1) {
    if (!(r > 0.0)) throw std::invalid_argument("hitting_probability: r must be > 0");
    const auto counts = coverage_pass(model, {x}, {r}, replications, seed, workers);
    const double p = static_cast<double>(counts.hit[0]) / static_cast<double>(counts.n);
    return {p, binomial_stderr(p, counts.n), counts.n, r, seed};
}

// Hitting probability normalized by b_{d-n} r^{d-n}; converges to the mean
// density at x as r -> 0.
inline DensityEstimate density_ratio(const GermGrainModel& model, const Vec& x, double r,
                                     std::int64_t replications, std::uint64_t seed,
                                     int workers = 1) {
    if (!(r > 0.0)) throw std::invalid_argument("density_ratio: r must be > 0");
    const int d = model.window.dim;
    const int n = model.grain_dim();
    const double norm = geom::ball_volume(d - n, 1.0) * std::pow(r, d - n);
    DensityEstimate est = hitting_probability(model, x, r, replications, seed, workers);
    est.value /= norm;
    est.stderr_value /= norm;
    return est;
}

inline RatioCurve ratio_curve_from_counts(const GermGrainModel& model,
                                          const std::vector<double>& radii,
                                          const std::vector<std::int64_t>& counts_row,
                                          std::int64_t n_total) {
    const int d = model.window.dim;
    const int n = model.grain_dim();
    RatioCurve curve;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double norm = geom::ball_volume(d - n, 1.0) * std::pow(radii[k], d - n);
        const double p = static_cast<double>(counts_row[k]) / static_cast<double>(n_total);
        curve.entries.push_back({radii[k], p / norm, binomial_stderr(p, n_total) / norm});
    }
    curve.validate();
    return curve;
}

inline RatioCurve convergence_study(const GermGrainModel& model, const Vec& x,
                                    const std::vector<double>& radii, std::int64_t replications,
                                    std::uint64_t seed, int workers = 1) {
    const auto counts = coverage_pass(model, {x}, radii, replications, seed, workers);
    return ratio_curve_from_counts(model, radii,
                                   {counts.hit.begin(), counts.hit.begin() + radii.size()},
                                   counts.n);
}

// P(two or more enlarged grains cover x) / (b_{d-n} r^{d-n}); vanishes in the
// limit faster than the hitting probability itself.
inline RatioCurve overlap_decay(const GermGrainModel& model, const Vec& x,
                                const std::vector<double>& radii, std::int64_t replications,
                                std::uint64_t seed, int workers = 1) {
    const auto counts = coverage_pass(model, {x}, radii, replications, seed, workers);
    return ratio_curve_from_counts(model, radii,
                                   {counts.pair.begin(), counts.pair.begin() + radii.size()},
                                   counts.n);
}

// ---------------------------------------------------------------------------
// Hit-fraction estimator over i.i.d. realizations.

using Probe = std::variant<geom::Grain, geom::Window>;

inline bool grain_intersects_box(const geom::Grain& g, const geom::Window& box) {
    if (const auto* s = std::get_if<geom::Segment>(&g.shape)) {
        const Vec a = g.germ + geom::segment_endpoint(*s, 0);
        const Vec b = g.germ + geom::segment_endpoint(*s, 1);
        double t0 = 0.0, t1 = 1.0;
        const Vec d = b - a;
        for (int i = 0; i < box.dim; ++i) {
            if (d[i] == 0.0) {
                if (a[i] < box.lo[i] || a[i] > box.hi[i]) return false;
                continue;
            }
            double u = (box.lo[i] - a[i]) / d[i];
            double v = (box.hi[i] - a[i]) / d[i];
            if (u > v) std::swap(u, v);
            t0 = std::max(t0, u);
            t1 = std::min(t1, v);
        }
        return t0 <= t1;
    }
    if (const auto* p = std::get_if<geom::Polyline>(&g.shape)) {
        for (std::size_t i = 1; i < p->vertices.size(); ++i) {
            const Vec a = g.germ + p->vertices[i - 1];
            const Vec b = g.germ + p->vertices[i];
            double t0 = 0.0, t1 = 1.0;
            const Vec d = b - a;
            bool feasible = true;
            for (int ax = 0; ax < box.dim; ++ax) {
                if (d[ax] == 0.0) {
                    if (a[ax] < box.lo[ax] || a[ax] > box.hi[ax]) feasible = false;
                    continue;
                }
                double u = (box.lo[ax] - a[ax]) / d[ax];
                double v = (box.hi[ax] - a[ax]) / d[ax];
                if (u > v) std::swap(u, v);
                t0 = std::max(t0, u);
                t1 = std::min(t1, v);
            }
            if (feasible && t0 <= t1) return true;
        }
        return false;
    }
    const double rad = geom::shape_bounding_radius(g.shape);
    const bool ring = std::holds_alternative<geom::Circle>(g.shape) ||
                      std::holds_alternative<geom::Sphere>(g.shape);
    const double dmin = box.distance_to(g.germ);
    if (!ring) return dmin <= rad;  // solid disc or ball
    // A connected box meets the ring iff the radius separates its nearest and
    // farthest distance to the center.
    return dmin <= rad && rad <= box.max_distance_to(g.germ);
}

inline bool realization_hits(const Realization& real, const Probe& probe) {
    if (const auto* ball = std::get_if<geom::Grain>(&probe)) {
        double r = 0.0;
        if (const auto* d = std::get_if<geom::Disc>(&ball->shape))
            r = d->radius;
        else if (const auto* b = std::get_if<geom::Ball>(&ball->shape))
            r = b->radius;
        else
            throw std::invalid_argument("probe: grain probes must be discs or balls");
        return germgrain::covers(real, ball->germ, r);
    }
    const auto& box = std::get<geom::Window>(probe);
    for (const auto& g : real.grains)
        if (grain_intersects_box(g, box)) return true;
    return false;
}

// Fraction of realizations hitting the probe.
inline double empirical_capacity(std::span<const Realization> realizations, const Probe& probe) {
    if (realizations.empty()) throw std::invalid_argument("empirical_capacity: no realizations");
    std::int64_t hits = 0;
    for (const auto& real : realizations)
        if (realization_hits(real, probe)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(realizations.size());
}

// Hit fraction of the ball B_R(x), normalized by b_{d-n} R^{d-n}. Identical by
// construction to empirical_capacity with a ball probe divided by the same
// normalizer.
inline double lambda_hat(const GermGrainModel& model, std::span<const Realization> realizations,
                         const Vec& x, double R) {
    if (realizations.empty()) throw std::invalid_argument("lambda_hat: no realizations");
    if (!(R > 0.0)) throw std::invalid_argument("lambda_hat: R must be > 0");
    const int d = model.window.dim;
    const int n = model.grain_dim();
    std::int64_t hits = 0;
    for (const auto& real : realizations)
        if (germgrain::covers(real, x, R)) ++hits;
    return static_cast<double>(hits) /
           (static_cast<double>(realizations.size()) * geom::ball_volume(d - n, 1.0) *
            std::pow(R, d - n));
}

// ---------------------------------------------------------------------------
// Estimator consistency sweep: R_N = c N^{-tau} with tau in (0, 1/(d-n)), so
// R_N -> 0 while N R_N^{d-n} -> infinity.

struct EstimatorSchedule {
    double c = 0.5;
    double tau = 0.25;
    std::vector<std::int64_t> n_values;
};

inline void validate_schedule(const EstimatorSchedule& s, int d, int n) {
    if (!(s.c > 0.0)) throw std::invalid_argument("schedule: c must be positive");
    if (!(s.tau > 0.0 && s.tau < 1.0 / (d - n)))
        throw std::invalid_argument("schedule: tau must lie strictly inside (0, 1/(d-n))");
    if (s.n_values.empty()) throw std::invalid_argument("schedule: need at least one N");
    for (std::size_t i = 0; i < s.n_values.size(); ++i) {
        if (s.n_values[i] <= 0) throw std::invalid_argument("schedule: N values must be positive");
        if (i > 0 && s.n_values[i] <= s.n_values[i - 1])
            throw std::invalid_argument("schedule: N values must increase");
    }
}

struct EstimatorRow {
    std::int64_t n = 0;
    double radius = 0.0;
    double estimate = 0.0;
    double abs_error = 0.0;
};

struct HitCounter {
    std::int64_t n = 0, hits = 0;
    void merge(const HitCounter& o) {
        n += o.n;
        hits += o.hits;
    }
};

inline std::vector<EstimatorRow> estimator_study(const GermGrainModel& model, const Vec& x,
                                                 const EstimatorSchedule& schedule,
                                                 std::uint64_t seed, int workers = 1,
                                                 int theory_steps = 512) {
    const int d = model.window.dim;
    const int n = model.grain_dim();
    validate_schedule(schedule, d, n);
    const double truth = theoretical_density(model, x, theory_steps);

    std::vector<EstimatorRow> rows;
    for (std::size_t leg = 0; leg < schedule.n_values.size(); ++leg) {
        const std::int64_t N = schedule.n_values[leg];
        const double R = schedule.c * std::pow(static_cast<double>(N), -schedule.tau);
        const std::uint64_t leg_seed = rng::sub_seed(seed, 0x1000 + leg);
        auto make_body = [&]() {
            return [&, scratch = Realization{}](std::int64_t rep, rng::Stream&, HitCounter& acc) mutable {
                germgrain::realize_into(model, rng::sub_seed(leg_seed, static_cast<std::uint64_t>(rep)),
                                        scratch);
                ++acc.n;
                if (germgrain::covers(scratch, x, R)) ++acc.hits;
            };
        };
        const HitCounter c = mc::run_replications<HitCounter>(N, leg_seed, workers, make_body);
        const double est = static_cast<double>(c.hits) /
                           (static_cast<double>(N) * geom::ball_volume(d - n, 1.0) * std::pow(R, d - n));
        rows.push_back({N, R, est, std::abs(est - truth)});
    }
    return rows;
}

}  // namespace grainstat::density
