#pragma once

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "grainstat/common.hpp"
#include "grainstat/geom.hpp"
#include "grainstat/quadrature.hpp"
#include "grainstat/rng.hpp"

namespace grainstat::pointproc {

using geom::Vec;
using geom::Window;

// ---------------------------------------------------------------------------
// Intensity of the germ process, position-dependent mark weighting is layered
// on top by the model's modulation (see germgrain.hpp).

struct ConstantIntensity {
    double value = 1.0;
};

// Declared bound is mandatory: thinning against an underestimated bound would
// silently distort the law, so violations found while sampling are hard errors.
struct FieldIntensity {
    std::function<double(const Vec&)> field;
    double bound = 0.0;
};

using Intensity = std::variant<ConstantIntensity, FieldIntensity>;

inline double intensity_bound(const Intensity& in) {
    if (const auto* c = std::get_if<ConstantIntensity>(&in)) return c->value;
    return std::get<FieldIntensity>(in).bound;
}

inline double intensity_eval(const Intensity& in, const Vec& x) {
    if (const auto* c = std::get_if<ConstantIntensity>(&in)) return c->value;
    return std::get<FieldIntensity>(in).field(x);
}

// ---------------------------------------------------------------------------
// Germ laws.

struct PoissonLaw {
    Intensity intensity{ConstantIntensity{1.0}};
};

struct BinomialLaw {
    int m = 1;  // exactly m i.i.d. uniform points in the window
};

// Planar Matern cluster process: uniform Poisson parents, Poisson(mean_children)
// offspring uniform in the cluster ball. Parents are drawn on the window
// dilated by the cluster radius so the restriction to the window is stationary.
struct MaternLaw {
    double alpha = 1.0;
    double mean_children = 1.0;
    double cluster_radius = 1.0;
};

struct OneGrainLaw {};  // a single uniform point

using GermLaw = std::variant<PoissonLaw, BinomialLaw, MaternLaw, OneGrainLaw>;

// Binomial and one-grain processes are defined on the window itself (their
// intensity vanishes outside); Poisson and Matern model whole-space processes
// restricted to whatever window they are sampled on.
inline bool law_is_window_intrinsic(const GermLaw& law) {
    return std::holds_alternative<BinomialLaw>(law) || std::holds_alternative<OneGrainLaw>(law);
}

inline void validate_law(const GermLaw& law, const Window& win) {
    if (const auto* p = std::get_if<PoissonLaw>(&law)) {
        if (intensity_bound(p->intensity) < 0.0) throw model_error("poisson: intensity bound must be >= 0");
        return;
    }
    if (const auto* b = std::get_if<BinomialLaw>(&law)) {
        if (b->m <= 0) throw model_error("binomial: m must be positive");
        return;
    }
    if (const auto* m = std::get_if<MaternLaw>(&law)) {
        if (win.dim != 2) throw model_error("matern: only the planar case has closed-form moments");
        if (m->alpha <= 0.0 || m->mean_children <= 0.0 || m->cluster_radius <= 0.0)
            throw model_error("matern: parameters must be positive");
        return;
    }
}

inline Vec uniform_in_window(const Window& win, rng::Stream& s) {
    Vec p{s.uniform(win.lo.x, win.hi.x), s.uniform(win.lo.y, win.hi.y), 0.0};
    if (win.dim == 3) p.z = s.uniform(win.lo.z, win.hi.z);
    return p;
}

// Deterministic given (law, window, seed); every draw comes from one stream in
// a fixed order.
inline std::vector<Vec> sample_germs(const GermLaw& law, const Window& win, std::uint64_t seed) {
    validate_law(law, win);
    rng::Stream s(seed, 0);
    std::vector<Vec> out;

    if (const auto* p = std::get_if<PoissonLaw>(&law)) {
        const double bound = intensity_bound(p->intensity);
        const std::uint64_t n = s.poisson(bound * win.volume());
        out.reserve(n);
        const bool thin = std::holds_alternative<FieldIntensity>(p->intensity);
        for (std::uint64_t i = 0; i < n; ++i) {
            const Vec x = uniform_in_window(win, s);
            if (thin) {
                const double f = intensity_eval(p->intensity, x);
                if (f > bound)
                    throw model_error("poisson: intensity exceeds its declared bound at a sampled point");
                if (s.next_double() * bound > f) continue;
            }
            out.push_back(x);
        }
        return out;
    }
    if (const auto* b = std::get_if<BinomialLaw>(&law)) {
        out.reserve(b->m);
        for (int i = 0; i < b->m; ++i) out.push_back(uniform_in_window(win, s));
        return out;
    }
    if (const auto* m = std::get_if<MaternLaw>(&law)) {
        const Window parents_win = win.dilated(m->cluster_radius);
        const std::uint64_t parents = s.poisson(m->alpha * parents_win.volume());
        for (std::uint64_t i = 0; i < parents; ++i) {
            const Vec c = uniform_in_window(parents_win, s);
            const std::uint64_t kids = s.poisson(m->mean_children);
            for (std::uint64_t k = 0; k < kids; ++k) {
                const double rho = m->cluster_radius * std::sqrt(s.next_double());
                const double t = 2.0 * geom::pi * s.next_double();
                const Vec x{c.x + rho * std::cos(t), c.y + rho * std::sin(t), 0.0};
                if (win.contains(x)) out.push_back(x);
            }
        }
        return out;
    }
    out.push_back(uniform_in_window(win, s));
    return out;
}

// Intensity as a whole-space function: vanishes outside the window for the
// window-intrinsic laws. Quadratures use this form.
inline double intensity_value(const GermLaw& law, const Window& win, const Vec& x) {
    if (const auto* p = std::get_if<PoissonLaw>(&law)) return intensity_eval(p->intensity, x);
    if (const auto* m = std::get_if<MaternLaw>(&law)) return m->alpha * m->mean_children;
    if (!win.contains(x)) return 0.0;
    if (const auto* b = std::get_if<BinomialLaw>(&law)) return b->m / win.volume();
    return 1.0 / win.volume();
}

inline double intensity_at(const GermLaw& law, const Window& win, const Vec& x) {
    if (!win.contains(x)) throw std::domain_error("intensity_at: point outside the window");
    return intensity_value(law, win, x);
}

inline double intensity_upper_bound(const GermLaw& law, const Window& win) {
    if (const auto* p = std::get_if<PoissonLaw>(&law)) return intensity_bound(p->intensity);
    if (const auto* m = std::get_if<MaternLaw>(&law)) return m->alpha * m->mean_children;
    if (const auto* b = std::get_if<BinomialLaw>(&law)) return b->m / win.volume();
    return 1.0 / win.volume();
}

inline double expected_count(const GermLaw& law, const Window& win) {
    if (const auto* p = std::get_if<PoissonLaw>(&law)) {
        if (const auto* c = std::get_if<ConstantIntensity>(&p->intensity)) return c->value * win.volume();
        const auto& f = std::get<FieldIntensity>(p->intensity);
        return geom::box_integral(win, 256, [&](const Vec& x) { return f.field(x); });
    }
    if (const auto* b = std::get_if<BinomialLaw>(&law)) return b->m;
    if (const auto* m = std::get_if<MaternLaw>(&law)) return m->alpha * m->mean_children * win.volume();
    return 1.0;
}

// Area of the intersection of two discs of equal radius r at center distance delta.
inline double lens_area(double delta, double r) {
    if (delta >= 2.0 * r) return 0.0;
    if (delta <= 0.0) return geom::pi * r * r;
    return 2.0 * r * r * std::acos(0.5 * delta / r) -
           0.5 * delta * std::sqrt(4.0 * r * r - delta * delta);
}

// Closed-form second moment density of the unmarked process, for the models
// where it is known. Poisson factorizes; the one-grain process never holds two
// points, so its density is identically zero.
inline double second_moment_at(const GermLaw& law, const Window& win, const Vec& x, const Vec& y) {
    if (!win.contains(x) || !win.contains(y))
        throw std::domain_error("second_moment_at: points must lie in the window");
    if (const auto* p = std::get_if<PoissonLaw>(&law))
        return intensity_eval(p->intensity, x) * intensity_eval(p->intensity, y);
    if (const auto* b = std::get_if<BinomialLaw>(&law)) {
        const double v = win.volume();
        return static_cast<double>(b->m) * (b->m - 1) / (v * v);
    }
    if (const auto* m = std::get_if<MaternLaw>(&law)) {
        const double am = m->alpha * m->mean_children;
        const double r = m->cluster_radius;
        const double lens = lens_area(geom::distance(x, y), r);
        return am * am +
               m->alpha * m->mean_children * m->mean_children * lens /
                   (geom::pi * geom::pi * r * r * r * r);
    }
    return 0.0;
}

inline double pair_correlation_at(const GermLaw& law, const Window& win, const Vec& x, const Vec& y) {
    const double lx = intensity_at(law, win, x);
    const double ly = intensity_at(law, win, y);
    if (lx == 0.0 || ly == 0.0) return 0.0;
    return second_moment_at(law, win, x, y) / (lx * ly);
}

// ---------------------------------------------------------------------------
// Marks.

struct Mark {
    double length = 0.0;
    double angle = 0.0;
    double radius = 0.0;
};

struct DiracMark {
    Mark mark;
};

// Independent (length, orientation) pair for segment grains: length uniform on
// [len_lo, len_hi], orientation uniform on [0, 2*pi).
struct SegmentUniformMark {
    double len_lo = 0.0;
    double len_hi = 1.0;
};

struct DiscreteMixtureMark {
    std::vector<std::pair<double, Mark>> atoms;  // (probability, mark)
};

struct FixedRadiusMark {
    double radius = 1.0;
};

using MarkDistribution = std::variant<DiracMark, SegmentUniformMark, DiscreteMixtureMark, FixedRadiusMark>;

inline void validate_marks(const MarkDistribution& q) {
    if (const auto* u = std::get_if<SegmentUniformMark>(&q)) {
        if (!(u->len_lo >= 0.0 && u->len_hi > u->len_lo))
            throw model_error("marks: uniform length range must satisfy 0 <= lo < hi");
        return;
    }
    if (const auto* d = std::get_if<DiscreteMixtureMark>(&q)) {
        if (d->atoms.empty()) throw model_error("marks: discrete mixture needs at least one atom");
        double total = 0.0;
        for (const auto& [p, m] : d->atoms) {
            if (p < 0.0) throw model_error("marks: probabilities must be >= 0");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw model_error("marks: probabilities must sum to 1");
        return;
    }
    if (const auto* f = std::get_if<FixedRadiusMark>(&q)) {
        if (f->radius <= 0.0) throw model_error("marks: radius must be positive");
    }
}

inline Mark sample_mark(const MarkDistribution& q, rng::Stream& s) {
    if (const auto* d = std::get_if<DiracMark>(&q)) return d->mark;
    if (const auto* u = std::get_if<SegmentUniformMark>(&q)) {
        Mark m;
        m.length = s.uniform(u->len_lo, u->len_hi);
        m.angle = s.uniform(0.0, 2.0 * geom::pi);
        return m;
    }
    if (const auto* f = std::get_if<FixedRadiusMark>(&q)) {
        Mark m;
        m.radius = f->radius;
        return m;
    }
    const auto& mix = std::get<DiscreteMixtureMark>(q);
    double u = s.next_double();
    for (const auto& [p, m] : mix.atoms) {
        if (u < p) return m;
        u -= p;
    }
    return mix.atoms.back().second;
}

// i.i.d. marks, one per point. Mark i is a function of (seed, i) alone, so a
// point keeps its mark no matter what the rest of the sample looks like.
inline std::vector<Mark> attach_marks(const std::vector<Vec>& points, const MarkDistribution& q,
                                      std::uint64_t seed) {
    validate_marks(q);
    std::vector<Mark> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        rng::Stream s(seed, i + 1);
        out.push_back(sample_mark(q, s));
    }
    return out;
}

// Quadrature atoms (mark, weight) representing Q, exact for the discrete
// families and a steps x steps midpoint rule for the uniform segment family.
inline std::vector<std::pair<Mark, double>> mark_atoms(const MarkDistribution& q, int steps) {
    if (steps <= 0) throw std::invalid_argument("mark_atoms: steps must be positive");
    std::vector<std::pair<Mark, double>> out;
    if (const auto* d = std::get_if<DiracMark>(&q)) {
        out.emplace_back(d->mark, 1.0);
        return out;
    }
    if (const auto* f = std::get_if<FixedRadiusMark>(&q)) {
        Mark m;
        m.radius = f->radius;
        out.emplace_back(m, 1.0);
        return out;
    }
    if (const auto* mix = std::get_if<DiscreteMixtureMark>(&q)) {
        for (const auto& [p, m] : mix->atoms) out.emplace_back(m, p);
        return out;
    }
    const auto& u = std::get<SegmentUniformMark>(q);
    const int ml = steps, ma = steps;
    for (int i = 0; i < ml; ++i) {
        Mark m;
        m.length = u.len_lo + (u.len_hi - u.len_lo) * (i + 0.5) / ml;
        for (int j = 0; j < ma; ++j) {
            m.angle = 2.0 * geom::pi * (j + 0.5) / ma;
            out.emplace_back(m, 1.0 / (ml * ma));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// First-moment (Campbell) check: Monte Carlo mean of sums over the process
// against the quadrature of f times the intensity over the window.

struct CampbellResult {
    double mc_mean = 0.0;
    double integral = 0.0;
    double stderr_mean = 0.0;
};

template <class Fn>
CampbellResult campbell_check(const GermLaw& law, const Window& win, Fn&& f,
                              std::int64_t replications, std::uint64_t seed, int quad_steps = 256) {
    if (replications <= 0) throw std::invalid_argument("campbell_check: replications must be positive");
    double sum = 0.0, sum2 = 0.0;
    for (std::int64_t i = 0; i < replications; ++i) {
        const auto pts = sample_germs(law, win, rng::sub_seed(seed, static_cast<std::uint64_t>(i)));
        double v = 0.0;
        for (const Vec& p : pts) v += f(p);
        sum += v;
        sum2 += v * v;
    }
    CampbellResult r;
    r.mc_mean = sum / replications;
    const double var = std::max(0.0, sum2 / replications - r.mc_mean * r.mc_mean);
    r.stderr_mean = std::sqrt(var / replications);
    r.integral = geom::box_integral(
        win, quad_steps, [&](const Vec& x) { return f(x) * intensity_value(law, win, x); });
    return r;
}

}  // namespace grainstat::pointproc
