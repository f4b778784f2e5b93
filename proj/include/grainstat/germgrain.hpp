#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "grainstat/geom.hpp"
#include "grainstat/pointproc.hpp"
#include "grainstat/quadrature.hpp"

namespace grainstat::germgrain {

using geom::Grain;
using geom::Shape;
using geom::Vec;
using geom::Window;
using pointproc::GermLaw;
using pointproc::Mark;
using pointproc::MarkDistribution;

// ---------------------------------------------------------------------------
// Shape builders: map a mark to one or more placed shapes relative to the germ.

struct PlacedShape {
    Vec offset;
    Shape shape;
};

struct SegmentShapeBuilder {};
struct CircleShapeBuilder {};
struct DiscShapeBuilder {};
struct SphereShapeBuilder {};
struct BallShapeBuilder {};

// Disc of mark.radius with a segment of mark.length attached radially outward
// at direction mark.angle; whisker and disc meet in a single point.
struct DiscWhiskerShapeBuilder {};

// Two overlapping discs of mark.radius with centers `separation` apart along
// direction mark.angle.
struct TwinDiscShapeBuilder {
    double separation = 1.0;
};

// Fixed polyline attached to every germ, independent of the mark.
struct PolylineShapeBuilder {
    geom::Polyline polyline;
};

using ShapeBuilder = std::variant<SegmentShapeBuilder, CircleShapeBuilder, DiscShapeBuilder,
                                  SphereShapeBuilder, BallShapeBuilder, DiscWhiskerShapeBuilder,
                                  TwinDiscShapeBuilder, PolylineShapeBuilder>;

inline std::vector<PlacedShape> build_parts(const ShapeBuilder& b, const Mark& m) {
    std::vector<PlacedShape> parts;
    if (std::holds_alternative<SegmentShapeBuilder>(b)) {
        if (m.length <= 0.0) throw model_error("segment shape: mark length must be positive");
        parts.push_back({Vec{}, geom::Segment{m.length, m.angle}});
    } else if (std::holds_alternative<CircleShapeBuilder>(b)) {
        if (m.radius <= 0.0) throw model_error("circle shape: mark radius must be positive");
        parts.push_back({Vec{}, geom::Circle{m.radius}});
    } else if (std::holds_alternative<DiscShapeBuilder>(b)) {
        if (m.radius <= 0.0) throw model_error("disc shape: mark radius must be positive");
        parts.push_back({Vec{}, geom::Disc{m.radius}});
    } else if (std::holds_alternative<SphereShapeBuilder>(b)) {
        if (m.radius <= 0.0) throw model_error("sphere shape: mark radius must be positive");
        parts.push_back({Vec{}, geom::Sphere{m.radius}});
    } else if (std::holds_alternative<BallShapeBuilder>(b)) {
        if (m.radius <= 0.0) throw model_error("ball shape: mark radius must be positive");
        parts.push_back({Vec{}, geom::Ball{m.radius}});
    } else if (std::holds_alternative<DiscWhiskerShapeBuilder>(b)) {
        if (m.radius <= 0.0 || m.length <= 0.0)
            throw model_error("disc+whisker shape: needs positive radius and whisker length");
        parts.push_back({Vec{}, geom::Disc{m.radius}});
        const Vec dir{std::cos(m.angle), std::sin(m.angle), 0.0};
        parts.push_back({dir * (m.radius + 0.5 * m.length), geom::Segment{m.length, m.angle}});
    } else if (const auto* t = std::get_if<TwinDiscShapeBuilder>(&b)) {
        if (m.radius <= 0.0) throw model_error("twin disc shape: mark radius must be positive");
        if (!(t->separation > 0.0 && t->separation < 2.0 * m.radius))
            throw model_error("twin disc shape: separation must keep the discs overlapping");
        const Vec dir{std::cos(m.angle), std::sin(m.angle), 0.0};
        parts.push_back({dir * (-0.5 * t->separation), geom::Disc{m.radius}});
        parts.push_back({dir * (0.5 * t->separation), geom::Disc{m.radius}});
    } else {
        parts.push_back({Vec{}, std::get<PolylineShapeBuilder>(b).polyline});
    }
    return parts;
}

inline double parts_bounding_radius(const std::vector<PlacedShape>& parts) {
    double r = 0.0;
    for (const auto& p : parts) r = std::max(r, p.offset.norm() + geom::shape_bounding_radius(p.shape));
    return r;
}

inline int parts_dim(const std::vector<PlacedShape>& parts) {
    int n = 0;
    for (const auto& p : parts) n = std::max(n, geom::shape_dim(p.shape));
    return n;
}

// Marks that realize the extremes of each family, enough to bound radii and to
// check dimension consistency across the mark support.
inline std::vector<Mark> representative_marks(const MarkDistribution& q) {
    if (const auto* d = std::get_if<pointproc::DiracMark>(&q)) return {d->mark};
    if (const auto* f = std::get_if<pointproc::FixedRadiusMark>(&q)) {
        Mark m;
        m.radius = f->radius;
        return {m};
    }
    if (const auto* mix = std::get_if<pointproc::DiscreteMixtureMark>(&q)) {
        std::vector<Mark> out;
        for (const auto& [p, m] : mix->atoms) out.push_back(m);
        return out;
    }
    const auto& u = std::get<pointproc::SegmentUniformMark>(q);
    Mark a, b;
    a.length = std::max(u.len_lo, 1e-12);
    b.length = u.len_hi;
    return {a, b};
}

// ---------------------------------------------------------------------------
// Regularity envelopes: a superset of the grain carrying the uniform lower
// mass bound gamma * rho^n on balls centered in the grain.

struct RegularityEnvelope {
    Shape shape;
    double gamma = 1.0;
};

struct IdentityEnvelope {
    double gamma = 1.0;
};

// Segments shorter than min_length are extended homothetically about their
// midpoint; with min_length = 2 the mass bound holds with gamma = 1.
struct SegmentExtensionEnvelope {
    double min_length = 2.0;
    double gamma = 1.0;
};

using EnvelopeRule = std::variant<IdentityEnvelope, SegmentExtensionEnvelope>;

inline RegularityEnvelope envelope_for(const EnvelopeRule& rule, const ShapeBuilder& builder,
                                       const Mark& m) {
    const auto parts = build_parts(builder, m);
    if (const auto* ext = std::get_if<SegmentExtensionEnvelope>(&rule)) {
        if (parts.size() == 1) {
            if (const auto* seg = std::get_if<geom::Segment>(&parts[0].shape)) {
                geom::Segment e = *seg;
                e.length = std::max(e.length, ext->min_length);
                return {Shape{e}, ext->gamma};
            }
        }
        throw model_error("envelope: segment extension rule applies to plain segment grains only");
    }
    const double gamma = std::get<IdentityEnvelope>(rule).gamma;
    if (parts.size() != 1)
        throw model_error("envelope: identity rule needs a single-part grain");
    return {parts[0].shape, gamma};
}

// H^n(envelope ∩ B_rho(x)) by quadrature, x in the envelope's local frame.
inline double envelope_mass_in_ball(const RegularityEnvelope& env, const Vec& x, double rho,
                                    int steps = 4096) {
    double acc = 0.0;
    geom::for_each_quadrature_node(env.shape, steps, [&](const Vec& z, double w) {
        if (geom::distance(z, x) <= rho) acc += w;
    });
    return acc;
}

// ---------------------------------------------------------------------------
// The model: germ law + marking + shape building + optional position-dependent
// thinning that realizes intensities depending on both position and mark.

struct AffineModulation {
    int axis = 0;
    double base = 1.0;
    double slope = 0.0;  // probability = base + slope * x[axis], must stay in [0, 1]
};

using Modulation = std::variant<std::monostate, AffineModulation>;

inline double modulation_value(const Modulation& mod, const Vec& x, const Mark&) {
    if (std::holds_alternative<std::monostate>(mod)) return 1.0;
    const auto& a = std::get<AffineModulation>(mod);
    return a.base + a.slope * x[a.axis];
}

struct GermGrainModel {
    GermLaw law;
    Window window;
    MarkDistribution marks{pointproc::DiracMark{}};
    ShapeBuilder builder{SegmentShapeBuilder{}};
    EnvelopeRule envelope{IdentityEnvelope{}};
    Modulation modulation{};
    std::uint64_t fingerprint = 0;

    int grain_dim() const {
        int n = -1;
        for (const Mark& m : representative_marks(marks)) {
            const int k = parts_dim(build_parts(builder, m));
            if (n >= 0 && k != n) throw model_error("model: grain dimension differs across marks");
            n = k;
        }
        return n;
    }

    double max_bounding_radius() const {
        double r = 0.0;
        for (const Mark& m : representative_marks(marks))
            r = std::max(r, parts_bounding_radius(build_parts(builder, m)));
        if (!std::isfinite(r) || r <= 0.0) throw model_error("model: unbounded or empty shape family");
        return r;
    }

    // Intensity in both arguments: germ intensity times the thinning factor.
    double intensity(const Vec& x, const Mark& m) const {
        return pointproc::intensity_value(law, window, x) * modulation_value(modulation, x, m);
    }
};

struct Realization {
    std::vector<Grain> grains;
    std::uint64_t seed = 0;
    std::uint64_t fingerprint = 0;
};

// Germs for the stationary laws are sampled on the window dilated by the
// largest grain radius, so the union restricted to the window has the law of
// the whole-space model. Window-intrinsic laws (binomial, one-grain) put germs
// on the window itself; that is their definition, not an approximation.
inline void realize_into(const GermGrainModel& model, std::uint64_t seed, Realization& out) {
    out.grains.clear();
    out.seed = seed;
    out.fingerprint = model.fingerprint;

    const Window sampling_window = pointproc::law_is_window_intrinsic(model.law)
                                       ? model.window
                                       : model.window.dilated(model.max_bounding_radius());
    const auto germs = pointproc::sample_germs(model.law, sampling_window, rng::sub_seed(seed, 1));
    const auto marks = pointproc::attach_marks(germs, model.marks, rng::sub_seed(seed, 2));

    const bool thinned = !std::holds_alternative<std::monostate>(model.modulation);
    for (std::size_t i = 0; i < germs.size(); ++i) {
        if (thinned) {
            const double p = modulation_value(model.modulation, germs[i], marks[i]);
            if (p < 0.0 || p > 1.0)
                throw model_error("modulation: thinning probability must lie in [0, 1]");
            rng::Stream s(rng::sub_seed(seed, 3), i + 1);
            if (s.next_double() > p) continue;
        }
        for (const PlacedShape& part : build_parts(model.builder, marks[i]))
            out.grains.emplace_back(germs[i] + part.offset, part.shape);
    }
}

inline Realization realize(const GermGrainModel& model, std::uint64_t seed) {
    Realization r;
    realize_into(model, seed, r);
    return r;
}

// ---------------------------------------------------------------------------
// Coverage queries. The enlarged set is closed, so all tests use <=.

inline bool covers(const Realization& real, const Vec& x, double r) {
    if (r < 0.0) throw std::invalid_argument("covers: r must be >= 0");
    for (const Grain& g : real.grains) {
        if (!g.box_near(x, r)) continue;
        if (geom::distance_to_grain(x, g) <= r) return true;
    }
    return false;
}

inline std::int64_t covering_count(const Realization& real, const Vec& x, double r) {
    if (r < 0.0) throw std::invalid_argument("covering_count: r must be >= 0");
    std::int64_t n = 0;
    for (const Grain& g : real.grains) {
        if (!g.box_near(x, r)) continue;
        if (geom::distance_to_grain(x, g) <= r) ++n;
    }
    return n;
}

// Number of unordered pairs of distinct enlarged grains covering x:
// 0 for fewer than two covering grains, C(count, 2) otherwise.
inline std::int64_t pair_cover_count(const Realization& real, const Vec& x, double r) {
    const std::int64_t y = covering_count(real, x, r);
    return y * (y - 1) / 2;
}

// Smallest and second smallest grain distances from x; a pair of +inf when
// there are fewer grains than asked for. One scan serves every radius of a
// study, which is what couples the estimates across radii.
struct NearestDistances {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
};

inline NearestDistances nearest_distances(const Realization& real, const Vec& x) {
    NearestDistances nd;
    for (const Grain& g : real.grains) {
        const double d = geom::distance_to_grain(x, g);
        if (d < nd.d1) {
            nd.d2 = nd.d1;
            nd.d1 = d;
        } else if (d < nd.d2) {
            nd.d2 = d;
        }
    }
    return nd;
}

// ---------------------------------------------------------------------------
// Measure of the union inside a region.

// Exact length of a segment clipped to a box.
inline double segment_length_in_box(const Vec& a, const Vec& b, const Window& box) {
    double t0 = 0.0, t1 = 1.0;
    const Vec d = b - a;
    for (int i = 0; i < box.dim; ++i) {
        if (d[i] == 0.0) {
            if (a[i] < box.lo[i] || a[i] > box.hi[i]) return 0.0;
            continue;
        }
        double u = (box.lo[i] - a[i]) / d[i];
        double v = (box.hi[i] - a[i]) / d[i];
        if (u > v) std::swap(u, v);
        t0 = std::max(t0, u);
        t1 = std::min(t1, v);
        if (t0 > t1) return 0.0;
    }
    return (t1 - t0) * d.norm();
}

// Exact arc length of a circle inside a box: split the circle at every
// crossing with an edge line and keep the arcs whose midpoint lies inside.
inline double circle_length_in_box(const Vec& c, double R, const Window& box) {
    std::vector<double> cuts;
    const auto add_x = [&](double X) {
        const double u = (X - c.x) / R;
        if (u >= -1.0 && u <= 1.0) {
            const double t = std::acos(u);
            cuts.push_back(t);
            cuts.push_back(2.0 * geom::pi - t);
        }
    };
    const auto add_y = [&](double Y) {
        const double v = (Y - c.y) / R;
        if (v >= -1.0 && v <= 1.0) {
            const double t = std::asin(v);
            cuts.push_back(t < 0 ? t + 2.0 * geom::pi : t);
            const double s = geom::pi - t;
            cuts.push_back(s < 0 ? s + 2.0 * geom::pi : s);
        }
    };
    add_x(box.lo.x);
    add_x(box.hi.x);
    add_y(box.lo.y);
    add_y(box.hi.y);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const auto inside = [&](double t) {
        return box.contains(Vec{c.x + R * std::cos(t), c.y + R * std::sin(t), 0.0});
    };
    if (cuts.empty()) return inside(0.0) ? 2.0 * geom::pi * R : 0.0;

    double len = 0.0;
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        const double t0 = cuts[i];
        const double t1 = i + 1 < cuts.size() ? cuts[i + 1] : cuts[0] + 2.0 * geom::pi;
        if (inside(0.5 * (t0 + t1))) len += (t1 - t0) * R;
    }
    return len;
}

// Overlap of two coincident curve grains: collinear segments sharing an
// interval, or identical circles. Grains of the supported random models
// overlap with probability zero; a positive value here means the configuration
// forces it, and the caller reports it alongside the measure. Triple
// coincidences are outside the supported degenerate cases.
struct CurveOverlap {
    bool is_circle = false;
    Vec a, b;        // overlapping sub-segment
    Vec center;      // or coincident circle
    double radius = 0.0;
    bool empty = true;
};

inline CurveOverlap curve_overlap(const Grain& ga, const Grain& gb) {
    CurveOverlap out;
    const auto* sa = std::get_if<geom::Segment>(&ga.shape);
    const auto* sb = std::get_if<geom::Segment>(&gb.shape);
    if (sa && sb) {
        const Vec a0 = ga.germ + geom::segment_endpoint(*sa, 0);
        const Vec a1 = ga.germ + geom::segment_endpoint(*sa, 1);
        const Vec b0 = gb.germ + geom::segment_endpoint(*sb, 0);
        const Vec b1 = gb.germ + geom::segment_endpoint(*sb, 1);
        const Vec da = a1 - a0, db = b1 - b0;
        const double cross = da.x * db.y - da.y * db.x;
        const double scale = da.norm() * db.norm();
        if (std::abs(cross) > 1e-12 * scale) return out;  // not parallel
        const Vec gap = b0 - a0;
        if (std::abs(gap.x * da.y - gap.y * da.x) > 1e-12 * std::max(scale, da.dot(da))) return out;
        const double la = da.norm();
        const Vec u = da * (1.0 / la);
        double q0 = (b0 - a0).dot(u), q1 = (b1 - a0).dot(u);
        if (q0 > q1) std::swap(q0, q1);
        const double lo = std::max(0.0, q0), hi = std::min(la, q1);
        if (hi - lo <= 0.0) return out;
        out.empty = false;
        out.a = a0 + u * lo;
        out.b = a0 + u * hi;
        return out;
    }
    const auto* ca = std::get_if<geom::Circle>(&ga.shape);
    const auto* cb = std::get_if<geom::Circle>(&gb.shape);
    if (ca && cb && geom::distance(ga.germ, gb.germ) <= 1e-12 &&
        std::abs(ca->radius - cb->radius) <= 1e-12) {
        out.empty = false;
        out.is_circle = true;
        out.center = ga.germ;
        out.radius = ca->radius;
    }
    return out;
}

struct RegionMeasure {
    double value = 0.0;           // measure of the union inside the region
    double overlap_length = 0.0;  // detected coincident curve length (counted once in value)
    bool tolerance_warning = false;
};

// H^n of the union inside `region`: exact clipped lengths for curve grains,
// grid area at a tol-determined resolution for full-dimensional grains.
inline RegionMeasure measure_in_region(const Realization& real, const Window& region, double tol);

}  // namespace grainstat::germgrain

#include "grainstat/grid.hpp"

namespace grainstat::germgrain {

inline RegionMeasure measure_in_region(const Realization& real, const Window& region, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("measure_in_region: tol must be > 0");
    RegionMeasure out;
    if (real.grains.empty()) return out;

    int n = 0;
    for (const Grain& g : real.grains) n = std::max(n, geom::shape_dim(g.shape));

    if (n < region.dim) {
        for (const Grain& g : real.grains) {
            if (const auto* s = std::get_if<geom::Segment>(&g.shape)) {
                out.value += segment_length_in_box(g.germ + geom::segment_endpoint(*s, 0),
                                                   g.germ + geom::segment_endpoint(*s, 1), region);
            } else if (const auto* c = std::get_if<geom::Circle>(&g.shape)) {
                out.value += circle_length_in_box(g.germ, c->radius, region);
            } else if (const auto* p = std::get_if<geom::Polyline>(&g.shape)) {
                for (std::size_t i = 1; i < p->vertices.size(); ++i)
                    out.value += segment_length_in_box(g.germ + p->vertices[i - 1],
                                                       g.germ + p->vertices[i], region);
            } else {
                throw model_error("measure_in_region: unsupported lower dimensional grain");
            }
        }
        for (std::size_t i = 0; i < real.grains.size(); ++i)
            for (std::size_t j = i + 1; j < real.grains.size(); ++j) {
                const CurveOverlap ov = curve_overlap(real.grains[i], real.grains[j]);
                if (ov.empty) continue;
                out.overlap_length += ov.is_circle ? circle_length_in_box(ov.center, ov.radius, region)
                                                   : segment_length_in_box(ov.a, ov.b, region);
            }
        out.value -= out.overlap_length;  // count coincident stretches once
        return out;
    }

    const double max_extent = std::max(region.extent(0), region.extent(1));
    int resolution = static_cast<int>(std::ceil(max_extent / tol));
    if (resolution < 16) {
        resolution = 16;
        out.tolerance_warning = true;  // tol coarser than the minimum grid
    }
    const int cap = region.dim == 3 ? 512 : 8192;
    if (resolution > cap) {
        resolution = cap;
        out.tolerance_warning = true;  // tol finer than the grid can honor
    }
    out.value = geom::union_volume_grid(real.grains, region, resolution);
    return out;
}

}  // namespace grainstat::germgrain
