#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <variant>
#include <vector>

#include "grainstat/common.hpp"

namespace grainstat::geom {

inline constexpr double pi = std::numbers::pi;

// Points carry three coordinates regardless of the ambient dimension; planar
// data keeps z = 0 so norms and distances are uniform across d = 2 and d = 3.
struct Vec {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec() = default;
    Vec(double x_, double y_, double z_ = 0.0) : x(x_), y(y_), z(z_) {}

    Vec operator+(const Vec& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec operator-(const Vec& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec operator*(double s) const { return {x * s, y * s, z * s}; }

    double dot(const Vec& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Vec& a, const Vec& b) { return (a - b).norm(); }

// Axis-aligned box with an explicit ambient dimension (2 or 3).
struct Window {
    Vec lo, hi;
    int dim = 2;

    Window() = default;
    Window(Vec lo_, Vec hi_, int dim_ = 2) : lo(lo_), hi(hi_), dim(dim_) {
        if (dim != 2 && dim != 3) throw config_error("window: dimension must be 2 or 3");
        for (int i = 0; i < dim; ++i)
            if (!(lo[i] < hi[i])) throw config_error("window: lo must be strictly below hi on every axis");
        if (dim == 2 && (lo.z != 0.0 || hi.z != 0.0))
            throw config_error("window: planar window must have z = 0");
    }

    double extent(int axis) const { return hi[axis] - lo[axis]; }

    double volume() const {
        double v = 1.0;
        for (int i = 0; i < dim; ++i) v *= extent(i);
        return v;
    }

    bool contains(const Vec& p) const {
        for (int i = 0; i < dim; ++i)
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        return true;
    }

    Window dilated(double r) const {
        Window w = *this;
        for (int i = 0; i < dim; ++i) {
            w.lo[i] -= r;
            w.hi[i] += r;
        }
        return w;
    }

    // Euclidean distance from p to the box (0 inside).
    double distance_to(const Vec& p) const {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double d = std::max({lo[i] - p[i], 0.0, p[i] - hi[i]});
            s += d * d;
        }
        return std::sqrt(s);
    }

    // Farthest distance from p to a point of the box.
    double max_distance_to(const Vec& p) const {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double d = std::max(std::abs(p[i] - lo[i]), std::abs(p[i] - hi[i]));
            s += d * d;
        }
        return std::sqrt(s);
    }
};

// Volume of the d-dimensional unit ball scaled to radius r, d <= 3.
inline double ball_volume(int d, double r) {
    if (r < 0.0) throw std::invalid_argument("ball_volume: radius must be >= 0");
    switch (d) {
        case 0: return 1.0;
        case 1: return 2.0 * r;
        case 2: return pi * r * r;
        case 3: return 4.0 / 3.0 * pi * r * r * r;
        default: throw std::invalid_argument("ball_volume: dimension must be in {0,1,2,3}");
    }
}

// ---------------------------------------------------------------------------
// Shapes, expressed in a local frame whose origin is the shape's center
// (segment midpoint, circle/disc/ball center, polyline bounding-box midpoint).

struct Segment {  // midpoint at origin
    double length = 1.0;
    double angle = 0.0;  // radians, in the xy-plane
};

struct Polyline {  // vertices re-centered so the bbox midpoint is the origin
    std::vector<Vec> vertices;
};

struct Circle {  // 1-dimensional ring in the plane
    double radius = 1.0;
};

struct Disc {  // full-dimensional in the plane
    double radius = 1.0;
};

struct Sphere {  // 2-dimensional boundary of a ball, d = 3
    double radius = 1.0;
};

struct Ball {  // full-dimensional, d = 3
    double radius = 1.0;
};

using Shape = std::variant<Segment, Polyline, Circle, Disc, Sphere, Ball>;

inline Polyline make_polyline(std::vector<Vec> vertices) {
    if (vertices.size() < 2) throw std::invalid_argument("polyline: needs at least 2 vertices");
    Vec lo = vertices.front(), hi = vertices.front();
    for (const Vec& v : vertices) {
        for (int i = 0; i < 3; ++i) {
            lo[i] = std::min(lo[i], v[i]);
            hi[i] = std::max(hi[i], v[i]);
        }
    }
    const Vec mid = (lo + hi) * 0.5;
    for (Vec& v : vertices) v = v - mid;
    return Polyline{std::move(vertices)};
}

// Hausdorff dimension of the shape's carrying set.
inline int shape_dim(const Shape& s) {
    struct V {
        int operator()(const Segment&) const { return 1; }
        int operator()(const Polyline&) const { return 1; }
        int operator()(const Circle&) const { return 1; }
        int operator()(const Disc&) const { return 2; }
        int operator()(const Sphere&) const { return 2; }
        int operator()(const Ball&) const { return 3; }
    };
    return std::visit(V{}, s);
}

// Ambient dimension the shape lives in.
inline int shape_ambient_dim(const Shape& s) {
    return std::holds_alternative<Sphere>(s) || std::holds_alternative<Ball>(s) ? 3 : 2;
}

inline double shape_bounding_radius(const Shape& s) {
    struct V {
        double operator()(const Segment& g) const { return 0.5 * g.length; }
        double operator()(const Polyline& g) const {
            double r = 0.0;
            for (const Vec& v : g.vertices) r = std::max(r, v.norm());
            return r;
        }
        double operator()(const Circle& g) const { return g.radius; }
        double operator()(const Disc& g) const { return g.radius; }
        double operator()(const Sphere& g) const { return g.radius; }
        double operator()(const Ball& g) const { return g.radius; }
    };
    return std::visit(V{}, s);
}

// Hausdorff measure of the shape in its own dimension.
inline double hausdorff_measure(const Shape& s) {
    struct V {
        double operator()(const Segment& g) const { return g.length; }
        double operator()(const Polyline& g) const {
            double len = 0.0;
            for (std::size_t i = 1; i < g.vertices.size(); ++i)
                len += distance(g.vertices[i - 1], g.vertices[i]);
            return len;
        }
        double operator()(const Circle& g) const { return 2.0 * pi * g.radius; }
        double operator()(const Disc& g) const { return pi * g.radius * g.radius; }
        double operator()(const Sphere& g) const { return 4.0 * pi * g.radius * g.radius; }
        double operator()(const Ball& g) const { return 4.0 / 3.0 * pi * g.radius * g.radius * g.radius; }
    };
    return std::visit(V{}, s);
}

inline Vec segment_endpoint(const Segment& g, int which) {
    const double h = 0.5 * g.length;
    const Vec dir{std::cos(g.angle), std::sin(g.angle), 0.0};
    return which == 0 ? dir * -h : dir * h;
}

inline double point_segment_distance(const Vec& p, const Vec& a, const Vec& b) {
    const Vec ab = b - a;
    const double len2 = ab.dot(ab);
    if (len2 == 0.0) return distance(p, a);
    double t = (p - a).dot(ab) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, a + ab * t);
}

// A shape placed at an absolute position, with a cached bounding box.
struct Grain {
    Vec germ;
    Shape shape;
    Vec box_lo, box_hi;

    Grain(Vec germ_, Shape shape_) : germ(germ_), shape(std::move(shape_)) { refresh_box(); }

    void refresh_box() {
        if (const auto* p = std::get_if<Polyline>(&shape)) {
            box_lo = box_hi = germ + p->vertices.front();
            for (const Vec& v : p->vertices) {
                const Vec w = germ + v;
                for (int i = 0; i < 3; ++i) {
                    box_lo[i] = std::min(box_lo[i], w[i]);
                    box_hi[i] = std::max(box_hi[i], w[i]);
                }
            }
            return;
        }
        if (const auto* sgm = std::get_if<Segment>(&shape)) {
            const Vec e0 = germ + segment_endpoint(*sgm, 0);
            const Vec e1 = germ + segment_endpoint(*sgm, 1);
            for (int i = 0; i < 3; ++i) {
                box_lo[i] = std::min(e0[i], e1[i]);
                box_hi[i] = std::max(e0[i], e1[i]);
            }
            return;
        }
        const double r = shape_bounding_radius(shape);
        const bool planar = shape_ambient_dim(shape) == 2;
        box_lo = {germ.x - r, germ.y - r, planar ? 0.0 : germ.z - r};
        box_hi = {germ.x + r, germ.y + r, planar ? 0.0 : germ.z + r};
    }

    // Does the box, dilated by r, contain p?
    bool box_near(const Vec& p, double r) const {
        return p.x >= box_lo.x - r && p.x <= box_hi.x + r && p.y >= box_lo.y - r &&
               p.y <= box_hi.y + r && p.z >= box_lo.z - r && p.z <= box_hi.z + r;
    }
};

// Euclidean distance from x to the placed shape; 0 exactly on (or inside) it.
inline double distance_to_grain(const Vec& x, const Grain& g) {
    struct V {
        const Vec& x;
        const Vec& c;
        double operator()(const Segment& s) const {
            return point_segment_distance(x, c + segment_endpoint(s, 0), c + segment_endpoint(s, 1));
        }
        double operator()(const Polyline& s) const {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 1; i < s.vertices.size(); ++i)
                best = std::min(best, point_segment_distance(x, c + s.vertices[i - 1], c + s.vertices[i]));
            return best;
        }
        double operator()(const Circle& s) const { return std::abs(distance(x, c) - s.radius); }
        double operator()(const Disc& s) const { return std::max(distance(x, c) - s.radius, 0.0); }
        double operator()(const Sphere& s) const { return std::abs(distance(x, c) - s.radius); }
        double operator()(const Ball& s) const { return std::max(distance(x, c) - s.radius, 0.0); }
    };
    return std::visit(V{x, g.germ}, g.shape);
}

// ---------------------------------------------------------------------------
// Closed-form enlargement volumes H^d(Z_{+r}).

// Thrown where no closed form exists and the caller should use the grid path.
class fallback_required : public std::runtime_error {
public:
    explicit fallback_required(const std::string& what) : std::runtime_error(what) {}
};

inline double enlarged_volume_exact(const Shape& s, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("enlarged_volume_exact: r must be > 0");
    struct V {
        double r;
        double operator()(const Segment& g) const { return 2.0 * r * g.length + pi * r * r; }
        double operator()(const Polyline&) const {
            throw fallback_required("enlarged_volume_exact: no closed form for polylines, use the grid oracle");
        }
        double operator()(const Circle& g) const {
            const double out = pi * (g.radius + r) * (g.radius + r);
            if (r >= g.radius) return out;
            return out - pi * (g.radius - r) * (g.radius - r);
        }
        double operator()(const Disc& g) const { return pi * (g.radius + r) * (g.radius + r); }
        double operator()(const Sphere& g) const {
            const double ro = g.radius + r;
            const double out = 4.0 / 3.0 * pi * ro * ro * ro;
            if (r >= g.radius) return out;
            const double ri = g.radius - r;
            return out - 4.0 / 3.0 * pi * ri * ri * ri;
        }
        double operator()(const Ball& g) const {
            const double ro = g.radius + r;
            return 4.0 / 3.0 * pi * ro * ro * ro;
        }
    };
    return std::visit(V{r}, s);
}

// H^d(Z_{+r}) / (b_{d-n} r^{d-n}); converges to the Hausdorff measure as r -> 0.
inline double minkowski_ratio(const Shape& s, double r) {
    if (!(r > 0.0 && r < 2.0)) throw std::invalid_argument("minkowski_ratio: r must be in (0, 2)");
    const int d = shape_ambient_dim(s);
    const int n = shape_dim(s);
    return enlarged_volume_exact(s, r) / (ball_volume(d - n, 1.0) * std::pow(r, d - n));
}

}  // namespace grainstat::geom
