#pragma once

#include <cmath>
#include <stdexcept>

#include "grainstat/geom.hpp"

namespace grainstat::geom {

// Composite-midpoint nodes over a shape in its local frame. Node placement is
// measure-preserving per cell (arclength for curves, equal-measure polar and
// spherical cells for full-dimensional shapes), so summing the weights alone
// reproduces hausdorff_measure exactly up to rounding. `steps` scales the node
// count per unit length; convergence is O(steps^-1) or better for Lipschitz
// integrands.
template <class Fn>
void for_each_quadrature_node(const Shape& shape, int steps, Fn&& fn) {
    if (steps <= 0) throw std::invalid_argument("quadrature: steps must be positive");
    const auto per_length = [steps](double len, int floor_nodes) {
        return std::max(floor_nodes, static_cast<int>(std::ceil(len * steps)));
    };

    if (const auto* g = std::get_if<Segment>(&shape)) {
        const Vec a = segment_endpoint(*g, 0);
        const Vec b = segment_endpoint(*g, 1);
        const int m = per_length(g->length, 1);
        const double w = g->length / m;
        for (int i = 0; i < m; ++i) fn(a + (b - a) * ((i + 0.5) / m), w);
        return;
    }
    if (const auto* g = std::get_if<Polyline>(&shape)) {
        for (std::size_t e = 1; e < g->vertices.size(); ++e) {
            const Vec a = g->vertices[e - 1];
            const Vec b = g->vertices[e];
            const double len = distance(a, b);
            if (len == 0.0) continue;
            const int m = per_length(len, 1);
            const double w = len / m;
            for (int i = 0; i < m; ++i) fn(a + (b - a) * ((i + 0.5) / m), w);
        }
        return;
    }
    if (const auto* g = std::get_if<Circle>(&shape)) {
        const double R = g->radius;
        const int m = per_length(2.0 * pi * R, 8);
        const double w = 2.0 * pi * R / m;
        for (int i = 0; i < m; ++i) {
            const double t = 2.0 * pi * (i + 0.5) / m;
            fn(Vec{R * std::cos(t), R * std::sin(t), 0.0}, w);
        }
        return;
    }
    if (const auto* g = std::get_if<Disc>(&shape)) {
        const double R = g->radius;
        const int mu = per_length(R, 4);        // cells in u = rho^2/2
        const int mt = per_length(2.0 * pi * R, 8);
        const double du = 0.5 * R * R / mu;
        const double w = du * (2.0 * pi / mt);
        for (int i = 0; i < mu; ++i) {
            const double rho = std::sqrt(2.0 * du * (i + 0.5));
            for (int j = 0; j < mt; ++j) {
                const double t = 2.0 * pi * (j + 0.5) / mt;
                fn(Vec{rho * std::cos(t), rho * std::sin(t), 0.0}, w);
            }
        }
        return;
    }
    if (const auto* g = std::get_if<Sphere>(&shape)) {
        const double R = g->radius;
        const int mv = per_length(2.0 * R, 4);  // cells in v = cos(polar angle)
        const int mt = per_length(2.0 * pi * R, 8);
        const double w = R * R * (2.0 / mv) * (2.0 * pi / mt);
        for (int i = 0; i < mv; ++i) {
            const double v = -1.0 + 2.0 * (i + 0.5) / mv;
            const double s = std::sqrt(std::max(0.0, 1.0 - v * v));
            for (int j = 0; j < mt; ++j) {
                const double t = 2.0 * pi * (j + 0.5) / mt;
                fn(Vec{R * s * std::cos(t), R * s * std::sin(t), R * v}, w);
            }
        }
        return;
    }
    const auto& g = std::get<Ball>(shape);
    const double R = g.radius;
    const int mu = per_length(R, 4);  // cells in u = rho^3/3
    const int mv = per_length(2.0 * R, 4);
    const int mt = per_length(2.0 * pi * R, 8);
    const double du = R * R * R / 3.0 / mu;
    const double w = du * (2.0 / mv) * (2.0 * pi / mt);
    for (int i = 0; i < mu; ++i) {
        const double rho = std::cbrt(3.0 * du * (i + 0.5));
        for (int k = 0; k < mv; ++k) {
            const double v = -1.0 + 2.0 * (k + 0.5) / mv;
            const double s = std::sqrt(std::max(0.0, 1.0 - v * v));
            for (int j = 0; j < mt; ++j) {
                const double t = 2.0 * pi * (j + 0.5) / mt;
                fn(Vec{rho * s * std::cos(t), rho * s * std::sin(t), rho * v}, w);
            }
        }
    }
}

// Integral of `weight` over the translated set x - Z with respect to the
// Hausdorff measure in the shape's dimension.
template <class Weight>
double translated_grain_integral(const Vec& x, const Shape& shape, Weight&& weight, int steps) {
    double acc = 0.0;
    for_each_quadrature_node(shape, steps, [&](const Vec& z, double w) { acc += weight(x - z) * w; });
    return acc;
}

// Tensor midpoint rule over a window, `steps` cells per axis.
template <class Fn>
double box_integral(const Window& win, int steps, Fn&& fn) {
    if (steps <= 0) throw std::invalid_argument("box_integral: steps must be positive");
    const int nz = win.dim == 3 ? steps : 1;
    double acc = 0.0;
    const double cell = win.volume() / (static_cast<double>(steps) * steps * nz);
    for (int i = 0; i < steps; ++i) {
        const double px = win.lo.x + win.extent(0) * (i + 0.5) / steps;
        for (int j = 0; j < steps; ++j) {
            const double py = win.lo.y + win.extent(1) * (j + 0.5) / steps;
            for (int k = 0; k < nz; ++k) {
                const double pz = win.dim == 3 ? win.lo.z + win.extent(2) * (k + 0.5) / nz : 0.0;
                acc += fn(Vec{px, py, pz}) * cell;
            }
        }
    }
    return acc;
}

}  // namespace grainstat::geom
