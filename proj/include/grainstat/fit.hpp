#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace grainstat::stats {

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double intercept_stderr = 0.0;  // from per-point errors, independence assumed
    double residual_rms = 0.0;
};

// Ordinary least squares y = a + b x. `sigmas` may be empty; when given it is
// only used to propagate an error bar onto the intercept.
inline LinearFit fit_linear(const std::vector<double>& xs, const std::vector<double>& ys,
                            const std::vector<double>& sigmas = {}) {
    const std::size_t n = xs.size();
    if (n < 2 || ys.size() != n) throw std::invalid_argument("fit_linear: need >= 2 matching points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) throw std::invalid_argument("fit_linear: degenerate abscissae");
    LinearFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sxx * sy - sx * sxy) / det;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (f.intercept + f.slope * xs[i]);
        ss += r * r;
        if (!sigmas.empty()) {
            // intercept = sum_i c_i y_i with c_i = (sxx - sx*x_i) / det
            const double c = (sxx - sx * xs[i]) / det;
            f.intercept_stderr += c * c * sigmas[i] * sigmas[i];
        }
    }
    f.intercept_stderr = std::sqrt(f.intercept_stderr);
    f.residual_rms = std::sqrt(ss / n);
    return f;
}

// Weighted least squares for a line through the origin; returns the slope.
inline double fit_slope_through_origin(const std::vector<double>& xs, const std::vector<double>& ys,
                                       const std::vector<double>& sigmas) {
    const std::size_t n = xs.size();
    if (n < 1 || ys.size() != n || sigmas.size() != n)
        throw std::invalid_argument("fit_slope_through_origin: need matching points");
    double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::max(sigmas[i], 1e-12);  // keeps exact points finite-weighted
        const double w = 1.0 / (s * s);
        num += w * xs[i] * ys[i];
        den += w * xs[i] * xs[i];
    }
    if (den == 0.0) throw std::invalid_argument("fit_slope_through_origin: degenerate abscissae");
    return num / den;
}

}  // namespace grainstat::stats
