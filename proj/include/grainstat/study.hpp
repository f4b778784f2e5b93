#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "grainstat/config.hpp"
#include "grainstat/csv.hpp"
#include "grainstat/serialize.hpp"
#include "grainstat/surface.hpp"

namespace grainstat::cli {

struct AssertionRecord {
    std::string name;
    int point_index = -1;  // -1 when not tied to a query point
    std::optional<double> oracle;
    double estimate = 0.0;
    double stderr_value = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    bool informational = false;  // curve emitted without a closed-form oracle
};

struct StudyOutput {
    std::string study;
    std::vector<std::pair<std::string, std::string>> artifacts;  // filename -> bytes
    std::vector<AssertionRecord> assertions;
    json summary;
    bool passed = true;
};

namespace detail {

inline std::string point_artifact_name(const std::string& study, std::size_t i, std::size_t total) {
    if (total <= 1) return study + ".csv";
    return study + "_p" + std::to_string(i) + ".csv";
}

inline std::string curve_csv(const density::RatioCurve& curve) {
    std::vector<std::vector<double>> rows;
    for (const auto& e : curve.entries) rows.push_back({e.r, e.value, e.stderr_value});
    return format_csv({"r", "value", "stderr"}, rows);
}

inline void add_oracle_assertion(StudyOutput& out, const std::string& name, int point,
                                 double oracle, double estimate, double stderr_value,
                                 double tolerance) {
    AssertionRecord a;
    a.name = name;
    a.point_index = point;
    a.oracle = oracle;
    a.estimate = estimate;
    a.stderr_value = stderr_value;
    a.tolerance = tolerance;
    a.pass = std::abs(estimate - oracle) <= tolerance;
    out.assertions.push_back(a);
}

inline density::RatioCurve curve_from_rows(const germgrain::GermGrainModel& model,
                                           const std::vector<double>& radii,
                                           const std::vector<std::int64_t>& counts,
                                           std::size_t point, std::size_t n_points,
                                           std::int64_t n, bool normalize_by_ball) {
    const int d = model.window.dim;
    const int gd = model.grain_dim();
    density::RatioCurve curve;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double p = static_cast<double>(counts[point * radii.size() + k]) / n;
        const double norm = normalize_by_ball
                                ? geom::ball_volume(d - gd, 1.0) * std::pow(radii[k], d - gd)
                                : radii[k];
        curve.entries.push_back({radii[k], p / norm, density::binomial_stderr(p, n) / norm});
    }
    (void)n_points;
    curve.validate();
    return curve;
}

// Closed-form specific-area route for the model, when one exists.
inline std::optional<double> sigma_oracle(const germgrain::GermGrainModel& model,
                                          const geom::Vec& x, int steps) {
    const int d = model.window.dim;
    const int n = model.grain_dim();
    if (n < d) {
        if (n == d - 1) return 2.0 * density::theoretical_density(model, x, steps);
        return 0.0;  // grains too thin to carry surface mass
    }
    if (std::holds_alternative<pointproc::PoissonLaw>(model.law))
        return surface::boolean_specific_area_theoretical(model, x, steps);
    if (std::holds_alternative<pointproc::OneGrainLaw>(model.law))
        return surface::onegrain_specific_area_theoretical(model, x, steps);
    return std::nullopt;  // general multi-grain models: Monte Carlo curve only
}

inline std::optional<double> contact_derivative_oracle(const germgrain::GermGrainModel& model,
                                                       const geom::Vec& x, int steps) {
    const int d = model.window.dim;
    const int n = model.grain_dim();
    if (n < d) {
        if (n == d - 1) return 2.0 * density::theoretical_density(model, x, steps);
        return 0.0;
    }
    if (std::holds_alternative<pointproc::PoissonLaw>(model.law))
        return surface::sigma_bracket(model, x, steps);  // the void factor cancels
    if (std::holds_alternative<pointproc::OneGrainLaw>(model.law)) {
        const double cover = surface::mean_cover_count(model, x, steps);
        if (cover >= 1.0) return std::nullopt;
        return surface::sigma_bracket(model, x, steps) / (1.0 - cover);
    }
    return std::nullopt;
}

inline void run_density_like(const RunConfig& cfg, int workers, bool overlap, StudyOutput& out) {
    const auto counts = density::coverage_pass(cfg.model, cfg.points, cfg.radii,
                                               cfg.replications, cfg.seed, workers);
    for (std::size_t i = 0; i < cfg.points.size(); ++i) {
        const auto curve = curve_from_rows(cfg.model, cfg.radii, overlap ? counts.pair : counts.hit,
                                           i, cfg.points.size(), counts.n, true);
        out.artifacts.emplace_back(point_artifact_name(cfg.study, i, cfg.points.size()),
                                   curve_csv(curve));
        if (overlap) {
            AssertionRecord a;
            a.name = "overlap_decay";
            a.point_index = static_cast<int>(i);
            a.estimate = curve.entries.back().value;
            a.stderr_value = curve.entries.back().stderr_value;
            a.oracle = cfg.tol.decay_factor * curve.entries.front().value;
            a.tolerance = 0.0;
            a.pass = a.estimate <= *a.oracle;
            out.assertions.push_back(a);
        } else {
            const auto ex = density::extrapolate_to_zero(curve);
            const double oracle =
                density::theoretical_density(cfg.model, cfg.points[i], cfg.quadrature_steps);
            const double tol =
                std::max(cfg.tol.sigma * ex.stderr_value, cfg.tol.rel * std::abs(oracle));
            add_oracle_assertion(out, "ratio_vs_theory", static_cast<int>(i), oracle, ex.value,
                                 ex.stderr_value, tol);
        }
    }
}

inline void run_specific_area(const RunConfig& cfg, int workers, StudyOutput& out) {
    const auto counts = density::coverage_pass(cfg.model, cfg.points, cfg.radii,
                                               cfg.replications, cfg.seed, workers);
    for (std::size_t i = 0; i < cfg.points.size(); ++i) {
        const auto curve =
            curve_from_rows(cfg.model, cfg.radii, counts.annulus, i, cfg.points.size(), counts.n,
                            /*normalize_by_ball=*/false);
        out.artifacts.emplace_back(point_artifact_name(cfg.study, i, cfg.points.size()),
                                   curve_csv(curve));
        const auto ex = density::extrapolate_to_zero(curve);
        const auto oracle = sigma_oracle(cfg.model, cfg.points[i], cfg.quadrature_steps);
        if (!oracle) {
            AssertionRecord a;
            a.name = "sigma_no_closed_form";
            a.point_index = static_cast<int>(i);
            a.estimate = ex.value;
            a.stderr_value = ex.stderr_value;
            a.informational = true;
            out.assertions.push_back(a);
            continue;
        }
        const double tol =
            std::max(cfg.tol.sigma * ex.stderr_value, cfg.tol.rel * std::abs(*oracle));
        add_oracle_assertion(out, "sigma_vs_theory", static_cast<int>(i), *oracle, ex.value,
                             ex.stderr_value, tol);
    }
}

inline void run_contact(const RunConfig& cfg, int workers, StudyOutput& out) {
    for (std::size_t i = 0; i < cfg.points.size(); ++i) {
        const auto curve = surface::contact_distribution(cfg.model, cfg.points[i], cfg.radii,
                                                         cfg.replications, cfg.seed, workers);
        std::vector<std::vector<double>> rows;
        for (const auto& e : curve.entries) rows.push_back({e.r, e.h, e.stderr_value});
        out.artifacts.emplace_back(point_artifact_name(cfg.study, i, cfg.points.size()),
                                   format_csv({"r", "H", "stderr"}, rows));

        AssertionRecord mono;
        mono.name = "contact_monotone";
        mono.point_index = static_cast<int>(i);
        mono.pass = true;
        for (std::size_t k = 1; k < curve.entries.size(); ++k)
            if (curve.entries[k].h < curve.entries[k - 1].h) mono.pass = false;
        mono.estimate = curve.entries.back().h;
        out.assertions.push_back(mono);

        const double slope = surface::contact_derivative_at_zero(curve);
        double wsum = 0.0;
        for (const auto& e : curve.entries) {
            if (e.r <= 0.0) continue;
            const double s = std::max(e.stderr_value, 1e-12);
            wsum += e.r * e.r / (s * s);
        }
        const double slope_sigma = wsum > 0.0 ? 1.0 / std::sqrt(wsum) : 0.0;

        // cross-route consistency: slope vs sigma extrapolation / conditioning,
        // from the same replications
        const auto sa = surface::specific_area(cfg.model, cfg.points[i], cfg.radii,
                                               cfg.replications, cfg.seed, workers);
        const double cross = sa.extrapolated.value / curve.conditioning;
        const double cross_tol =
            std::max(cfg.tol.sigma * (slope_sigma + sa.extrapolated.stderr_value),
                     cfg.tol.rel * std::max(std::abs(cross), 1e-12));
        add_oracle_assertion(out, "derivative_vs_sigma_route", static_cast<int>(i), cross, slope,
                             slope_sigma, cross_tol);

        if (const auto oracle =
                contact_derivative_oracle(cfg.model, cfg.points[i], cfg.quadrature_steps)) {
            const double tol =
                std::max(cfg.tol.sigma * slope_sigma, cfg.tol.rel * std::abs(*oracle));
            add_oracle_assertion(out, "derivative_vs_theory", static_cast<int>(i), *oracle, slope,
                                 slope_sigma, tol);
        }
    }
}

inline void run_estimator(const RunConfig& cfg, int workers, StudyOutput& out) {
    const geom::Vec x = cfg.points.front();
    const auto rows = density::estimator_study(cfg.model, x, cfg.schedule, cfg.seed, workers,
                                               cfg.quadrature_steps);
    std::vector<std::vector<double>> csv_rows;
    for (const auto& r : rows)
        csv_rows.push_back({static_cast<double>(r.n), r.radius, r.estimate, r.abs_error});
    out.artifacts.emplace_back("estimator.csv",
                               format_csv({"N", "R", "estimate", "abs_error"}, csv_rows));

    const double truth = density::theoretical_density(cfg.model, x, cfg.quadrature_steps);
    AssertionRecord fin;
    fin.name = "final_error_within_rel";
    fin.point_index = 0;
    fin.oracle = truth;
    fin.estimate = rows.back().estimate;
    fin.tolerance = cfg.tol.estimator_rel * std::abs(truth);
    fin.pass = rows.back().abs_error <= fin.tolerance;
    out.assertions.push_back(fin);

    if (rows.size() > 1) {
        AssertionRecord trend;
        trend.name = "error_improves_with_n";
        trend.point_index = 0;
        trend.oracle = rows.front().abs_error;
        trend.estimate = rows.back().abs_error;
        trend.pass = rows.back().abs_error <= rows.front().abs_error;
        out.assertions.push_back(trend);
    }
}

inline void run_minkowski(const RunConfig& cfg, StudyOutput& out) {
    const auto marks = germgrain::representative_marks(cfg.model.marks);
    const auto parts = germgrain::build_parts(cfg.model.builder, marks.front());
    if (parts.size() != 1)
        throw config_error("minkowski: composite shapes belong to the outer-minkowski study");
    const geom::Shape& shape = parts.front().shape;
    const double measure = geom::hausdorff_measure(shape);
    const int d = geom::shape_ambient_dim(shape);
    const int n = geom::shape_dim(shape);

    bool exact_path = true;
    density::RatioCurve curve;
    for (double r : cfg.radii) {
        double value, err = 0.0;
        try {
            value = geom::minkowski_ratio(shape, r);
        } catch (const geom::fallback_required&) {
            exact_path = false;
            const geom::Grain g{geom::Vec{0.0, 0.0, 0.0}, shape};
            const double mx = r + 0.013 * (1.0 + geom::shape_bounding_radius(shape));
            const double my = r + 0.017 * (1.0 + geom::shape_bounding_radius(shape));
            const geom::Window win{geom::Vec{g.box_lo.x - mx, g.box_lo.y - my, 0.0},
                                   geom::Vec{g.box_hi.x + my, g.box_hi.y + mx, 0.0}, 2};
            const auto est = geom::enlarged_volume_grid({g}, r, win, cfg.resolution);
            const double norm = geom::ball_volume(d - n, 1.0) * std::pow(r, d - n);
            value = est.value / norm;
            err = est.error_bound / norm;
        }
        curve.entries.push_back({r, value, err});
    }
    curve.validate();
    out.artifacts.emplace_back("minkowski.csv", curve_csv(curve));

    const auto ex = density::extrapolate_to_zero(curve);
    const double tol = exact_path ? cfg.tol.exact_abs : 0.02 * measure;
    add_oracle_assertion(out, "ratio_vs_measure", -1, measure, ex.value, ex.stderr_value, tol);
}

inline void run_outer_minkowski(const RunConfig& cfg, StudyOutput& out) {
    const auto marks = germgrain::representative_marks(cfg.model.marks);
    auto parts = germgrain::build_parts(cfg.model.builder, marks.front());
    // generic anchor decouples straight edges from the grid
    const geom::Vec anchor{0.0131, 0.0173, 0.0};
    std::vector<geom::Grain> grains;
    double reach = 0.0;
    for (const auto& p : parts) {
        grains.emplace_back(anchor + p.offset, p.shape);
        reach = std::max(reach, p.offset.norm() + geom::shape_bounding_radius(p.shape));
    }
    const double rmax = cfg.radii.front();
    geom::Window win =
        cfg.region ? *cfg.region
                   : geom::Window{geom::Vec{anchor.x - reach - rmax - 0.11 * (1.0 + reach),
                                            anchor.y - reach - rmax - 0.13 * (1.0 + reach), 0.0},
                                  geom::Vec{anchor.x + reach + rmax + 0.12 * (1.0 + reach),
                                            anchor.y + reach + rmax + 0.10 * (1.0 + reach), 0.0},
                                  2};

    density::RatioCurve curve;
    for (double r : cfg.radii) {
        const auto est = geom::outer_minkowski_ratio(grains, r, win, cfg.resolution);
        curve.entries.push_back({r, est.value, est.error_bound});
    }
    curve.validate();
    out.artifacts.emplace_back("outer-minkowski.csv", curve_csv(curve));

    const double oracle = surface::boundary_decomposition(parts).outer_content();
    const auto ex = density::extrapolate_to_zero(curve);
    add_oracle_assertion(out, "outer_content_vs_decomposition", -1, oracle, ex.value,
                         ex.stderr_value, cfg.tol.outer_rel * std::abs(oracle));
}

}  // namespace detail

inline StudyOutput run_study(const RunConfig& cfg, int workers) {
    StudyOutput out;
    out.study = cfg.study;

    if (cfg.study == "density") {
        detail::run_density_like(cfg, workers, /*overlap=*/false, out);
    } else if (cfg.study == "overlap") {
        detail::run_density_like(cfg, workers, /*overlap=*/true, out);
    } else if (cfg.study == "specific-area") {
        detail::run_specific_area(cfg, workers, out);
    } else if (cfg.study == "contact") {
        detail::run_contact(cfg, workers, out);
    } else if (cfg.study == "estimator") {
        detail::run_estimator(cfg, workers, out);
    } else if (cfg.study == "minkowski") {
        detail::run_minkowski(cfg, out);
    } else {
        detail::run_outer_minkowski(cfg, out);
    }

    if (cfg.dump_realizations > 0) {
        std::string blob;
        for (int i = 0; i < cfg.dump_realizations; ++i) {
            const auto real =
                germgrain::realize(cfg.model, rng::sub_seed(cfg.seed, 0x7E00 + i));
            blob += realization_to_jsonl(real);
            blob += "---\n";
        }
        out.artifacts.emplace_back("realizations.jsonl", blob);
    }

    out.passed = true;
    for (const auto& a : out.assertions)
        if (!a.informational && !a.pass) out.passed = false;

    json summary;
    summary["study"] = cfg.study;
    char hashbuf[32];
    std::snprintf(hashbuf, sizeof hashbuf, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg.echo)));
    summary["config_hash"] = hashbuf;
    summary["seed"] = cfg.seed;
    summary["tolerances"] = {{"rel", cfg.tol.rel},
                             {"sigma", cfg.tol.sigma},
                             {"decay_factor", cfg.tol.decay_factor},
                             {"estimator_rel", cfg.tol.estimator_rel},
                             {"outer_rel", cfg.tol.outer_rel},
                             {"exact_abs", cfg.tol.exact_abs}};
    json asserts = json::array();
    for (const auto& a : out.assertions) {
        json ja;
        ja["name"] = a.name;
        if (a.point_index >= 0) {
            const auto& p = cfg.points[static_cast<std::size_t>(a.point_index)];
            ja["point"] = cfg.model.window.dim == 3 ? json::array({p.x, p.y, p.z})
                                                    : json::array({p.x, p.y});
        } else {
            ja["point"] = nullptr;
        }
        ja["oracle"] = a.oracle ? json(*a.oracle) : json(nullptr);
        ja["estimate"] = a.estimate;
        ja["stderr"] = a.stderr_value;
        ja["tolerance"] = a.tolerance;
        ja["informational"] = a.informational;
        ja["pass"] = a.pass;
        asserts.push_back(ja);
    }
    summary["assertions"] = asserts;
    summary["passed"] = out.passed;
    json names = json::array();
    for (const auto& [name, bytes] : out.artifacts) names.push_back(name);
    summary["artifacts"] = names;
    out.summary = summary;
    return out;
}

inline void write_study_output(const StudyOutput& out, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, bytes] : out.artifacts) {
        std::ofstream f(std::filesystem::path(out_dir) / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write artifact " + name + " under " + out_dir);
        f << bytes;
    }
    std::ofstream s(std::filesystem::path(out_dir) / "summary.json", std::ios::binary);
    if (!s) throw std::runtime_error("cannot write summary.json under " + out_dir);
    s << out.summary.dump(2) << '\n';
}

}  // namespace grainstat::cli
