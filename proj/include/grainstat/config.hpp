#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "grainstat/density.hpp"
#include "grainstat/germgrain.hpp"
#include "grainstat/surface.hpp"

namespace grainstat::cli {

using nlohmann::json;

struct Tolerances {
    double rel = 0.05;            // relative band around analytic oracles
    double sigma = 4.0;           // stderr multiplier
    double decay_factor = 0.25;   // overlap curve: smallest-r value vs largest-r value
    double estimator_rel = 0.10;  // final estimator error relative to the oracle
    double outer_rel = 0.03;      // outer-content extrapolation band
    double exact_abs = 1e-9;      // closed-form paths
};

struct RunConfig {
    germgrain::GermGrainModel model;
    std::string study;
    std::vector<geom::Vec> points;
    std::vector<double> radii;
    std::int64_t replications = 100000;
    std::uint64_t seed = 1;
    density::EstimatorSchedule schedule;
    bool has_schedule = false;
    int resolution = 2048;
    int quadrature_steps = 512;
    std::optional<geom::Window> region;
    int dump_realizations = 0;
    Tolerances tol;
    json echo;  // the parsed document, for hashing and export
};

inline const std::set<std::string>& study_names() {
    static const std::set<std::string> names = {"density",       "estimator", "overlap",
                                                "specific-area", "contact",   "minkowski",
                                                "outer-minkowski"};
    return names;
}

// ---------------------------------------------------------------------------
// Parsing. Structural problems throw config_error with the JSON path of the
// offending element; semantic model problems are collected by validate().

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw config_error(path + ": " + what);
}

inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) fail(path + "/" + key, "unknown key");
    }
}

inline const json& require(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) fail(path, std::string("missing required key '") + key + "'");
    return j.at(key);
}

inline double num(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

inline double num_or(const json& j, const std::string& path, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    return num(j.at(key), path + "/" + key);
}

inline std::int64_t integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<std::int64_t>();
}

inline std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

inline geom::Vec parse_point(const json& j, const std::string& path, int dim) {
    if (!j.is_array() || (j.size() != 2 && j.size() != 3)) fail(path, "expected [x, y] or [x, y, z]");
    if (dim > 0 && static_cast<int>(j.size()) != dim) fail(path, "point dimension mismatch");
    geom::Vec v{num(j.at(0), path + "/0"), num(j.at(1), path + "/1"),
                j.size() > 2 ? num(j.at(2), path + "/2") : 0.0};
    if (!v.finite()) fail(path, "coordinates must be finite");
    return v;
}

inline geom::Window parse_window(const json& j, const std::string& path) {
    check_keys(j, path, {"lo", "hi"});
    const json& lo = require(j, path, "lo");
    const json& hi = require(j, path, "hi");
    if (!lo.is_array() || !hi.is_array() || lo.size() != hi.size())
        fail(path, "lo and hi must be arrays of equal length");
    const int dim = static_cast<int>(lo.size());
    if (dim != 2 && dim != 3) fail(path, "dimension must be 2 or 3");
    try {
        return geom::Window{parse_point(lo, path + "/lo", dim), parse_point(hi, path + "/hi", dim), dim};
    } catch (const config_error& e) {
        fail(path, e.what());
    }
}

inline pointproc::GermLaw parse_germs(const json& j, const std::string& path) {
    const std::string law = text(require(j, path, "law"), path + "/law");
    if (law == "poisson") {
        check_keys(j, path, {"law", "intensity"});
        const json& in = require(j, path, "intensity");
        if (in.is_number()) {
            const double v = in.get<double>();
            if (v < 0.0) fail(path + "/intensity", "must be >= 0");
            return pointproc::PoissonLaw{pointproc::ConstantIntensity{v}};
        }
        const std::string ipath = path + "/intensity";
        check_keys(in, ipath, {"type", "axis", "base", "slope", "bound"});
        if (text(require(in, ipath, "type"), ipath + "/type") != "affine")
            fail(ipath + "/type", "only 'affine' fields are supported");
        const int axis = static_cast<int>(integer(require(in, ipath, "axis"), ipath + "/axis"));
        if (axis < 0 || axis > 2) fail(ipath + "/axis", "axis must be 0, 1 or 2");
        const double base = num(require(in, ipath, "base"), ipath + "/base");
        const double slope = num(require(in, ipath, "slope"), ipath + "/slope");
        const double bound = num(require(in, ipath, "bound"), ipath + "/bound");
        if (bound <= 0.0) fail(ipath + "/bound", "declared bound must be positive");
        return pointproc::PoissonLaw{pointproc::FieldIntensity{
            [axis, base, slope](const geom::Vec& x) { return base + slope * x[axis]; }, bound}};
    }
    if (law == "binomial") {
        check_keys(j, path, {"law", "m"});
        const std::int64_t m = integer(require(j, path, "m"), path + "/m");
        if (m <= 0) fail(path + "/m", "must be positive");
        return pointproc::BinomialLaw{static_cast<int>(m)};
    }
    if (law == "matern") {
        check_keys(j, path, {"law", "alpha", "mean_children", "cluster_radius"});
        pointproc::MaternLaw m;
        m.alpha = num(require(j, path, "alpha"), path + "/alpha");
        m.mean_children = num(require(j, path, "mean_children"), path + "/mean_children");
        m.cluster_radius = num(require(j, path, "cluster_radius"), path + "/cluster_radius");
        if (m.alpha <= 0 || m.mean_children <= 0 || m.cluster_radius <= 0)
            fail(path, "matern parameters must be positive");
        return m;
    }
    if (law == "one_grain") {
        check_keys(j, path, {"law"});
        return pointproc::OneGrainLaw{};
    }
    fail(path + "/law", "unknown germ law '" + law + "'");
}

inline pointproc::Mark parse_mark_fields(const json& j, const std::string& path) {
    pointproc::Mark m;
    m.length = num_or(j, path, "length", 0.0);
    m.angle = num_or(j, path, "angle", 0.0);
    m.radius = num_or(j, path, "radius", 0.0);
    return m;
}

inline pointproc::MarkDistribution parse_marks(const json& j, const std::string& path) {
    const std::string type = text(require(j, path, "type"), path + "/type");
    if (type == "dirac") {
        check_keys(j, path, {"type", "length", "angle", "radius"});
        return pointproc::DiracMark{parse_mark_fields(j, path)};
    }
    if (type == "uniform_segment") {
        check_keys(j, path, {"type", "length_lo", "length_hi"});
        pointproc::SegmentUniformMark u;
        u.len_lo = num(require(j, path, "length_lo"), path + "/length_lo");
        u.len_hi = num(require(j, path, "length_hi"), path + "/length_hi");
        return u;
    }
    if (type == "fixed_radius") {
        check_keys(j, path, {"type", "radius"});
        return pointproc::FixedRadiusMark{num(require(j, path, "radius"), path + "/radius")};
    }
    if (type == "discrete") {
        check_keys(j, path, {"type", "atoms"});
        const json& atoms = require(j, path, "atoms");
        if (!atoms.is_array() || atoms.empty()) fail(path + "/atoms", "expected a non-empty array");
        pointproc::DiscreteMixtureMark mix;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const std::string apath = path + "/atoms/" + std::to_string(i);
            check_keys(atoms.at(i), apath, {"weight", "length", "angle", "radius"});
            const double w = num(require(atoms.at(i), apath, "weight"), apath + "/weight");
            mix.atoms.emplace_back(w, parse_mark_fields(atoms.at(i), apath));
        }
        return mix;
    }
    fail(path + "/type", "unknown mark distribution '" + type + "'");
}

inline germgrain::ShapeBuilder parse_shape(const json& j, const std::string& path) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "segment") return germgrain::SegmentShapeBuilder{};
        if (s == "circle") return germgrain::CircleShapeBuilder{};
        if (s == "disc") return germgrain::DiscShapeBuilder{};
        if (s == "sphere") return germgrain::SphereShapeBuilder{};
        if (s == "ball") return germgrain::BallShapeBuilder{};
        if (s == "disc_whisker") return germgrain::DiscWhiskerShapeBuilder{};
        fail(path, "unknown shape '" + s + "'");
    }
    const std::string type = text(require(j, path, "type"), path + "/type");
    if (type == "twin_disc") {
        check_keys(j, path, {"type", "separation"});
        return germgrain::TwinDiscShapeBuilder{num(require(j, path, "separation"), path + "/separation")};
    }
    if (type == "polyline") {
        check_keys(j, path, {"type", "vertices"});
        const json& verts = require(j, path, "vertices");
        if (!verts.is_array() || verts.size() < 2) fail(path + "/vertices", "expected >= 2 points");
        std::vector<geom::Vec> vs;
        for (std::size_t i = 0; i < verts.size(); ++i)
            vs.push_back(parse_point(verts.at(i), path + "/vertices/" + std::to_string(i), 2));
        return germgrain::PolylineShapeBuilder{geom::make_polyline(std::move(vs))};
    }
    fail(path + "/type", "unknown shape type '" + type + "'");
}

inline germgrain::EnvelopeRule parse_envelope(const json& j, const std::string& path) {
    const std::string rule = text(require(j, path, "rule"), path + "/rule");
    if (rule == "identity") {
        check_keys(j, path, {"rule", "gamma"});
        return germgrain::IdentityEnvelope{num_or(j, path, "gamma", 1.0)};
    }
    if (rule == "extend_segment") {
        check_keys(j, path, {"rule", "min_length", "gamma"});
        germgrain::SegmentExtensionEnvelope e;
        e.min_length = num_or(j, path, "min_length", 2.0);
        e.gamma = num_or(j, path, "gamma", 1.0);
        return e;
    }
    fail(path + "/rule", "unknown envelope rule '" + rule + "'");
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

inline std::uint64_t config_hash(const json& echo) {
    // canonical form: nlohmann::json orders object keys lexicographically
    return detail::fnv1a(echo.dump());
}

inline RunConfig parse_config(const json& j) {
    using namespace detail;
    check_keys(j, "", {"model", "study", "points", "radii", "replications", "seed", "schedule",
                       "resolution", "quadrature_steps", "region", "tolerances",
                       "dump_realizations"});
    RunConfig cfg;
    cfg.echo = j;

    const json& mj = require(j, "", "model");
    check_keys(mj, "/model", {"window", "germs", "marks", "shape", "envelope", "modulation"});
    cfg.model.window = parse_window(require(mj, "/model", "window"), "/model/window");
    cfg.model.law = parse_germs(require(mj, "/model", "germs"), "/model/germs");
    cfg.model.marks = parse_marks(require(mj, "/model", "marks"), "/model/marks");
    cfg.model.builder = parse_shape(require(mj, "/model", "shape"), "/model/shape");
    if (mj.contains("envelope"))
        cfg.model.envelope = parse_envelope(mj.at("envelope"), "/model/envelope");
    if (mj.contains("modulation")) {
        const json& md = mj.at("modulation");
        check_keys(md, "/model/modulation", {"type", "axis", "base", "slope"});
        if (text(require(md, "/model/modulation", "type"), "/model/modulation/type") != "affine")
            fail("/model/modulation/type", "only 'affine' modulation is supported");
        germgrain::AffineModulation am;
        am.axis = static_cast<int>(integer(require(md, "/model/modulation", "axis"),
                                           "/model/modulation/axis"));
        if (am.axis < 0 || am.axis > 2) fail("/model/modulation/axis", "axis must be 0, 1 or 2");
        am.base = num(require(md, "/model/modulation", "base"), "/model/modulation/base");
        am.slope = num(require(md, "/model/modulation", "slope"), "/model/modulation/slope");
        cfg.model.modulation = am;
    }
    cfg.model.fingerprint = config_hash(j);

    cfg.study = text(require(j, "", "study"), "/study");
    if (!study_names().count(cfg.study)) fail("/study", "unknown study '" + cfg.study + "'");

    if (j.contains("points")) {
        const json& pts = j.at("points");
        if (!pts.is_array()) fail("/points", "expected an array of points");
        for (std::size_t i = 0; i < pts.size(); ++i)
            cfg.points.push_back(
                parse_point(pts.at(i), "/points/" + std::to_string(i), cfg.model.window.dim));
    }
    if (j.contains("radii")) {
        const json& rs = j.at("radii");
        if (!rs.is_array()) fail("/radii", "expected an array of radii");
        for (std::size_t i = 0; i < rs.size(); ++i)
            cfg.radii.push_back(num(rs.at(i), "/radii/" + std::to_string(i)));
    }
    if (j.contains("replications"))
        cfg.replications = integer(j.at("replications"), "/replications");
    if (j.contains("seed")) {
        const auto s = integer(j.at("seed"), "/seed");
        if (s < 0) fail("/seed", "must be >= 0");
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (j.contains("schedule")) {
        const json& sj = j.at("schedule");
        check_keys(sj, "/schedule", {"c", "tau", "n_values"});
        cfg.schedule.c = num(require(sj, "/schedule", "c"), "/schedule/c");
        cfg.schedule.tau = num(require(sj, "/schedule", "tau"), "/schedule/tau");
        const json& ns = require(sj, "/schedule", "n_values");
        if (!ns.is_array() || ns.empty()) fail("/schedule/n_values", "expected a non-empty array");
        for (std::size_t i = 0; i < ns.size(); ++i)
            cfg.schedule.n_values.push_back(
                integer(ns.at(i), "/schedule/n_values/" + std::to_string(i)));
        cfg.has_schedule = true;
    }
    if (j.contains("resolution"))
        cfg.resolution = static_cast<int>(integer(j.at("resolution"), "/resolution"));
    if (j.contains("quadrature_steps"))
        cfg.quadrature_steps = static_cast<int>(integer(j.at("quadrature_steps"), "/quadrature_steps"));
    if (j.contains("region")) cfg.region = parse_window(j.at("region"), "/region");
    if (j.contains("dump_realizations"))
        cfg.dump_realizations = static_cast<int>(integer(j.at("dump_realizations"), "/dump_realizations"));
    if (j.contains("tolerances")) {
        const json& tj = j.at("tolerances");
        check_keys(tj, "/tolerances",
                   {"rel", "sigma", "decay_factor", "estimator_rel", "outer_rel", "exact_abs"});
        cfg.tol.rel = num_or(tj, "/tolerances", "rel", cfg.tol.rel);
        cfg.tol.sigma = num_or(tj, "/tolerances", "sigma", cfg.tol.sigma);
        cfg.tol.decay_factor = num_or(tj, "/tolerances", "decay_factor", cfg.tol.decay_factor);
        cfg.tol.estimator_rel = num_or(tj, "/tolerances", "estimator_rel", cfg.tol.estimator_rel);
        cfg.tol.outer_rel = num_or(tj, "/tolerances", "outer_rel", cfg.tol.outer_rel);
        cfg.tol.exact_abs = num_or(tj, "/tolerances", "exact_abs", cfg.tol.exact_abs);
    }
    return cfg;
}

inline RunConfig parse_config_text(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Model-level validation: empty result means runnable. Each diagnostic names
// the assumption or constraint it violates.

inline std::vector<std::string> validate_config(const RunConfig& cfg) {
    std::vector<std::string> out;
    const auto& model = cfg.model;
    const int d = model.window.dim;

    // shape/window dimension compatibility
    int n = -1;
    try {
        n = model.grain_dim();
        for (const auto& mark : germgrain::representative_marks(model.marks))
            for (const auto& part : germgrain::build_parts(model.builder, mark))
                if (geom::shape_ambient_dim(part.shape) != d)
                    out.push_back("shape: grain lives in dimension " +
                                  std::to_string(geom::shape_ambient_dim(part.shape)) +
                                  " but the window is " + std::to_string(d) + "-dimensional");
    } catch (const std::exception& e) {
        out.push_back(std::string("shape: ") + e.what());
    }

    if (std::holds_alternative<pointproc::MaternLaw>(model.law) && d != 2)
        out.push_back("germs: the Matern cluster law is supported in the plane only");

    // (A1): lower dimensional models need an envelope carrying the uniform
    // mass bound gamma * rho^n on balls around every grain point
    if (n >= 0 && n < d) {
        const bool uniform_marks = std::holds_alternative<pointproc::SegmentUniformMark>(model.marks);
        const bool identity_env = std::holds_alternative<germgrain::IdentityEnvelope>(model.envelope);
        bool skip_spot_check = false;
        if (uniform_marks && identity_env) {
            const auto& u = std::get<pointproc::SegmentUniformMark>(model.marks);
            const double gamma = std::get<germgrain::IdentityEnvelope>(model.envelope).gamma;
            if (u.len_lo <= 0.0) {
                out.push_back(
                    "(A1) envelope: segment marks may be arbitrarily short with no extension "
                    "rule; declare envelope rule 'extend_segment' (short segments are extended "
                    "homothetically to length 2, giving gamma = 1)");
                skip_spot_check = true;
            } else if (gamma > std::min(u.len_lo, 1.0) + 1e-12) {
                out.push_back(
                    "(A1) envelope: declared gamma exceeds min(shortest segment length, 1)");
                skip_spot_check = true;
            }
        }
        if (!skip_spot_check) {
            try {
                for (const auto& mark : germgrain::representative_marks(model.marks)) {
                    const auto env = germgrain::envelope_for(model.envelope, model.builder, mark);
                    if (!(env.gamma > 0.0 && env.gamma <= 1.0)) {
                        out.push_back("(A1) envelope: gamma must lie in (0, 1]");
                        break;
                    }
                    const auto& grain_shape = germgrain::build_parts(model.builder, mark)[0].shape;
                    if (geom::hausdorff_measure(env.shape) + 1e-12 <
                        geom::hausdorff_measure(grain_shape)) {
                        out.push_back("(A1) envelope: envelope measure below the grain measure");
                        break;
                    }
                    // probe a few points on the grain itself
                    std::vector<geom::Vec> probes;
                    geom::for_each_quadrature_node(grain_shape, 1, [&](const geom::Vec& z, double) {
                        if (probes.size() < 4) probes.push_back(z);
                    });
                    bool failed = false;
                    for (const geom::Vec& x : probes) {
                        for (double rho : {0.25, 0.5, 0.9}) {
                            const double need = env.gamma * std::pow(rho, geom::shape_dim(env.shape));
                            const double mass = germgrain::envelope_mass_in_ball(env, x, rho, 2048);
                            if (mass < need * (1.0 - 0.02)) {
                                out.push_back("(A1) envelope: mass bound gamma*rho^n fails at rho=" +
                                              std::to_string(rho));
                                failed = true;
                                break;
                            }
                        }
                        if (failed) break;
                    }
                    if (failed) break;
                }
            } catch (const model_error& e) {
                out.push_back(std::string("(A1) envelope: ") + e.what());
            } catch (const std::exception&) {
                // dimension problems already reported above
            }
        }
    }

    // (A2): declared intensity bound must dominate the field on the window
    // dilated by the largest grain extent
    if (const auto* pois = std::get_if<pointproc::PoissonLaw>(&model.law)) {
        if (const auto* f = std::get_if<pointproc::FieldIntensity>(&pois->intensity)) {
            try {
                const geom::Window probe = model.window.dilated(2.0 * model.max_bounding_radius());
                const int steps = 32;
                for (int i = 0; i <= steps; ++i)
                    for (int j2 = 0; j2 <= steps; ++j2) {
                        const geom::Vec x{probe.lo.x + probe.extent(0) * i / steps,
                                          probe.lo.y + probe.extent(1) * j2 / steps, 0.0};
                        const double v = f->field(x);
                        if (v < 0.0) {
                            out.push_back("(A2) intensity: negative value on the sampling window");
                            goto a2done;
                        }
                        if (v > f->bound * (1.0 + 1e-12)) {
                            out.push_back(
                                "(A2) intensity: field exceeds its declared bound on the "
                                "dilated window; thinning would be biased");
                            goto a2done;
                        }
                    }
            } catch (const std::exception& e) {
                out.push_back(std::string("(A2) intensity: ") + e.what());
            }
        a2done:;
        }
    }

    // modulation must be a thinning probability wherever germs are sampled
    if (const auto* am = std::get_if<germgrain::AffineModulation>(&model.modulation)) {
        try {
            const geom::Window probe = pointproc::law_is_window_intrinsic(model.law)
                                           ? model.window
                                           : model.window.dilated(model.max_bounding_radius());
            for (const geom::Vec& corner :
                 {probe.lo, probe.hi, geom::Vec{probe.lo.x, probe.hi.y, 0.0},
                  geom::Vec{probe.hi.x, probe.lo.y, 0.0}}) {
                const double v = am->base + am->slope * corner[am->axis];
                if (v < -1e-12 || v > 1.0 + 1e-12) {
                    out.push_back("modulation: thinning probability leaves [0, 1] on the "
                                  "sampling window");
                    break;
                }
            }
        } catch (const std::exception&) {
        }
    }

    // study prerequisites
    const bool needs_points = cfg.study == "density" || cfg.study == "estimator" ||
                              cfg.study == "overlap" || cfg.study == "specific-area" ||
                              cfg.study == "contact";
    if (needs_points && cfg.points.empty())
        out.push_back("points: study '" + cfg.study + "' needs at least one query point");
    const bool needs_radii = cfg.study != "estimator";
    if (needs_radii && cfg.radii.empty())
        out.push_back("radii: study '" + cfg.study + "' needs a radius ladder");
    if (!cfg.radii.empty()) {
        try {
            density::validate_radii(cfg.radii);
        } catch (const std::exception& e) {
            out.push_back(std::string("radii: ") + e.what());
        }
    }
    if (cfg.study == "estimator") {
        if (!cfg.has_schedule) {
            out.push_back("schedule: the estimator study needs {c, tau, n_values}");
        } else if (n > 0) {
            try {
                density::validate_schedule(cfg.schedule, d, n);
            } catch (const std::exception& e) {
                out.push_back(std::string("schedule: ") + e.what());
            }
        }
    }
    if (cfg.study == "minkowski" || cfg.study == "outer-minkowski") {
        const bool deterministic = std::holds_alternative<pointproc::DiracMark>(model.marks) ||
                                   std::holds_alternative<pointproc::FixedRadiusMark>(model.marks);
        if (!deterministic)
            out.push_back(cfg.study + ": needs a deterministic (dirac or fixed_radius) mark");
        if (cfg.study == "minkowski" && n >= 0 && n >= d)
            out.push_back("minkowski: the normalized-enlargement study covers lower "
                          "dimensional shapes; full-dimensional sets belong to outer-minkowski");
        if (cfg.study == "outer-minkowski" && n >= 0 && d != 2)
            out.push_back("outer-minkowski: the grid path is planar");
    }
    if (cfg.replications <= 0) out.push_back("replications: must be positive");
    if (cfg.resolution < 16) out.push_back("resolution: must be >= 16");
    if (cfg.quadrature_steps <= 0) out.push_back("quadrature_steps: must be positive");
    return out;
}

}  // namespace grainstat::cli
