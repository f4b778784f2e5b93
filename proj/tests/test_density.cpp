#include <gtest/gtest.h>

#include <cmath>

#include "grainstat/density.hpp"

using namespace grainstat;
using geom::Vec;
using geom::Window;
namespace gg = grainstat::germgrain;
namespace pp = grainstat::pointproc;
namespace dn = grainstat::density;

namespace {

constexpr double kPi = geom::pi;

gg::GermGrainModel segment_boolean(double lambda0, double length,
                                   const Window& win = Window{Vec{0, 0}, Vec{10, 10}}) {
    gg::GermGrainModel m;
    m.law = pp::PoissonLaw{pp::ConstantIntensity{lambda0}};
    m.window = win;
    pp::Mark mk;
    mk.length = length;
    mk.angle = 0.6;
    m.marks = pp::DiracMark{mk};
    m.builder = gg::SegmentShapeBuilder{};
    m.envelope = gg::SegmentExtensionEnvelope{};
    return m;
}

gg::GermGrainModel onegrain_circle(double radius = 1.0) {
    gg::GermGrainModel m;
    m.law = pp::OneGrainLaw{};
    m.window = Window{Vec{0, 0}, Vec{10, 10}};
    m.marks = pp::FixedRadiusMark{radius};
    m.builder = gg::CircleShapeBuilder{};
    return m;
}

TEST(Density, TheoreticalStationarySegments) {
    const auto model = segment_boolean(0.1, 2.0);
    EXPECT_NEAR(dn::theoretical_density(model, Vec{5, 5}), 0.2, 1e-9);
    EXPECT_NEAR(dn::theoretical_density(segment_boolean(0.0, 2.0), Vec{5, 5}), 0.0, 1e-15);
}

TEST(Density, TheoreticalUniformLengthSegments) {
    auto model = segment_boolean(0.1, 2.0);
    model.marks = pp::SegmentUniformMark{0.0, 2.0};  // mean length 1
    EXPECT_NEAR(dn::theoretical_density(model, Vec{5, 5}, 64), 0.1, 1e-9);
}

TEST(Density, TheoreticalOneGrainCircle) {
    const auto model = onegrain_circle();
    // circle of radius 1 fully inside the window
    EXPECT_NEAR(dn::theoretical_density(model, Vec{5, 5}, 2048), 2.0 * kPi / 100.0, 1e-9);
    // near the boundary only the arc with x >= 0 contributes:
    // center distance 0.5 from the edge, arc angle 2*(2pi/3)
    EXPECT_NEAR(dn::theoretical_density(model, Vec{0.5, 5}, 20000), (4.0 * kPi / 3.0) / 100.0, 1e-4);
}

TEST(Density, TheoreticalInhomogeneousAndModulated) {
    // affine intensity: for a symmetric grain the integral is lambda(x) * L
    auto model = segment_boolean(0.0, 2.0);
    pp::FieldIntensity f{[](const Vec& p) { return 0.02 + 0.018 * p.x; }, 0.25};
    model.law = pp::PoissonLaw{f};
    const Vec x{5, 5};
    EXPECT_NEAR(dn::theoretical_density(model, x, 512), (0.02 + 0.018 * 5.0) * 2.0, 1e-9);

    auto modulated = segment_boolean(0.1, 2.0);
    modulated.modulation = gg::AffineModulation{0, 0.05, 0.08};
    EXPECT_NEAR(dn::theoretical_density(modulated, x, 512), 0.1 * (0.05 + 0.08 * 5.0) * 2.0, 1e-9);
}

TEST(Density, HittingProbabilityBasics) {
    const auto empty = segment_boolean(0.0, 2.0);
    EXPECT_DOUBLE_EQ(dn::hitting_probability(empty, Vec{5, 5}, 0.1, 500, 1).value, 0.0);

    // a one-grain disc whose window is tiny around x: the grain always covers x
    gg::GermGrainModel sure;
    sure.law = pp::OneGrainLaw{};
    sure.window = Window{Vec{4.99, 4.99}, Vec{5.01, 5.01}};
    sure.marks = pp::FixedRadiusMark{1.0};
    sure.builder = gg::DiscShapeBuilder{};
    const auto est = dn::hitting_probability(sure, Vec{5, 5}, 0.1, 400, 2);
    EXPECT_DOUBLE_EQ(est.value, 1.0);
    EXPECT_DOUBLE_EQ(est.stderr_value, 0.0);
}

// Boolean void-probability route (capacity functional) against the coverage
// Monte Carlo: p = 1 - exp(-lambda * area(segment enlarged by r)).
TEST(Density, BooleanVoidProbabilityOracle) {
    const auto model = segment_boolean(0.1, 2.0);
    const double r = 0.1;
    const double oracle =
        1.0 - std::exp(-0.1 * geom::enlarged_volume_exact(geom::Segment{2.0, 0.0}, r));
    const auto est = dn::hitting_probability(model, Vec{5, 5}, r, 200000, 3);
    EXPECT_NEAR(est.value, oracle, 4.0 * est.stderr_value);
}

TEST(Density, RatioApproachesDensity) {
    const auto model = segment_boolean(0.1, 2.0);
    const auto est = dn::density_ratio(model, Vec{5, 5}, 0.02, 400000, 4);
    // at finite r the ratio carries an O(r) bias ~ lambda*pi*r/2
    EXPECT_NEAR(est.value, 0.2, 4.0 * est.stderr_value + 0.004);
    EXPECT_THROW(dn::density_ratio(model, Vec{5, 5}, 0.0, 100, 4), std::invalid_argument);
}

TEST(Density, OneGrainCircleRatioIsExactInR) {
    // the annulus probability equals 4*pi*r/|W| for every r with the circle
    // well inside the window, so the ratio is unbiased at finite r
    const auto model = onegrain_circle();
    const auto est = dn::density_ratio(model, Vec{5, 5}, 0.05, 400000, 5);
    EXPECT_NEAR(est.value, 2.0 * kPi / 100.0, 4.0 * est.stderr_value);
}

TEST(Density, ConvergenceStudyErrorShrinks) {
    const auto model = segment_boolean(0.1, 2.0);
    const auto curve = dn::convergence_study(model, Vec{5, 5}, {0.16, 0.08, 0.04}, 200000, 6);
    ASSERT_EQ(curve.entries.size(), 3u);
    const double truth = 0.2;
    // bias decreases toward the limit over the last three radii
    EXPECT_GT(std::abs(curve.entries[0].value - truth), std::abs(curve.entries[1].value - truth));
    EXPECT_GT(std::abs(curve.entries[1].value - truth), std::abs(curve.entries[2].value - truth));
}

TEST(Density, ConvergenceStudyExtrapolation) {
    const auto model = segment_boolean(0.1, 2.0);
    const auto curve = dn::convergence_study(model, Vec{5, 5}, {0.08, 0.04, 0.02}, 400000, 7);
    const auto ex = dn::extrapolate_to_zero(curve);
    const double tol = std::max(4.0 * ex.stderr_value, 0.05 * 0.2);
    EXPECT_NEAR(ex.value, 0.2, tol);
}

TEST(Density, ConvergenceStudyEdgeCases) {
    const auto model = segment_boolean(0.1, 2.0);
    const auto single = dn::convergence_study(model, Vec{5, 5}, {0.05}, 2000, 8);
    ASSERT_EQ(single.entries.size(), 1u);

    const auto empty = dn::convergence_study(segment_boolean(0.0, 2.0), Vec{5, 5},
                                             {0.08, 0.04}, 2000, 9);
    for (const auto& e : empty.entries) {
        EXPECT_DOUBLE_EQ(e.value, 0.0);
        EXPECT_DOUBLE_EQ(e.stderr_value, 0.0);
    }
    EXPECT_THROW(dn::convergence_study(model, Vec{5, 5}, {0.01, 0.02}, 100, 10),
                 std::invalid_argument);
}

TEST(Density, OverlapDecay) {
    // a single grain can never produce a covering pair
    const auto one = dn::overlap_decay(onegrain_circle(), Vec{5, 5}, {0.08, 0.04}, 5000, 11);
    for (const auto& e : one.entries) EXPECT_DOUBLE_EQ(e.value, 0.0);

    // Boolean segments: pair probability ~ r^2, normalized curve ~ r, so
    // halving r at least halves the curve
    const auto model = segment_boolean(0.1, 2.0);
    const auto curve = dn::overlap_decay(model, Vec{5, 5}, {0.3, 0.15}, 500000, 12);
    ASSERT_EQ(curve.entries.size(), 2u);
    EXPECT_GT(curve.entries[0].value, 0.0);
    EXPECT_GE(curve.entries[0].value, 2.0 * curve.entries[1].value);

    // binomial error shrinks like N^{-1/2}
    const auto coarse = dn::overlap_decay(model, Vec{5, 5}, {0.3}, 50000, 13);
    const auto fine = dn::overlap_decay(model, Vec{5, 5}, {0.3}, 200000, 13);
    EXPECT_NEAR(fine.entries[0].stderr_value, coarse.entries[0].stderr_value / 2.0,
                0.2 * coarse.entries[0].stderr_value);
}

TEST(Density, MaternRatioMatchesClusterDensity) {
    gg::GermGrainModel m;
    m.law = pp::MaternLaw{0.05, 2.0, 1.0};
    m.window = Window{Vec{0, 0}, Vec{10, 10}};
    pp::Mark mk;
    mk.length = 2.0;
    m.marks = pp::DiracMark{mk};
    m.builder = gg::SegmentShapeBuilder{};
    EXPECT_NEAR(dn::theoretical_density(m, Vec{5, 5}), 0.2, 1e-9);

    const auto curve = dn::convergence_study(m, Vec{5, 5}, {0.08, 0.04, 0.02}, 400000, 14);
    const auto ex = dn::extrapolate_to_zero(curve);
    EXPECT_NEAR(ex.value, 0.2, std::max(4.0 * ex.stderr_value, 0.05 * 0.2));
}

TEST(Density, LambdaHatAndCapacityIdentity) {
    const auto model = segment_boolean(0.1, 2.0);
    std::vector<gg::Realization> reals;
    for (int i = 0; i < 400; ++i) reals.push_back(gg::realize(model, rng::sub_seed(15, i)));

    const Vec x{5, 5};
    const double R = 0.3;
    const double lh = dn::lambda_hat(model, reals, x, R);
    const double cap = dn::empirical_capacity(reals, geom::Grain{x, geom::Disc{R}});
    EXPECT_DOUBLE_EQ(lh, cap / (geom::ball_volume(1, 1.0) * R));  // exact identity

    // all-hit and no-hit corners: a long segment grain pinned near x hits
    // B_R(x) in every realization, so the numerator is N
    gg::GermGrainModel sure;
    sure.law = pp::OneGrainLaw{};
    sure.window = Window{Vec{4.9, 4.9}, Vec{5.1, 5.1}};
    pp::Mark long_mark;
    long_mark.length = 4.0;
    long_mark.angle = 0.3;
    sure.marks = pp::DiracMark{long_mark};
    sure.builder = gg::SegmentShapeBuilder{};
    std::vector<gg::Realization> hits;
    for (int i = 0; i < 50; ++i) hits.push_back(gg::realize(sure, rng::sub_seed(16, i)));
    EXPECT_DOUBLE_EQ(dn::lambda_hat(sure, hits, x, 0.25), 1.0 / (2.0 * 0.25));
    EXPECT_DOUBLE_EQ(dn::lambda_hat(model, reals, Vec{500, 500}, 0.25), 0.0);
    EXPECT_THROW(dn::lambda_hat(model, {}, x, 0.25), std::invalid_argument);
}

TEST(Density, EmpiricalCapacityProbes) {
    const auto model = segment_boolean(0.1, 2.0);
    std::vector<gg::Realization> reals;
    for (int i = 0; i < 200; ++i) reals.push_back(gg::realize(model, rng::sub_seed(17, i)));

    // probe disjoint from the dilated window never gets hit
    EXPECT_DOUBLE_EQ(
        dn::empirical_capacity(reals, Window{Vec{100, 100}, Vec{101, 101}}), 0.0);

    // window probe on a model with at least one grain always hits
    gg::GermGrainModel bin;
    bin.law = pp::BinomialLaw{3};
    bin.window = Window{Vec{0, 0}, Vec{10, 10}};
    pp::Mark mk;
    mk.length = 1.0;
    bin.marks = pp::DiracMark{mk};
    bin.builder = gg::SegmentShapeBuilder{};
    std::vector<gg::Realization> breals;
    for (int i = 0; i < 100; ++i) breals.push_back(gg::realize(bin, rng::sub_seed(18, i)));
    EXPECT_DOUBLE_EQ(dn::empirical_capacity(breals, bin.window), 1.0);
}

TEST(Density, EstimatorScheduleValidation) {
    const auto model = segment_boolean(0.1, 2.0);
    dn::EstimatorSchedule bad;
    bad.c = 0.5;
    bad.tau = 1.0;  // equals 1/(d-n) for segments in the plane
    bad.n_values = {100, 1000};
    EXPECT_THROW(dn::validate_schedule(bad, 2, 1), std::invalid_argument);
    bad.tau = 0.0;
    EXPECT_THROW(dn::validate_schedule(bad, 2, 1), std::invalid_argument);
    bad.tau = 0.25;
    bad.n_values = {1000, 100};
    EXPECT_THROW(dn::validate_schedule(bad, 2, 1), std::invalid_argument);

    dn::EstimatorSchedule single;
    single.c = 0.5;
    single.tau = 0.25;
    single.n_values = {2000};
    const auto rows = dn::estimator_study(model, Vec{5, 5}, single, 19);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].n, 2000);
    EXPECT_NEAR(rows[0].radius, 0.5 * std::pow(2000.0, -0.25), 1e-12);
}

// Averages over a grid of points approximate the averaged density (weak-form
// agreement), exercised on a genuinely inhomogeneous model.
TEST(Density, WeakFormAgreement) {
    gg::GermGrainModel m;
    pp::FieldIntensity f{[](const Vec& p) { return 0.02 + 0.018 * p.x; }, 0.25};
    m.law = pp::PoissonLaw{f};
    m.window = Window{Vec{0, 0}, Vec{10, 10}};
    pp::Mark mk;
    mk.length = 2.0;
    mk.angle = 0.6;
    m.marks = pp::DiracMark{mk};
    m.builder = gg::SegmentShapeBuilder{};

    std::vector<Vec> points;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            points.push_back(Vec{3.0 + i, 3.0 + j});

    const std::vector<double> radii{0.02};
    const auto counts = dn::coverage_pass(m, points, radii, 100000, 20);
    double mc_avg = 0.0, th_avg = 0.0, var_sum = 0.0;
    for (std::size_t p = 0; p < points.size(); ++p) {
        const double prob = static_cast<double>(counts.hit[p]) / counts.n;
        mc_avg += prob / (2.0 * radii[0]);
        var_sum += prob * (1.0 - prob) / counts.n / (4.0 * radii[0] * radii[0]);
        th_avg += dn::theoretical_density(m, points[p], 256);
    }
    mc_avg /= points.size();
    th_avg /= points.size();
    // conservative error bar: treats the (positively correlated) points as if
    // their noise never cancels
    const double avg_err = std::sqrt(var_sum) / points.size() * 5.0;
    EXPECT_NEAR(mc_avg, th_avg, std::max(avg_err, 0.05 * th_avg));
}

// E of the measure over a region equals the integral of the density (mass
// consistency between two independent code paths).
TEST(Density, MassConsistency) {
    const auto model = segment_boolean(0.1, 2.0);
    const Window region{Vec{3, 3}, Vec{7, 7}};
    const double integral = geom::box_integral(
        region, 16, [&](const Vec& x) { return dn::theoretical_density(model, x, 128); });

    const int reps = 1500;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < reps; ++i) {
        const auto real = gg::realize(model, rng::sub_seed(21, i));
        const double v = gg::measure_in_region(real, region, 0.01).value;
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / reps;
    const double sd = std::sqrt(std::max(0.0, sum2 / reps - mean * mean) / reps);
    EXPECT_NEAR(mean, integral, 4.0 * sd);
}

TEST(Density, SphereGrainInThreeDimensions) {
    gg::GermGrainModel m;
    m.law = pp::OneGrainLaw{};
    m.window = Window{Vec{0, 0, 0}, Vec{10, 10, 10}, 3};
    m.marks = pp::FixedRadiusMark{1.0};
    m.builder = gg::SphereShapeBuilder{};
    EXPECT_EQ(m.grain_dim(), 2);
    const Vec x{5, 5, 5};
    EXPECT_NEAR(dn::theoretical_density(m, x, 256), 4.0 * kPi / 1000.0, 1e-6);

    const auto est = dn::density_ratio(m, x, 0.02, 500000, 22);
    EXPECT_NEAR(est.value, 4.0 * kPi / 1000.0, 4.0 * est.stderr_value);
}

TEST(Density, WorkerCountDoesNotChangeCounts) {
    const auto model = segment_boolean(0.1, 2.0);
    const auto c1 = dn::coverage_pass(model, {Vec{5, 5}}, {0.08, 0.02}, 20000, 23, 1);
    const auto c3 = dn::coverage_pass(model, {Vec{5, 5}}, {0.08, 0.02}, 20000, 23, 3);
    EXPECT_EQ(c1.hit, c3.hit);
    EXPECT_EQ(c1.pair, c3.pair);
    EXPECT_EQ(c1.annulus, c3.annulus);
    EXPECT_EQ(c1.vacant, c3.vacant);
}

}  // namespace
