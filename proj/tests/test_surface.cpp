#include <gtest/gtest.h>

#include <cmath>

#include "grainstat/surface.hpp"

using namespace grainstat;
using geom::Vec;
using geom::Window;
namespace gg = grainstat::germgrain;
namespace pp = grainstat::pointproc;
namespace sf = grainstat::surface;

namespace {

constexpr double kPi = geom::pi;

pp::Mark disc_mark(double R) {
    pp::Mark m;
    m.radius = R;
    return m;
}

pp::Mark whisker_mark(double R, double len, double angle = 0.37) {
    pp::Mark m;
    m.radius = R;
    m.length = len;
    m.angle = angle;
    return m;
}

gg::GermGrainModel onegrain(const gg::ShapeBuilder& builder, const pp::Mark& mark,
                            const Window& win = Window{Vec{0, 0}, Vec{10, 10}}) {
    gg::GermGrainModel m;
    m.law = pp::OneGrainLaw{};
    m.window = win;
    m.marks = pp::DiracMark{mark};
    m.builder = builder;
    return m;
}

gg::GermGrainModel disc_boolean(double lambda, double R,
                                const Window& win = Window{Vec{0, 0}, Vec{10, 10}}) {
    gg::GermGrainModel m;
    m.law = pp::PoissonLaw{pp::ConstantIntensity{lambda}};
    m.window = win;
    m.marks = pp::DiracMark{disc_mark(R)};
    m.builder = gg::DiscShapeBuilder{};
    return m;
}

TEST(Surface, DecompositionCatalog) {
    const auto disc = sf::boundary_decomposition(gg::DiscShapeBuilder{}, disc_mark(1.0));
    EXPECT_NEAR(disc.essential, 2.0 * kPi, 1e-9);
    EXPECT_DOUBLE_EQ(disc.whisker, 0.0);
    EXPECT_DOUBLE_EQ(disc.interiorised, 0.0);

    pp::Mark seg;
    seg.length = 1.0;
    seg.angle = 0.4;
    const auto bare = sf::boundary_decomposition(gg::SegmentShapeBuilder{}, seg);
    EXPECT_DOUBLE_EQ(bare.essential, 0.0);
    EXPECT_NEAR(bare.whisker, 1.0, 1e-9);
    EXPECT_NEAR(bare.outer_content(), 2.0, 1e-9);  // lower dimensional: twice the length

    const auto ring = sf::boundary_decomposition(gg::CircleShapeBuilder{}, disc_mark(0.8));
    EXPECT_DOUBLE_EQ(ring.essential, 0.0);
    EXPECT_NEAR(ring.whisker, 2.0 * kPi * 0.8, 1e-9);

    const auto dw = sf::boundary_decomposition(gg::DiscWhiskerShapeBuilder{}, whisker_mark(1.0, 0.5));
    EXPECT_NEAR(dw.essential, 2.0 * kPi, 1e-9);
    EXPECT_NEAR(dw.whisker, 0.5, 1e-9);
    EXPECT_NEAR(dw.outer_content(), 2.0 * kPi + 1.0, 1e-9);
}

TEST(Surface, DecompositionTwinDiscs) {
    const double R = 1.0, sep = 1.0;
    const auto twin =
        sf::boundary_decomposition(gg::TwinDiscShapeBuilder{sep}, whisker_mark(R, 0.0, 0.37));
    // each circle loses the arc inside the other: half-angle acos(sep/(2R))
    const double alpha = std::acos(sep / (2.0 * R));
    const double expected = 2.0 * (2.0 * kPi - 2.0 * alpha) * R;
    EXPECT_NEAR(twin.essential, expected, 1e-9);
    EXPECT_DOUBLE_EQ(twin.whisker, 0.0);
    EXPECT_NEAR(twin.boundary_measure(), expected, 1e-9);

    // brute force: fraction of circle-1 points outside the open twin disc
    const Vec c1{-0.5 * sep * std::cos(0.37), -0.5 * sep * std::sin(0.37), 0.0};
    const Vec c2{0.5 * sep * std::cos(0.37), 0.5 * sep * std::sin(0.37), 0.0};
    int outside = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        const double t = 2.0 * kPi * (i + 0.5) / n;
        const Vec p{c1.x + R * std::cos(t), c1.y + R * std::sin(t), 0.0};
        if (geom::distance(p, c2) >= R) ++outside;
    }
    const double brute = 2.0 * (2.0 * kPi * R) * outside / n;  // both circles by symmetry
    EXPECT_NEAR(twin.essential, brute, 1e-3);
}

TEST(Surface, DecompositionIdentity) {
    // essential + whisker + interiorised adds up to the full boundary measure
    const std::vector<std::pair<gg::ShapeBuilder, pp::Mark>> catalog = {
        {gg::DiscShapeBuilder{}, disc_mark(1.0)},
        {gg::DiscWhiskerShapeBuilder{}, whisker_mark(1.0, 0.5)},
        {gg::TwinDiscShapeBuilder{0.8}, disc_mark(0.7)},
        {gg::CircleShapeBuilder{}, disc_mark(1.2)},
    };
    for (const auto& [b, m] : catalog) {
        const auto d = sf::boundary_decomposition(b, m);
        EXPECT_DOUBLE_EQ(d.boundary_measure(), d.essential + d.whisker + d.interiorised);
        EXPECT_GE(d.essential, 0.0);
        EXPECT_GE(d.whisker, 0.0);
        EXPECT_DOUBLE_EQ(d.interiorised, 0.0);
    }
}

TEST(Surface, DecompositionRejectsUnsupportedParts) {
    std::vector<gg::PlacedShape> parts;
    parts.push_back({Vec{}, geom::Ball{1.0}});
    parts.push_back({Vec{1, 0, 0}, geom::Ball{1.0}});
    EXPECT_THROW(sf::boundary_decomposition(parts), model_error);

    std::vector<gg::PlacedShape> sphere_in_plane;
    sphere_in_plane.push_back({Vec{}, geom::Sphere{1.0}});
    EXPECT_THROW(sf::boundary_decomposition(sphere_in_plane), model_error);
}

TEST(Surface, BallDecomposition) {
    std::vector<gg::PlacedShape> parts;
    parts.push_back({Vec{}, geom::Ball{1.0}});
    const auto d = sf::boundary_decomposition(parts, 256);
    EXPECT_NEAR(d.essential, 4.0 * kPi, 1e-9);
    EXPECT_DOUBLE_EQ(d.whisker, 0.0);
}

TEST(Surface, VoidProbabilityBoolean) {
    const auto model = disc_boolean(0.05, 1.0);
    EXPECT_NEAR(sf::void_probability_boolean(model, Vec{5, 5}, 512),
                std::exp(-0.05 * kPi), 1e-9);
    EXPECT_THROW(sf::void_probability_boolean(onegrain(gg::DiscShapeBuilder{}, disc_mark(1.0)),
                                              Vec{5, 5}),
                 model_error);
}

TEST(Surface, TheoreticalSpecificAreaBooleanDiscs) {
    const auto model = disc_boolean(0.05, 1.0);
    const double sigma = sf::boolean_specific_area_theoretical(model, Vec{5, 5}, 1024);
    EXPECT_NEAR(sigma, std::exp(-0.05 * kPi) * 0.05 * 2.0 * kPi, 1e-8);

    // vanishing intensity: sigma / lambda tends to the perimeter
    const auto thin = disc_boolean(1e-6, 1.0);
    EXPECT_NEAR(sf::boolean_specific_area_theoretical(thin, Vec{5, 5}, 1024) / 1e-6,
                2.0 * kPi, 1e-4);

    gg::GermGrainModel notpois = model;
    notpois.law = pp::BinomialLaw{3};
    EXPECT_THROW(sf::boolean_specific_area_theoretical(notpois, Vec{5, 5}), model_error);
}

TEST(Surface, TheoreticalSpecificAreaWhisker) {
    // whisker boundary carries weight 2 in the bracket
    const auto model = disc_boolean(0.05, 1.0);
    auto dw = model;
    dw.marks = pp::DiracMark{whisker_mark(1.0, 0.5)};
    dw.builder = gg::DiscWhiskerShapeBuilder{};
    EXPECT_NEAR(sf::sigma_bracket(dw, Vec{5, 5}, 1024), 0.05 * (2.0 * kPi + 2.0 * 0.5), 1e-8);
}

TEST(Surface, TheoreticalSpecificAreaOneGrain) {
    const auto model = onegrain(gg::DiscShapeBuilder{}, disc_mark(1.0));
    EXPECT_NEAR(sf::onegrain_specific_area_theoretical(model, Vec{5, 5}, 1024),
                2.0 * kPi / 100.0, 1e-9);
    EXPECT_THROW(sf::onegrain_specific_area_theoretical(disc_boolean(0.05, 1.0), Vec{5, 5}),
                 model_error);

    // the Boolean product formula applied to the same intensity differs from
    // the one-grain value by exactly the void probability
    gg::GermGrainModel pois;
    const Window w{Vec{0, 0}, Vec{10, 10}};
    pp::FieldIntensity f{[w](const Vec& p) { return w.contains(p) ? 0.01 : 0.0; }, 0.01};
    pois.law = pp::PoissonLaw{f};
    pois.window = w;
    pois.marks = pp::DiracMark{disc_mark(1.0)};
    pois.builder = gg::DiscShapeBuilder{};
    const double sigma_bool = sf::boolean_specific_area_theoretical(pois, Vec{5, 5}, 1024);
    const double sigma_one =
        sf::onegrain_specific_area_theoretical(onegrain(gg::DiscShapeBuilder{}, disc_mark(1.0)), Vec{5, 5}, 1024);
    const double void_p = sf::void_probability_boolean(pois, Vec{5, 5}, 1024);
    EXPECT_NEAR(sigma_bool, void_p * sigma_one, 1e-12);

    // whisker contributes with factor 2 on the one-grain route as well
    const auto dw = onegrain(gg::DiscWhiskerShapeBuilder{}, whisker_mark(1.0, 0.5));
    EXPECT_NEAR(sf::onegrain_specific_area_theoretical(dw, Vec{5, 5}, 1024),
                (2.0 * kPi + 1.0) / 100.0, 1e-9);
}

// The pathological gap: sigma exceeds the mean boundary density by exactly the
// whisker density; without a whisker the two routes coincide.
TEST(Surface, SigmaVersusBoundaryDensity) {
    const Vec x{5, 5};
    const auto plain = onegrain(gg::DiscShapeBuilder{}, disc_mark(1.0));
    EXPECT_NEAR(sf::onegrain_specific_area_theoretical(plain, x, 1024),
                sf::onegrain_boundary_density(plain, x, 1024), 1e-12);

    const auto dw = onegrain(gg::DiscWhiskerShapeBuilder{}, whisker_mark(1.0, 0.5));
    const double sigma = sf::onegrain_specific_area_theoretical(dw, x, 1024);
    const double bdry = sf::onegrain_boundary_density(dw, x, 1024);
    EXPECT_NEAR(sigma - bdry, 0.5 / 100.0, 1e-9);  // the whisker density
}

TEST(Surface, AnnulusProbability) {
    // x deterministically inside the set
    gg::GermGrainModel sure;
    sure.law = pp::OneGrainLaw{};
    sure.window = Window{Vec{4.9, 4.9}, Vec{5.1, 5.1}};
    sure.marks = pp::DiracMark{disc_mark(1.0)};
    sure.builder = gg::DiscShapeBuilder{};
    EXPECT_DOUBLE_EQ(sf::annulus_probability(sure, Vec{5, 5}, 0.1, 300, 1).value, 0.0);

    gg::GermGrainModel empty = disc_boolean(0.0, 1.0);
    EXPECT_DOUBLE_EQ(sf::annulus_probability(empty, Vec{5, 5}, 0.1, 300, 2).value, 0.0);

    const auto model = disc_boolean(0.05, 1.0);
    const double r = 0.05;
    const double oracle =
        std::exp(-0.05 * kPi) - std::exp(-0.05 * kPi * (1.0 + r) * (1.0 + r));
    const auto est = sf::annulus_probability(model, Vec{5, 5}, r, 200000, 3);
    EXPECT_NEAR(est.value, oracle, 4.0 * est.stderr_value);
}

TEST(Surface, SpecificAreaOneGrainDisc) {
    const auto model = onegrain(gg::DiscShapeBuilder{}, disc_mark(1.0));
    const auto res = sf::specific_area(model, Vec{5, 5}, {0.08, 0.04, 0.02}, 400000, 4);
    const double truth = 2.0 * kPi / 100.0;
    EXPECT_NEAR(res.extrapolated.value, truth,
                std::max(4.0 * res.extrapolated.stderr_value, 0.05 * truth));
}

TEST(Surface, SpecificAreaBooleanDiscs) {
    const auto model = disc_boolean(0.05, 1.0);
    const auto res = sf::specific_area(model, Vec{5, 5}, {0.08, 0.04, 0.02}, 400000, 5);
    const double truth = sf::boolean_specific_area_theoretical(model, Vec{5, 5}, 1024);
    EXPECT_NEAR(res.extrapolated.value, truth,
                std::max(4.0 * res.extrapolated.stderr_value, 0.05 * truth));
}

// d-1 dimensional grains: the specific area doubles the mean density.
TEST(Surface, SpecificAreaCircleGrainDoublesDensity) {
    const auto model = onegrain(gg::CircleShapeBuilder{}, disc_mark(1.0));
    const auto res = sf::specific_area(model, Vec{5, 5}, {0.08, 0.04, 0.02}, 400000, 6);
    const double lambda = density::theoretical_density(model, Vec{5, 5}, 1024);
    EXPECT_NEAR(res.extrapolated.value, 2.0 * lambda,
                std::max(4.0 * res.extrapolated.stderr_value, 0.05 * 2.0 * lambda));
}

TEST(Surface, ContactDistributionOneGrainDisc) {
    const auto model = onegrain(gg::DiscShapeBuilder{}, disc_mark(1.0));
    const Vec x{5, 5};
    const auto curve = sf::contact_distribution(model, x, {0.1, 0.25, 0.5, 1.0, 7.0}, 200000, 7);

    ASSERT_FALSE(curve.entries.empty());
    EXPECT_DOUBLE_EQ(curve.entries.front().r, 0.0);
    EXPECT_DOUBLE_EQ(curve.entries.front().h, 0.0);
    for (std::size_t i = 1; i < curve.entries.size(); ++i)
        EXPECT_GE(curve.entries[i].h, curve.entries[i - 1].h);  // monotone coupling
    EXPECT_DOUBLE_EQ(curve.entries.back().h, 1.0);  // r large enough to cover from anywhere

    // full-containment oracle at r = 0.5
    const double expected = (kPi * 1.5 * 1.5 - kPi) / (100.0 - kPi);
    const auto& e = curve.entries[3];
    ASSERT_DOUBLE_EQ(e.r, 0.5);
    EXPECT_NEAR(e.h, expected, 4.0 * e.stderr_value);

    // conditioning recorded
    EXPECT_NEAR(curve.conditioning, 1.0 - kPi / 100.0, 4.0 * curve.conditioning_stderr);
}

TEST(Surface, ContactDistributionIllConditioned) {
    gg::GermGrainModel sure;
    sure.law = pp::OneGrainLaw{};
    sure.window = Window{Vec{4.5, 4.5}, Vec{5.5, 5.5}};
    sure.marks = pp::DiracMark{disc_mark(1.0)};
    sure.builder = gg::DiscShapeBuilder{};
    EXPECT_THROW(sf::contact_distribution(sure, Vec{5, 5}, {0.1, 0.2, 0.3}, 2000, 8), model_error);
}

TEST(Surface, ContactDerivativeAtZero) {
    const auto model = onegrain(gg::DiscShapeBuilder{}, disc_mark(1.0));
    const Vec x{5, 5};
    const auto curve = sf::contact_distribution(model, x, {0.02, 0.04, 0.08}, 400000, 9);
    const double slope = sf::contact_derivative_at_zero(curve);
    const double truth = (2.0 * kPi / 100.0) / (1.0 - kPi / 100.0);
    EXPECT_NEAR(slope, truth, 0.05 * truth);

    // sigma = 0 when no grain can ever reach x
    const auto far_curve = sf::contact_distribution(model, Vec{50, 50}, {0.02, 0.04, 0.08}, 2000, 10);
    EXPECT_DOUBLE_EQ(sf::contact_derivative_at_zero(far_curve), 0.0);

    sf::ContactCurve tiny;
    tiny.entries = {{0.0, 0.0, 0.0}, {0.1, 0.01, 0.001}};
    EXPECT_THROW(sf::contact_derivative_at_zero(tiny), std::invalid_argument);
}

TEST(Surface, ContactDerivativeBooleanDiscs) {
    // the void probability cancels: dH/dr at 0 equals lambda * 2 pi R
    const auto model = disc_boolean(0.05, 1.0);
    const auto curve = sf::contact_distribution(model, Vec{5, 5}, {0.02, 0.04, 0.08}, 400000, 11);
    const double slope = sf::contact_derivative_at_zero(curve);
    const double truth = 0.05 * 2.0 * kPi;
    EXPECT_NEAR(slope, truth, 0.05 * truth);

    const auto sa = sf::specific_area(model, Vec{5, 5}, {0.08, 0.04, 0.02}, 400000, 11);
    EXPECT_NEAR(slope, sa.extrapolated.value / curve.conditioning, 0.05 * truth);
}

TEST(Surface, MeanOuterContentOneGrainDisc) {
    const Window win{Vec{0, 0}, Vec{4, 4}};
    const auto model = onegrain(gg::DiscShapeBuilder{}, disc_mark(1.0), win);
    const geom::Window region{Vec{-1.3, -1.3}, Vec{5.3, 5.3}};
    const auto curve = sf::mean_outer_content(model, region, {0.04, 0.02}, 8, 12, 1024);
    for (const auto& e : curve.entries)
        EXPECT_NEAR(e.value, 2.0 * kPi + kPi * e.r, 0.02 * 2.0 * kPi);

    EXPECT_THROW(sf::mean_outer_content(onegrain(gg::CircleShapeBuilder{}, disc_mark(1.0), win),
                                        region, {0.04}, 4, 13, 256),
                 model_error);

    const auto empty = sf::mean_outer_content(disc_boolean(0.0, 1.0, win), region, {0.04}, 8, 14, 256);
    EXPECT_DOUBLE_EQ(empty.entries[0].value, 0.0);
}

TEST(Surface, MeanOuterContentWhisker) {
    const Window win{Vec{0, 0}, Vec{3, 3}};
    const auto model = onegrain(gg::DiscWhiskerShapeBuilder{}, whisker_mark(1.0, 0.5), win);
    const geom::Window region{Vec{-1.7, -1.7}, Vec{4.7, 4.7}};
    const auto curve = sf::mean_outer_content(model, region, {0.04, 0.02, 0.01}, 6, 15, 2048);
    const auto ex = density::extrapolate_to_zero(curve);
    EXPECT_NEAR(ex.value, 2.0 * kPi + 1.0, 0.03 * (2.0 * kPi + 1.0));
}

}  // namespace
