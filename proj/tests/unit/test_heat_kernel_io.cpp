#include "rslv/errors.hpp"
#include "rslv/heat_kernel.hpp"
#include "rslv/model_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace rslv;

TEST(HeatKernel, PointValues) {
    EXPECT_NEAR(heat_kernel(1.0, 0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
    EXPECT_NEAR(heat_kernel(0.5, 1.0), std::exp(-1.0) / std::sqrt(std::numbers::pi), 1e-15);
}

TEST(HeatKernel, ConvolutionOfMeasures) {
    std::vector<double> x;
    for (int a = -600; a <= 600; ++a) x.push_back(0.01 * a);
    const auto dirac = heat_kernel_convolve(PointMass{0.5, 2.0}, 0.3, x);
    EXPECT_NEAR(dirac[650], 2.0 * heat_kernel(0.3, 0.0), 1e-14);
    // N(0, 0.1) * h_0.4 = N(0, 0.5).
    const auto g = heat_kernel_convolve(GaussianDensity{0.0, 0.1, 1.0}, 0.4, x);
    EXPECT_NEAR(g[600], heat_kernel(0.5, 0.0), 1e-15);
    EXPECT_NEAR(trapezoid(x, g), 1.0, 1e-9);
    // A finely tabulated Gaussian convolves to the same result.
    std::vector<double> dens;
    for (double v : x) dens.push_back(heat_kernel(0.1, v));
    const auto t = heat_kernel_convolve(TabulatedDensity{x, dens}, 0.4, x);
    for (std::size_t a = 0; a < x.size(); a += 50) EXPECT_NEAR(t[a], g[a], 1e-6);
    const auto mix = heat_kernel_convolve(AtomMixture{{-1.0, 1.0}, {0.5, 0.5}}, 0.2, x);
    EXPECT_NEAR(mix[500], 0.5 * heat_kernel(0.2, 0.0) + 0.5 * heat_kernel(0.2, -2.0), 1e-15);
    EXPECT_THROW(heat_kernel_convolve(PointMass{}, 0.0, x), DomainError);
}

TEST(Measures, MassAndValidation) {
    EXPECT_DOUBLE_EQ(total_mass(PointMass{0.0, 1.0}), 1.0);
    EXPECT_DOUBLE_EQ(total_mass(AtomMixture{{0.0, 1.0}, {0.25, 0.5}}), 0.75);
    EXPECT_TRUE(has_atoms(PointMass{}));
    EXPECT_FALSE(has_atoms(GaussianDensity{}));
    EXPECT_THROW(validate(AtomMixture{{0.0}, {0.5, 0.5}}), DomainError);
    EXPECT_THROW(validate(TabulatedDensity{{0.0, 0.0}, {1.0, 1.0}}), DomainError);
    EXPECT_THROW(validate(GaussianDensity{0.0, 0.0, 1.0}), DomainError);
}

TEST(ModelIo, RoundTripWithConstantIntensities) {
    const auto j = nlohmann::json::parse(R"({"lambda": [1, 4], "alpha": [0.5, 0.5], "q": [[0, 1], [2, 0]]})");
    const RegimeModel m = model_from_json(j);
    EXPECT_TRUE(m.has_jumps());
    EXPECT_DOUBLE_EQ(m.intensities().rate(1, 0, 0.0), 2.0);
    EXPECT_DOUBLE_EQ(m.q_bar(), 2.0);
    const RegimeModel back = model_from_json(model_to_json(m));
    EXPECT_DOUBLE_EQ(back.intensities().rate(0, 1, 3.0), 1.0);
    EXPECT_DOUBLE_EQ(back.alpha()[1], 0.5);
}

TEST(ModelIo, PiecewiseIntensitiesAndDefaults) {
    const auto j = nlohmann::json::parse(
        R"({"lambda": [1, 2, 3], "q": {"knots": [0, 1], "rates": [[[0,1,0],[0,0,1],[1,0,0]], [[0,3,0],[0,0,1],[1,0,0]]]}})");
    const RegimeModel m = model_from_json(j);
    EXPECT_NEAR(m.alpha()[0] + m.alpha()[1] + m.alpha()[2], 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(m.intensities().rate(0, 1, 0.5), 2.0);
}

TEST(ModelIo, InvalidDocumentsRaiseConfigError) {
    EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"alpha": [1]})")), ConfigError);
    EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"lambda": [1, -1]})")), ConfigError);
    EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"lambda": [1, 2], "q": [[0, 1]]})")), ConfigError);
    EXPECT_THROW(measure_from_json(nlohmann::json::parse(R"({"type": "cauchy"})")), ConfigError);
}

TEST(ModelIo, MeasureRoundTrip) {
    for (const char* text : {R"({"type": "dirac", "x": 0.25})", R"({"type": "gaussian", "mean": 1, "variance": 0.5})",
                             R"({"type": "mixture", "x": [0, 1], "weight": [0.3, 0.7]})",
                             R"({"type": "tabulated", "x": [0, 1, 2], "density": [0, 1, 0]})"}) {
        const Measure mu = measure_from_json(nlohmann::json::parse(text));
        const Measure back = measure_from_json(measure_to_json(mu));
        EXPECT_EQ(mu.index(), back.index());
        EXPECT_DOUBLE_EQ(total_mass(mu), total_mass(back));
    }
}
