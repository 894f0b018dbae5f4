#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "qptycho/optics.hpp"
#include "test_oracles.hpp"

using namespace qptycho;

namespace {

constexpr double kLambda = 687e-9;
constexpr double kFocal = 0.30;

/// Midpoint rule on [lo, lo + cells * h].
template <class Fn>
double midpoint_integral(Fn&& fn, double lo, double h, std::size_t cells) {
    double s = 0.0;
    for (std::size_t i = 0; i < cells; ++i) s += fn(lo + (static_cast<double>(i) + 0.5) * h);
    return s * h;
}

}  // namespace

TEST(LaboratoryGeometry, PitchAndWidthBySize) {
    const auto small = laboratory_geometry(6);
    EXPECT_DOUBLE_EQ(small.pitch, 176e-6);
    EXPECT_DOUBLE_EQ(small.slit_width, 88e-6);
    EXPECT_DOUBLE_EQ(small.wavelength, kLambda);
    EXPECT_DOUBLE_EQ(small.focal_length, kFocal);
    const auto large = laboratory_geometry(20);
    EXPECT_DOUBLE_EQ(large.pitch, 112e-6);
    EXPECT_DOUBLE_EQ(large.slit_width, 72e-6);
}

TEST(OpticalGeometry, Validation) {
    auto g = laboratory_geometry(5);
    g.slit_width = g.pitch;
    EXPECT_THROW(g.validate(), InvalidArgument);
    g = laboratory_geometry(5);
    g.wavelength = 0;
    EXPECT_THROW(g.validate(), InvalidArgument);
    g = laboratory_geometry(5);
    g.dim = 0;
    EXPECT_THROW(g.validate(), InvalidDimension);
}

TEST(DetectorPositions, CentralPixelAtOrigin) {
    for (std::size_t d = 3; d <= 32; ++d) EXPECT_EQ(detector_positions(laboratory_geometry(d)).positions[0], 0.0);
}

TEST(DetectorPositions, FoldedIndexAtSixLevels) {
    const auto g = laboratory_geometry(6);
    const auto layout = detector_positions(g);
    EXPECT_EQ(layout.index_map, (std::vector<long>{0, 1, 2, 3, -2, -1}));
    EXPECT_NEAR(layout.positions[4], 2 * kLambda * kFocal / (6 * g.pitch), 1e-18);
    EXPECT_NEAR(layout.positions[1], -1.952e-4, 1e-7);
}

TEST(DetectorPositions, SymmetricPairs) {
    for (std::size_t d = 3; d <= 32; ++d) {
        const auto layout = detector_positions(laboratory_geometry(d));
        for (std::size_t j = 1; j < d; ++j)
            if (2 * j != d) EXPECT_NEAR(layout.positions[j], -layout.positions[d - j], 1e-18);
    }
}

TEST(FarField, ClosedFormValues) {
    const auto g = laboratory_geometry(5);
    EXPECT_NEAR(far_field_intensity(StateVector::basis(5, 0), g, 0.0), 1.0, 1e-15);
    EXPECT_NEAR(far_field_intensity(StateVector::uniform(5), g, 0.0), 5.0, 1e-12);
    const double first_minimum = g.wavelength * g.focal_length / g.slit_width;
    EXPECT_NEAR(far_field_intensity(StateVector::uniform(5), g, first_minimum), 0.0, 1e-25);
    EXPECT_NEAR(slit_envelope(g, first_minimum), 0.0, 1e-30);
}

TEST(FarField, GlobalPhaseInvariance) {
    Rng rng = make_rng(40);
    const auto g = laboratory_geometry(7);
    for (int i = 0; i < 50; ++i) {
        const auto psi = haar_random_state(7, rng);
        const auto rotated = psi.scaled(std::polar(1.0, 0.77 * i));
        for (double x : {0.0, 1e-4, -3.3e-4, 7e-4})
            EXPECT_NEAR(far_field_intensity(rotated, g, x), far_field_intensity(psi, g, x), 1e-13);
    }
}

TEST(NearField, TopHatProfile) {
    Rng rng = make_rng(41);
    const auto g = laboratory_geometry(5);
    const auto psi = haar_random_state(5, rng);
    for (std::size_t k = 0; k < 5; ++k) {
        const double center = static_cast<double>(k) * g.pitch;
        EXPECT_DOUBLE_EQ(near_field_intensity(psi, g, center), std::norm(psi[k]));
        EXPECT_DOUBLE_EQ(near_field_intensity(psi, g, center + 0.4 * g.slit_width), std::norm(psi[k]));
        EXPECT_EQ(near_field_intensity(psi, g, center + 0.5 * g.pitch), 0.0);
    }
    EXPECT_EQ(near_field_intensity(psi, g, -g.pitch), 0.0);
}

TEST(NearField, IntegralEqualsSlitWidthTimesNorm) {
    Rng rng = make_rng(42);
    // Grids whose cell boundaries fall on the slit edges.
    {
        const auto g = laboratory_geometry(5);
        const auto psi = haar_random_state(5, rng);
        const double h = g.slit_width / 1000.0;
        const auto value = midpoint_integral([&](double x) { return near_field_intensity(psi, g, x); },
                                             -0.5 * g.pitch, h, 10000);
        EXPECT_NEAR(value, g.slit_width * psi.norm_squared(), 1e-9);
    }
    {
        const auto g = laboratory_geometry(20);
        const auto psi = haar_random_state(20, rng).scaled(Complex(1.5, 0));
        const double h = 4e-6 / 18.0;
        const auto value = midpoint_integral([&](double x) { return near_field_intensity(psi, g, x); },
                                             -0.5 * g.pitch, h, 20 * 28 * 18);
        EXPECT_NEAR(value, g.slit_width * psi.norm_squared(), 1e-9);
    }
}

TEST(SampleAtDetectors, EquivalentToFourierMeasurement) {
    Rng rng = make_rng(43);
    for (std::size_t d = 3; d <= 32; ++d) {
        const auto g = laboratory_geometry(d);
        for (int i = 0; i < 100; ++i) {
            const auto psi = haar_random_state(d, rng);
            const auto samples = sample_at_detectors(psi, g, Envelope::Off);
            const auto expected = oracle::dft_matrix_apply(psi, +1);
            for (std::size_t j = 0; j < d; ++j) ASSERT_NEAR(samples[j], std::norm(expected[j]), 1e-10) << d;
        }
    }
}

TEST(SampleAtDetectors, MatchesIdealProbabilitiesWithIdentityProjector) {
    Rng rng = make_rng(44);
    const auto identity = custom_family(5, {{0, 1, 2, 3, 4}});
    for (int i = 0; i < 20; ++i) {
        const auto psi = haar_random_state(5, rng);
        const auto samples = sample_at_detectors(psi, laboratory_geometry(5), Envelope::Off);
        const auto grid = ideal_probabilities(psi, identity);
        for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(samples[j], grid(0, j), 1e-10);
    }
}

TEST(SampleAtDetectors, GroundStateWithEnvelope) {
    for (std::size_t d : {5u, 6u, 9u, 24u}) {
        const auto g = laboratory_geometry(d);
        const auto layout = detector_positions(g);
        const auto values = sample_at_detectors(StateVector::basis(d, 0), g, Envelope::On);
        EXPECT_EQ(slit_envelope(g, layout.positions[0]), 1.0);
        for (std::size_t j = 0; j < d; ++j) {
            const double u = std::numbers::pi * g.slit_width * layout.positions[j] / (g.wavelength * g.focal_length);
            const double sinc = u == 0.0 ? 1.0 : std::sin(u) / u;
            EXPECT_NEAR(values[j], sinc * sinc / static_cast<double>(d), 1e-14);
            if (j > 0 && 2 * j != d) EXPECT_NEAR(values[j], values[d - j], 1e-15);
        }
    }
}

TEST(DetectorProbabilities, EnvelopeOffReproducesForwardModel) {
    Rng rng = make_rng(45);
    for (std::size_t d = 3; d <= 20; ++d) {
        const auto family = build_family(d, FamilyKind::FamilyII);
        const auto psi = haar_random_state(d, rng);
        const auto optics = detector_probabilities(psi, family, laboratory_geometry(d), Envelope::Off);
        const auto ideal = ideal_probabilities(psi, family);
        for (std::size_t n = 0; n < ideal.values.size(); ++n) EXPECT_NEAR(optics.values[n], ideal.values[n], 1e-10);
    }
}

TEST(EnvelopeContrast, SmallGeometryBound) {
    // Outermost detector |mu| = floor(d/2) sits at u = pi a floor(d/2) / (d delta).
    for (std::size_t d = 3; d < 20; ++d) {
        const auto g = laboratory_geometry(d);
        const double u = std::numbers::pi * g.slit_width * static_cast<double>(d / 2) / (static_cast<double>(d) * g.pitch);
        const double expected = std::pow(std::sin(u) / u, 2);
        EXPECT_NEAR(envelope_contrast(g), expected, 1e-14) << d;
        EXPECT_GT(envelope_contrast(g), 0.8);
    }
}

TEST(SampleAtDetectors, DimensionMismatchThrows) {
    EXPECT_THROW(sample_at_detectors(StateVector::basis(4, 0), laboratory_geometry(5)), DimensionMismatch);
}

TEST(Profile, SamplingAndCsv) {
    const auto g = laboratory_geometry(3);
    const auto psi = StateVector::uniform(3);
    const auto profile =
        sample_profile([&](double x) { return far_field_intensity(psi, g, x); }, -1e-3, 1e-3, 201);
    ASSERT_EQ(profile.size(), 201u);
    EXPECT_DOUBLE_EQ(profile.front().x, -1e-3);
    EXPECT_NEAR(profile[100].intensity, 3.0, 1e-12);
    std::ostringstream out;
    write_profile_csv(out, profile);
    EXPECT_EQ(out.str().substr(0, 12), "x,intensity\n");
    EXPECT_THROW(sample_profile([](double) { return 0.0; }, 0.0, 1.0, 1), InvalidArgument);
}
