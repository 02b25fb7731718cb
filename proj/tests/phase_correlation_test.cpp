#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "test_support.hpp"

using namespace skyreg;
using testsupport::fractional_shift;
using testsupport::noise_raster;

namespace {

CorrelationSurface raw_surface_of(const ComplexSpectrum& cps) {
    const ComplexSpectrum field = idft2(cps);
    CorrelationSurface surf;
    surf.width = cps.width;
    surf.height = cps.height;
    surf.centered = false;
    surf.data.resize(field.data.size());
    for (std::size_t i = 0; i < field.data.size(); ++i) surf.data[i] = field.data[i].real();
    return surf;
}

TEST(CrossPowerSpectrum, IdenticalSpectraGiveUnitBins) {
    const ComplexSpectrum f = dft2(make_synthetic_scene(32, 2));
    const ComplexSpectrum cps = cross_power_spectrum(f, f);
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        if (std::abs(f.data[i]) < 0.1) continue;  // eps guard dominates near-empty bins
        EXPECT_NEAR(cps.data[i].real(), 1.0, 1e-5);
        EXPECT_NEAR(cps.data[i].imag(), 0.0, 1e-5);
    }
}

TEST(CrossPowerSpectrum, PurePhaseRampGivesImpulse) {
    const int w = 32, h = 32;
    const ComplexSpectrum fa = dft2(make_synthetic_scene(w, 3));
    ComplexSpectrum fb = fa;
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
            fb.at(u, v) *= std::polar(1.0, -2.0 * std::numbers::pi * (5.0 * u / w + 3.0 * v / h));
    const CorrelationSurface surf = raw_surface_of(cross_power_spectrum(fa, fb));
    std::size_t best = 0;
    for (std::size_t i = 1; i < surf.data.size(); ++i)
        if (surf.data[i] > surf.data[best]) best = i;
    EXPECT_EQ(best % w, 5u);
    EXPECT_EQ(best / w, 3u);
    EXPECT_GT(surf.data[best], 0.5);
}

TEST(CrossPowerSpectrum, ZeroSpectraStayZero) {
    ComplexSpectrum zero;
    zero.width = 8;
    zero.height = 8;
    zero.data.assign(64, {0.0, 0.0});
    const ComplexSpectrum cps = cross_power_spectrum(zero, zero);
    for (const std::complex<double>& v : cps.data) EXPECT_EQ(std::abs(v), 0.0);
}

TEST(CrossPowerSpectrum, ModulusNeverExceedsOne) {
    const ComplexSpectrum fa = dft2(noise_raster(16, 16, 7));
    const ComplexSpectrum fb = dft2(noise_raster(16, 16, 8));
    const ComplexSpectrum cps = cross_power_spectrum(fa, fb);
    for (const std::complex<double>& v : cps.data) EXPECT_LE(std::abs(v), 1.0 + 1e-12);
}

TEST(CrossPowerSpectrum, RejectsBadArguments) {
    const ComplexSpectrum fa = dft2(noise_raster(16, 16, 7));
    const ComplexSpectrum fb = dft2(noise_raster(8, 8, 8));
    EXPECT_THROW(cross_power_spectrum(fa, fb), std::invalid_argument);
    EXPECT_THROW(cross_power_spectrum(fa, fa, 0.0), std::invalid_argument);
}

TEST(Correlate, SelfPeaksAtCentre) {
    const Raster img = make_synthetic_scene(64, 11);
    const CorrelationSurface surf = correlate(img, img);
    const PeakEstimate peak = peak_argmax(surf);
    EXPECT_EQ(peak.dx, 0.0);
    EXPECT_EQ(peak.dy, 0.0);
    EXPECT_GT(peak.confidence, 5.0);
}

TEST(Correlate, ShiftTheoremExhaustive16) {
    const Raster img = noise_raster(16, 16, 99);
    for (int dy = 0; dy < 16; ++dy) {
        for (int dx = 0; dx < 16; ++dx) {
            const CorrelationSurface surf = correlate(img, circular_shift(img, dx, dy));
            const PeakEstimate peak = peak_argmax(surf);
            const int expected_dx = dx < 8 ? dx : dx - 16;
            const int expected_dy = dy < 8 ? dy : dy - 16;
            ASSERT_EQ(peak.dx, expected_dx) << "shift " << dx << "," << dy;
            ASSERT_EQ(peak.dy, expected_dy) << "shift " << dx << "," << dy;
        }
    }
}

TEST(Correlate, IndependentNoiseHasLowConfidence) {
    for (int i = 0; i < 100; ++i) {
        const Raster a = noise_raster(64, 64, 1000 + 2 * i);
        const Raster b = noise_raster(64, 64, 1001 + 2 * i);
        const CorrelationSurface surf = correlate(a, b);
        EXPECT_LT(peak_argmax(surf).confidence, 5.0) << "pair " << i;
    }
}

TEST(Correlate, RejectsDimensionMismatch) {
    EXPECT_THROW(correlate(noise_raster(16, 16, 1), noise_raster(32, 32, 2)), std::invalid_argument);
}

TEST(PeakArgmax, ImpulseSurface) {
    CorrelationSurface surf;
    surf.width = 16;
    surf.height = 16;
    surf.centered = true;
    surf.data.assign(256, 0.0);
    surf.at(11, 6) = 1.0;  // shift (3, -2)
    const PeakEstimate peak = peak_argmax(surf);
    EXPECT_EQ(peak.dx, 3.0);
    EXPECT_EQ(peak.dy, -2.0);
    EXPECT_GT(peak.confidence, 3.0);
}

TEST(PeakArgmax, ConstantSurfaceTieBreak) {
    CorrelationSurface surf;
    surf.width = 8;
    surf.height = 8;
    surf.centered = true;
    surf.data.assign(64, 0.25);
    const PeakEstimate peak = peak_argmax(surf);
    // smallest row-major index wins: raw bin (0,0) = shift (-4,-4)
    EXPECT_EQ(peak.dx, -4.0);
    EXPECT_EQ(peak.dy, -4.0);
}

TEST(PeakSoftargmax, SymmetricTieIsUnbiasedForAnyTemperature) {
    CorrelationSurface surf;
    surf.width = 16;
    surf.height = 16;
    surf.centered = true;
    surf.data.assign(256, 0.0);
    surf.at(7, 8) = 1.0;  // shift (-1, 0)
    surf.at(9, 8) = 1.0;  // shift (+1, 0)
    for (const double tau : {0.01, 0.5, 10.0}) {
        const PeakEstimate est = peak_softargmax(surf, tau, 4);
        EXPECT_NEAR(est.dx, 0.0, 1e-12) << "tau " << tau;
        EXPECT_NEAR(est.dy, 0.0, 1e-12) << "tau " << tau;
    }
}

TEST(PeakSoftargmax, SmallTemperatureMatchesArgmax) {
    std::mt19937_64 seeds(5);
    for (int i = 0; i < 20; ++i) {
        const CorrelationSurface surf =
            correlate(noise_raster(32, 32, seeds()), noise_raster(32, 32, seeds()));
        double lo = surf.data[0], hi = surf.data[0];
        for (double v : surf.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const PeakEstimate hard = peak_argmax(surf);
        const PeakEstimate soft = peak_softargmax(surf, 1e-4 * (hi - lo), 8);
        EXPECT_NEAR(soft.dx, hard.dx, 1e-3);
        EXPECT_NEAR(soft.dy, hard.dy, 1e-3);
    }
}

TEST(PeakSoftargmax, RecoversFractionalShift) {
    const Raster img = make_synthetic_scene(64, 21);
    const Raster moved = fractional_shift(img, 4.5, -2.25);
    const CorrelationSurface surf = correlate(img, moved);
    double lo = surf.data[0], hi = surf.data[0];
    for (double v : surf.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const PeakEstimate est = peak_softargmax(surf, 0.1 * (hi - lo), 8);
    EXPECT_NEAR(est.dx, 4.5, 0.25);
    EXPECT_NEAR(est.dy, -2.25, 0.25);
}

TEST(PeakSoftargmax, RejectsBadArguments) {
    const CorrelationSurface surf = correlate(noise_raster(16, 16, 1), noise_raster(16, 16, 2));
    EXPECT_THROW(peak_softargmax(surf, 0.0, 4), std::invalid_argument);
    EXPECT_THROW(peak_softargmax(surf, -1.0, 4), std::invalid_argument);
    EXPECT_THROW(peak_softargmax(surf, 0.5, 0), std::invalid_argument);
}

TEST(SoftargmaxGradients, MatchesFiniteDifferences) {
    std::mt19937_64 seeds(31);
    for (int trial = 0; trial < 10; ++trial) {
        const CorrelationSurface surf =
            correlate(noise_raster(32, 32, seeds()), noise_raster(32, 32, seeds()));
        double lo = surf.data[0], hi = surf.data[0];
        for (double v : surf.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double range = hi - lo;
        const double tau = 0.5 * range;
        const int radius = 4;
        const SoftArgmaxGradients grads = softargmax_gradients(surf, tau, radius);
        const int r = grads.window_radius;
        const double h = 1e-5 * range;
        std::size_t j = 0;
        for (int oy = -r; oy <= r; ++oy) {
            for (int ox = -r; ox <= r; ++ox, ++j) {
                const int ix = (grads.anchor_x + ox + surf.width) % surf.width;
                const int iy = (grads.anchor_y + oy + surf.height) % surf.height;
                CorrelationSurface plus = surf;
                plus.at(ix, iy) += h;
                CorrelationSurface minus = surf;
                minus.at(ix, iy) -= h;
                const PeakEstimate ep =
                    peak_softargmax_at(plus, grads.anchor_x, grads.anchor_y, tau, radius);
                const PeakEstimate em =
                    peak_softargmax_at(minus, grads.anchor_x, grads.anchor_y, tau, radius);
                const double fdx = (ep.dx - em.dx) / (2.0 * h);
                const double fdy = (ep.dy - em.dy) / (2.0 * h);
                const double ax = grads.d_dx_d_value[j];
                const double ay = grads.d_dy_d_value[j];
                if (std::max(std::abs(ax), std::abs(fdx)) > 1e-8) {
                    ASSERT_LT(std::abs(ax - fdx) / std::max(std::abs(ax), std::abs(fdx)), 1e-4);
                }
                if (std::max(std::abs(ay), std::abs(fdy)) > 1e-8) {
                    ASSERT_LT(std::abs(ay - fdy) / std::max(std::abs(ay), std::abs(fdy)), 1e-4);
                }
            }
        }
        // temperature derivative against a central difference in tau
        const double ht = 1e-6 * tau;
        const PeakEstimate tp = peak_softargmax_at(surf, grads.anchor_x, grads.anchor_y, tau + ht, radius);
        const PeakEstimate tm = peak_softargmax_at(surf, grads.anchor_x, grads.anchor_y, tau - ht, radius);
        const double fdtx = (tp.dx - tm.dx) / (2.0 * ht);
        const double fdty = (tp.dy - tm.dy) / (2.0 * ht);
        if (std::max(std::abs(grads.d_dx_d_temperature), std::abs(fdtx)) > 1e-8) {
            EXPECT_LT(std::abs(grads.d_dx_d_temperature - fdtx) /
                          std::max(std::abs(grads.d_dx_d_temperature), std::abs(fdtx)),
                      1e-4);
        }
        if (std::max(std::abs(grads.d_dy_d_temperature), std::abs(fdty)) > 1e-8) {
            EXPECT_LT(std::abs(grads.d_dy_d_temperature - fdty) /
                          std::max(std::abs(grads.d_dy_d_temperature), std::abs(fdty)),
                      1e-4);
        }
    }
}

TEST(SoftargmaxGradients, UniformOffsetChangesNothing) {
    const CorrelationSurface surf = correlate(noise_raster(32, 32, 61), noise_raster(32, 32, 62));
    const double tau = 0.4;
    const SoftArgmaxGradients base = softargmax_gradients(surf, tau, 5);
    CorrelationSurface lifted = surf;
    for (double& v : lifted.data) v += 0.37;
    const SoftArgmaxGradients moved = softargmax_gradients(lifted, tau, 5);
    for (std::size_t j = 0; j < base.d_dx_d_value.size(); ++j) {
        EXPECT_NEAR(base.d_dx_d_value[j], moved.d_dx_d_value[j], 1e-9);
        EXPECT_NEAR(base.d_dy_d_value[j], moved.d_dy_d_value[j], 1e-9);
    }
    // softmax shift invariance: sensitivities to a uniform offset cancel
    double sum_x = 0.0, sum_y = 0.0;
    for (std::size_t j = 0; j < base.d_dx_d_value.size(); ++j) {
        sum_x += base.d_dx_d_value[j];
        sum_y += base.d_dy_d_value[j];
    }
    EXPECT_NEAR(sum_x, 0.0, 1e-9);
    EXPECT_NEAR(sum_y, 0.0, 1e-9);
}

TEST(SoftargmaxGradients, LargeTemperatureFlattensToCentroid) {
    const CorrelationSurface surf = correlate(noise_raster(32, 32, 71), noise_raster(32, 32, 72));
    const detail::WindowAnchor anchor = detail::softargmax_anchor(surf);
    const double tau = 1e6;
    const PeakEstimate est = peak_softargmax(surf, tau, 6);
    // the window is symmetric around the anchor, so the centroid is the anchor shift
    EXPECT_NEAR(est.dx, surf.shift_x(anchor.ix), 1e-4);
    EXPECT_NEAR(est.dy, surf.shift_y(anchor.iy), 1e-4);
    const SoftArgmaxGradients grads = softargmax_gradients(surf, tau, 6);
    EXPECT_NEAR(grads.d_dx_d_temperature, 0.0, 1e-6);
    EXPECT_NEAR(grads.d_dy_d_temperature, 0.0, 1e-6);
}

TEST(CalibrateTemperature, ImpulseSurfaceTiesToSmallestTau) {
    CorrelationSurface surf;
    surf.width = 16;
    surf.height = 16;
    surf.centered = true;
    surf.data.assign(256, 0.0);
    surf.at(10, 9) = 1.0;  // shift (2, 1)
    const std::vector<LabeledSurface> pairs = {{surf, 2.0, 1.0}};
    const std::vector<double> grid = {0.8, 0.05, 0.2};
    EXPECT_DOUBLE_EQ(calibrate_temperature(pairs, grid), 0.05);
}

TEST(CalibrateTemperature, ReturnsGridArgmin) {
    std::mt19937_64 seeds(43);
    std::vector<LabeledSurface> pairs;
    for (int i = 0; i < 8; ++i) {
        const Raster img = make_synthetic_scene(32, seeds());
        const double dx = uniform_range(seeds, -3.0, 3.0);
        const double dy = uniform_range(seeds, -3.0, 3.0);
        pairs.push_back({correlate(img, fractional_shift(img, dx, dy)), dx, dy});
    }
    const std::vector<double> grid = {0.001, 0.005, 0.02, 0.08, 0.3};
    const double chosen = calibrate_temperature(pairs, grid, 8);
    const auto mean_error = [&pairs](double tau) {
        double err = 0.0;
        for (const LabeledSurface& p : pairs) {
            const PeakEstimate est = peak_softargmax(p.surface, tau, 8);
            err += std::hypot(est.dx - p.true_dx, est.dy - p.true_dy);
        }
        return err / pairs.size();
    };
    const double chosen_err = mean_error(chosen);
    for (double tau : grid) EXPECT_LE(chosen_err, mean_error(tau) + 1e-12);
}

TEST(CalibrateTemperature, BeatsArgmaxOnNoisySurfaces) {
    std::mt19937_64 seeds(47);
    std::mt19937_64 noise_gen(48);
    std::vector<LabeledSurface> pairs;
    for (int i = 0; i < 10; ++i) {
        const Raster img = make_synthetic_scene(32, seeds());
        const double dx = uniform_range(seeds, -3.0, 3.0);
        const double dy = uniform_range(seeds, -3.0, 3.0);
        CorrelationSurface surf = correlate(img, fractional_shift(img, dx, dy));
        double lo = surf.data[0], hi = surf.data[0];
        for (double v : surf.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (double& v : surf.data) v += 0.05 * (hi - lo) * gaussian(noise_gen);
        pairs.push_back({std::move(surf), dx, dy});
    }
    std::vector<double> grid;
    for (double tau = 0.002; tau < 0.5; tau *= 2.0) grid.push_back(tau);
    const double chosen = calibrate_temperature(pairs, grid, 8);
    double soft_err = 0.0, hard_err = 0.0;
    for (const LabeledSurface& p : pairs) {
        const PeakEstimate soft = peak_softargmax(p.surface, chosen, 8);
        const PeakEstimate hard = peak_argmax(p.surface);
        soft_err += std::hypot(soft.dx - p.true_dx, soft.dy - p.true_dy);
        hard_err += std::hypot(hard.dx - p.true_dx, hard.dy - p.true_dy);
    }
    EXPECT_LE(soft_err, hard_err);
}

TEST(CalibrateTemperature, RejectsEmptyInputs) {
    const std::vector<LabeledSurface> none;
    const std::vector<double> grid = {0.1};
    EXPECT_THROW(calibrate_temperature(none, grid), std::invalid_argument);
    CorrelationSurface surf;
    surf.width = 8;
    surf.height = 8;
    surf.data.assign(64, 0.0);
    const std::vector<LabeledSurface> one = {{surf, 0.0, 0.0}};
    const std::vector<double> empty_grid;
    EXPECT_THROW(calibrate_temperature(one, empty_grid), std::invalid_argument);
}

TEST(Confidence, InvariantPeakLocationUnderPositiveScaling) {
    const Raster img = make_synthetic_scene(32, 77);
    const CorrelationSurface surf = correlate(img, circular_shift(img, 4, -3));
    CorrelationSurface scaled = surf;
    for (double& v : scaled.data) v *= 7.5;
    const PeakEstimate a = peak_argmax(surf);
    const PeakEstimate b = peak_argmax(scaled);
    EXPECT_EQ(a.dx, b.dx);
    EXPECT_EQ(a.dy, b.dy);
}

}  // namespace
