#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "hsical/error.hpp"
#include "hsical/mosaic.hpp"
#include "hsical/refmodel.hpp"
#include "hsical/sim.hpp"
#include "hsical/whitebalance.hpp"
#include "support.hpp"

using namespace hsical;

namespace {

Hypercube constant_cube(int H, int W, int N, double v) {
    Hypercube c(H, W, N);
    std::fill(c.data().begin(), c.data().end(), v);
    return c;
}

Hypercube random_cube(std::mt19937_64& rng, int H, int W, int N, double lo, double hi) {
    Hypercube c(H, W, N);
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : c.data()) v = u(rng);
    return c;
}

}  // namespace

TEST_CASE("cube white balance examples") {
    auto rho1 = ReflectivityFactors::uniform(3, 1.0);
    auto D0 = constant_cube(4, 5, 3, 0);
    std::mt19937_64 rng(1);
    auto W = random_cube(rng, 4, 5, 3, 100, 900);

    auto self = white_balance_cube(W, W, D0, rho1, {});
    for (double v : self.cube.data()) CHECK(v == doctest::Approx(1.0));
    CHECK(self.cube.kind() == CubeKind::reflectance);

    auto half = W;
    for (double& v : half.data()) v *= 0.5;
    auto halved = white_balance_cube(half, W, D0, rho1, {});
    for (double v : halved.cube.data()) CHECK(v == doctest::Approx(0.5));

    auto r = white_balance_cube(constant_cube(1, 1, 3, 456), constant_cube(1, 1, 3, 820), constant_cube(1, 1, 3, 0),
                                ReflectivityFactors::uniform(3, 0.95), {});
    CHECK(r.cube.at(0, 0, 1) == doctest::Approx(0.95 * 456 / 820).epsilon(1e-12));
    CHECK(r.cube.at(0, 0, 1) == doctest::Approx(0.52829).epsilon(1e-5));

    auto e = white_balance_cube(constant_cube(1, 1, 3, 500), constant_cube(1, 1, 3, 420), constant_cube(1, 1, 3, 20),
                                ReflectivityFactors::uniform(3, 0.95), Exposures{10, 5, 10});
    CHECK(e.cube.at(0, 0, 2) == doctest::Approx(456.0 / 820.0).epsilon(1e-12));

    CHECK_THROWS_AS(white_balance_cube(W, D0, D0, rho1, {}), CalibrationError);
    CHECK_THROWS_AS(white_balance_cube(W, constant_cube(4, 4, 3, 1), D0, rho1, {}), InvalidArgument);
}

TEST_CASE("masked pixels are zero and not counted") {
    auto I = constant_cube(20, 20, 2, 5);
    auto W = constant_cube(20, 20, 2, 10);
    for (int j = 0; j < 20; ++j) W.at(0, j, 0) = 0;
    PixelMask mask(20, 20);
    for (int j = 0; j < 20; ++j) mask.set(0, j, false);
    auto r = white_balance_cube(I, W, constant_cube(20, 20, 2, 0), ReflectivityFactors::uniform(2, 1), {}, &mask);
    CHECK(r.flagged == 0);
    CHECK(r.cube.at(0, 3, 1) == 0.0);
    CHECK(r.cube.at(5, 5, 0) == doctest::Approx(0.5));

    W.at(4, 4, 1) = 0;
    auto one = white_balance_cube(I, W, constant_cube(20, 20, 2, 0), ReflectivityFactors::uniform(2, 1), {}, &mask);
    CHECK(one.flagged == 1);
    CHECK(one.cube.at(4, 4, 1) == 0.0);
}

TEST_CASE("joint rescaling of image and exposure") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto I = random_cube(rng, 6, 6, 4, 10, 500);
        auto W = random_cube(rng, 6, 6, 4, 600, 900);
        auto D = random_cube(rng, 6, 6, 4, 0, 5);
        auto rho = ReflectivityFactors::uniform(4, 0.9);
        const Exposures ex{7, 3, 11};
        auto a = white_balance_cube(I, W, D, rho, ex);
        const double k = 0.5 + trial * 0.25;
        for (double& v : I.data()) v *= k;
        auto b = white_balance_cube(I, W, D, rho, {ex.image * k, ex.white, ex.dark});
        for (std::size_t p = 0; p < a.cube.data().size(); ++p)
            CHECK(std::abs(a.cube.data()[p] - b.cube.data()[p]) < 1e-9);
    }
}

TEST_CASE("mosaic and cube balancing agree") {
    std::mt19937_64 rng(5);
    auto layout = MosaicLayout::sequential(4, 4);
    auto make = [&](double lo, double hi) {
        MosaicFrame f = MosaicFrame::filled(32, 32, layout, 0, 10, 12);
        std::uniform_real_distribution<double> u(lo, hi);
        for (auto& v : f.data()) v = float(u(rng));
        return f;
    };
    auto I = make(100, 800), W = make(900, 1200), D = MosaicFrame::filled(32, 32, layout, 0, 10, 12);
    auto rho = ReflectivityFactors::uniform(16, 0.93);
    auto viaMosaic = demosaic_bilinear(white_balance_mosaic(I, W, D, rho).reflectance);
    auto viaCube = white_balance_cube(demosaic_bilinear(I), demosaic_bilinear(W), demosaic_bilinear(D), rho, {10, 10, 10});
    // Native sites are identical on both paths.
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const int n = layout.band_at(y, x);
            CHECK(viaMosaic.at(y, x, n) == doctest::Approx(viaCube.cube.at(y, x, n)).epsilon(1e-6));
        }
}

TEST_CASE("balancing against a synthetic reference") {
    std::mt19937_64 rng(7);
    auto S = testing::random_sensitivities(rng, 4);
    auto W = testing::separable_cube(30, 40, S, 600, {15, 20, 30});
    auto model = fit_gaussian_joint(W, PixelMask(30, 40));

    auto self = balance_with_synthetic(render_reference(model, 30, 40), model, std::nullopt, {});
    for (double v : self.cube.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));

    auto I = W;
    for (double& v : I.data()) v *= 0.5;
    auto withModel = balance_with_synthetic(I, model, std::nullopt, {});
    auto direct = white_balance_cube(I, W, constant_cube(30, 40, 4, 0), ReflectivityFactors::uniform(4, 1), {});
    for (std::size_t p = 0; p < I.data().size(); ++p)
        CHECK(withModel.cube.data()[p] == doctest::Approx(direct.cube.data()[p]).epsilon(1e-9));

    auto masked = balance_with_synthetic(I, model, std::nullopt, {}, ContentMask(20, 15, 8, 1.0));
    CHECK(masked.cube.at(0, 0, 0) == 0.0);
    CHECK(masked.cube.at(15, 20, 0) == doctest::Approx(0.5));
}

TEST_CASE("synthetic reference recovers a plate reflectance") {
    auto sc = testing::small_scenario(48, 64);
    auto truth = true_reference_model(sc);
    auto ref = simulate_white_reference(sc);
    auto plate = ref.cube;
    for (double& v : plate.data()) v *= 0.5;
    auto model = fit_gaussian_joint(ref.cube, PixelMask(48, 64));
    auto r = balance_with_synthetic(plate, model, std::nullopt, {});
    for (double v : r.cube.data()) CHECK(std::abs(v - 0.5) < 0.005);
    CHECK(model.S.size() == truth.S.size());
}

TEST_CASE("relative balancing") {
    std::vector<double> S{0.5, 1.5};
    Hypercube c(1, 2, 2);
    c.at(0, 0, 0) = 1;
    c.at(0, 0, 1) = 3;
    auto r = balance_relative(c, S);
    CHECK(r.cube.kind() == CubeKind::relative);
    CHECK(r.cube.at(0, 0, 0) == doctest::Approx(1.0));
    CHECK(r.cube.at(0, 0, 1) == doctest::Approx(1.0));
    CHECK(r.cube.at(0, 1, 0) == 0.0);
    CHECK(r.flagged == 1);

    Hypercube same(3, 3, 2);
    for (std::size_t p = 0; p < 9; ++p) {
        same.spectrum(p)[0] = 0.5 * (p + 1);
        same.spectrum(p)[1] = 1.5 * (p + 1);
    }
    auto flat = balance_relative(same, S);
    for (double v : flat.cube.data()) CHECK(v == doctest::Approx(1.0));

    CHECK_THROWS_AS(balance_relative(c, {1.0, 1.1}), InvalidArgument);
    CHECK_THROWS_AS(balance_relative(c, {0.0, 2.0}), InvalidArgument);
    CHECK_THROWS_AS(balance_relative(c, {1.0}), InvalidArgument);
}

TEST_CASE("relative balancing normalization and scale invariance") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        auto I = random_cube(rng, 4, 5, 8, 0.1, 100);
        auto S = testing::random_sensitivities(rng, 8);
        std::uniform_real_distribution<double> scale(1e-3, 1e3);
        const double lambda = scale(rng);
        auto a = balance_relative(I, S);
        for (double& v : I.data()) v *= lambda;
        auto b = balance_relative(I, S);
        for (std::size_t p = 0; p < a.cube.pixel_count(); ++p) {
            double mean = 0;
            for (double v : a.cube.spectrum(p)) mean += std::abs(v);
            CHECK(mean / 8 == doctest::Approx(1.0).epsilon(1e-12));
        }
        for (std::size_t k = 0; k < a.cube.data().size(); ++k)
            CHECK(std::abs(a.cube.data()[k] - b.cube.data()[k]) < 1e-9);
    }
}

TEST_CASE("sensitivities from a ruler ROI") {
    Hypercube c(40, 40, 2);
    for (std::size_t p = 0; p < c.pixel_count(); ++p) {
        c.spectrum(p)[0] = 50;
        c.spectrum(p)[1] = 150;
    }
    auto S = sensitivities_from_roi(c, 20, 20, 10, ReflectivityFactors::uniform(2, 1));
    CHECK(S[0] == doctest::Approx(0.5));
    CHECK(S[1] == doctest::Approx(1.5));

    auto flat = sensitivities_from_roi(c, 20, 20, 10, ReflectivityFactors({0.25, 0.75}));
    CHECK(flat[0] == doctest::Approx(1.0));
    CHECK(flat[1] == doctest::Approx(1.0));
    CHECK_THROWS_AS(sensitivities_from_roi(c, 5, 20, 10, ReflectivityFactors::uniform(2, 1)), InvalidArgument);

    auto sc = testing::small_scenario(64, 64);
    sc.vignetting.sigma = 1e6;
    auto ref = simulate_white_reference(sc);
    auto rho = reflectivity_factors(SampledSpectrum::constant(300, 1100, 1.0), sc.band_responses);
    auto est = sensitivities_from_roi(ref.cube, 32, 32, 20, rho);
    auto truth = true_sensitivities(sc);
    for (std::size_t n = 0; n < est.size(); ++n) CHECK(std::abs(est[n] / truth[n] - 1) < 0.01);
}
