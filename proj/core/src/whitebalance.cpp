#include "hsical/whitebalance.hpp"

#include <cmath>
#include <string>

#include "hsical/error.hpp"
#include "hsical/parallel.hpp"

namespace hsical {

namespace {

void check_exposures(const Exposures& e) {
    if (!(e.image > 0.0) || !(e.white > 0.0) || !(e.dark > 0.0))
        throw InvalidArgument("exposure times must be positive");
}

}  // namespace

CubeBalance white_balance_cube(const Hypercube& I, const Hypercube& W, const Hypercube& D,
                               const ReflectivityFactors& rho, const Exposures& exposures, const PixelMask* mask) {
    if (!I.same_shape(W) || !I.same_shape(D))
        throw InvalidArgument("image, white and dark cubes must have the same dimensions");
    if (rho.size() != I.bands()) throw InvalidArgument("reflectivity factor count does not match band count");
    if (mask && (mask->height() != I.height() || mask->width() != I.width()))
        throw InvalidArgument("mask geometry does not match the image");
    check_exposures(exposures);

    const double kw = exposures.image / exposures.white;
    const double kd = exposures.image / exposures.dark;
    const int N = I.bands();
    Hypercube out(I.height(), I.width(), N, CubeKind::reflectance, I.band_centers());
    std::vector<std::uint8_t> bad(I.pixel_count(), 0);

    parallel_for(I.pixel_count(), [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
            if (mask && !(*mask)[p]) continue;
            auto ip = I.spectrum(p), wp = W.spectrum(p), dp = D.spectrum(p);
            auto op = out.spectrum(p);
            for (int n = 0; n < N; ++n) {
                const double den = kw * wp[n] - kd * dp[n];
                if (den > 0.0) {
                    op[n] = rho[n] * (ip[n] - kd * dp[n]) / den;
                } else {
                    op[n] = 0.0;
                    bad[p] = 1;
                }
            }
        }
    }, 1024);

    std::size_t flagged = 0;
    for (auto v : bad) flagged += v;
    const double considered = mask ? static_cast<double>(mask->count()) : static_cast<double>(I.pixel_count());
    if (considered > 0 && flagged > 0.01 * considered)
        throw CalibrationError(std::to_string(flagged) + " of " + std::to_string(static_cast<std::size_t>(considered)) +
                               " pixels have a non-positive white-minus-dark denominator");
    return {std::move(out), flagged};
}

CubeBalance balance_with_synthetic(const Hypercube& I, const WhiteReferenceModel& model,
                                   const std::optional<Hypercube>& D, const Exposures& exposures,
                                   const std::optional<ContentMask>& mask) {
    if (model.bands() != I.bands()) throw InvalidArgument("model band count does not match the image");
    const Hypercube W = render_reference(model, I.height(), I.width());
    const Hypercube dark = D ? *D : Hypercube(I.height(), I.width(), I.bands());
    if (!mask) return white_balance_cube(I, W, dark, ReflectivityFactors::uniform(I.bands(), 1.0), exposures);
    const PixelMask pm = PixelMask::from_content(I.height(), I.width(), *mask);
    return white_balance_cube(I, W, dark, ReflectivityFactors::uniform(I.bands(), 1.0), exposures, &pm);
}

CubeBalance balance_relative(const Hypercube& I, const std::vector<double>& S, const std::optional<Hypercube>& D,
                             double dark_ratio) {
    const int N = I.bands();
    if (static_cast<int>(S.size()) != N) throw InvalidArgument("sensitivity count does not match band count");
    double mean = 0.0;
    for (double s : S) {
        if (!(s > 0.0)) throw InvalidArgument("spectral sensitivities must be positive");
        mean += s;
    }
    mean /= N;
    if (std::abs(mean - 1.0) > 1e-6) throw InvalidArgument("spectral sensitivities must have mean 1");
    if (D && !D->same_shape(I)) throw InvalidArgument("dark cube dimensions do not match the image");

    Hypercube out(I.height(), I.width(), N, CubeKind::relative, I.band_centers());
    std::vector<std::uint8_t> zero(I.pixel_count(), 0);
    parallel_for(I.pixel_count(), [&](std::size_t b, std::size_t e) {
        std::vector<double> tmp(N);
        for (std::size_t p = b; p < e; ++p) {
            auto ip = I.spectrum(p);
            double acc = 0.0;
            for (int n = 0; n < N; ++n) {
                double v = ip[n];
                if (D) v -= dark_ratio * D->spectrum(p)[n];
                tmp[n] = v / S[n];
                acc += std::abs(tmp[n]);
            }
            auto op = out.spectrum(p);
            if (!(acc > 0.0)) {
                zero[p] = 1;
                continue;
            }
            const double scale = N / acc;
            for (int n = 0; n < N; ++n) op[n] = tmp[n] * scale;
        }
    }, 1024);
    std::size_t flagged = 0;
    for (auto v : zero) flagged += v;
    return {std::move(out), flagged};
}

std::vector<double> sensitivities_from_roi(const Hypercube& image, double center_i, double center_j, double radius,
                                           const ReflectivityFactors& rho) {
    const int N = image.bands();
    if (rho.size() != N) throw InvalidArgument("reflectivity factor count does not match band count");
    if (!(radius > 0.0)) throw InvalidArgument("ROI radius must be positive");
    if (center_i - radius < 0 || center_j - radius < 0 || center_i + radius > image.height() - 1 ||
        center_j + radius > image.width() - 1)
        throw InvalidArgument("ROI disk extends outside the image");

    std::vector<double> sum(N, 0.0);
    std::size_t count = 0;
    const int i0 = static_cast<int>(std::ceil(center_i - radius)), i1 = static_cast<int>(std::floor(center_i + radius));
    const int j0 = static_cast<int>(std::ceil(center_j - radius)), j1 = static_cast<int>(std::floor(center_j + radius));
    for (int i = i0; i <= i1; ++i) {
        for (int j = j0; j <= j1; ++j) {
            const double di = i - center_i, dj = j - center_j;
            if (di * di + dj * dj > radius * radius) continue;
            auto s = image.spectrum(i, j);
            for (int n = 0; n < N; ++n) sum[n] += s[n];
            ++count;
        }
    }
    if (count == 0) throw InvalidArgument("ROI contains no pixels");
    double mean = 0.0;
    for (int n = 0; n < N; ++n) {
        sum[n] = sum[n] / count / rho[n];
        mean += sum[n];
    }
    mean /= N;
    if (!(mean > 0.0)) throw DegenerateInput("ROI band means are not positive");
    for (double& s : sum) s /= mean;
    return sum;
}

}  // namespace hsical
