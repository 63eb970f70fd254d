#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hsical/types.hpp"

namespace hsical {

/// Isotropic Gaussian vignetting with peak value 1 at (mu_i, mu_j).
struct GaussianVignetting {
    double mu_i = 0.0;
    double mu_j = 0.0;
    double sigma = 1.0;

    double operator()(double i, double j) const noexcept;
};

/// Non-parametric vignetting: one value per pixel.
struct VignettingField {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    double operator()(int i, int j) const noexcept { return values[static_cast<std::size_t>(i) * width + j]; }
};

enum class FitMethod { nonparametric, gaussian_joint, gaussian_sequential };

std::string to_string(FitMethod m);
FitMethod parse_fit_method(const std::string& name);

/// Separable white reference W(i, j, n) = M * S(n) * V(i, j) with mean(S) = 1
/// and max V = 1 over the fitted pixels.
struct WhiteReferenceModel {
    FitMethod method = FitMethod::nonparametric;
    double M = 1.0;
    std::vector<double> S;
    std::variant<GaussianVignetting, VignettingField> V;
    double residual_rms = 0.0;
    bool converged = true;
    /// Gaussian sigma exceeded ten image diagonals: the data show no vignetting.
    bool degenerate = false;
    int iterations = 0;
    /// Geometry of the data the model was fitted to.
    int height = 0;
    int width = 0;

    int bands() const noexcept { return static_cast<int>(S.size()); }
    double vignetting(int i, int j) const noexcept;
    bool is_gaussian() const noexcept { return std::holds_alternative<GaussianVignetting>(V); }
    const GaussianVignetting& gaussian() const { return std::get<GaussianVignetting>(V); }
};

/// Per-band reflectivity of the reference object from its reflectance
/// spectrum and the sensor band responses.
ReflectivityFactors reflectivity_factors(const SampledSpectrum& reflectance, const BandResponseSet& bands);

/// Divides every value by the factor of its band.
MosaicFrame apply_reflectivity_correction(const MosaicFrame& composite, const std::vector<double>& rho);
Hypercube apply_reflectivity_correction(const Hypercube& composite, const std::vector<double>& rho);

// All fits use only pixels selected by the mask.

WhiteReferenceModel fit_nonparametric(const Hypercube& W, const PixelMask& mask);
WhiteReferenceModel fit_nonparametric(const Hypercube& W, const ContentMask& mask);

WhiteReferenceModel fit_gaussian_joint(const Hypercube& W, const PixelMask& mask,
                                       std::optional<GaussianVignetting> init = std::nullopt);
WhiteReferenceModel fit_gaussian_joint(const Hypercube& W, const ContentMask& mask,
                                       std::optional<GaussianVignetting> init = std::nullopt);

WhiteReferenceModel fit_gaussian_sequential(const Hypercube& W, const PixelMask& mask);
WhiteReferenceModel fit_gaussian_sequential(const Hypercube& W, const ContentMask& mask);

WhiteReferenceModel fit_model(FitMethod method, const Hypercube& W, const PixelMask& mask);

/// Gaussian matched to a positive vignetting-like field by a weighted
/// least-squares fit of its logarithm. Used to seed the Gaussian fits.
GaussianVignetting moment_matched_gaussian(const std::vector<double>& field, int height, int width,
                                           const PixelMask& mask);

/// Classical replacement for a learned content-area detector: Otsu split of
/// the band-mean image, centroid and equal-area radius of the bright set.
/// Throws DetectionError when the bright set covers less than 1% of the image.
ContentMask detect_content_circle(const Hypercube& cube, double shrink_factor = 0.9);
ContentMask detect_content_circle(const MosaicFrame& frame, double shrink_factor = 0.9);

/// M * S(n) * V(i, j) inside the mask, 0 outside. Without a mask every pixel is rendered.
Hypercube render_reference(const WhiteReferenceModel& model, int height, int width,
                           const std::optional<ContentMask>& mask = std::nullopt);

/// CSV sidecar. Non-parametric vignetting is written to `<stem>.vignetting.hsic`
/// next to the CSV and referenced by relative path.
void save_model(const std::filesystem::path& path, const WhiteReferenceModel& model,
                const std::optional<ContentMask>& mask = std::nullopt);

struct StoredModel {
    WhiteReferenceModel model;
    std::optional<ContentMask> mask;
};
StoredModel load_model(const std::filesystem::path& path);

}  // namespace hsical
