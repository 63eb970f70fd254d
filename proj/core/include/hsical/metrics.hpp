#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hsical/colorsci.hpp"
#include "hsical/io.hpp"
#include "hsical/types.hpp"

namespace hsical {

/// sqrt(mean((s - r)^2)) / sqrt(mean(r^2)).
double nrmse(std::span<const double> s, std::span<const double> r);

/// Spectra scaled to mean absolute value 1 before comparison.
double relative_nrmse(std::span<const double> s, std::span<const double> r);

struct MedapeResult {
    double value = 0.0;
    /// Reference entries equal to zero, left out of the median.
    std::size_t excluded = 0;
};

/// Median of |(u - ref) / ref| as a fraction.
MedapeResult medape(std::span<const double> u, std::span<const double> ref);

/// Median with the mean of the two middle elements for even counts. Reorders the input.
double median_inplace(std::vector<double>& values);

struct RoiStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::size_t pixels = 0;
};

/// Pixels within `radius` of any center.
std::vector<std::size_t> roi_pixels(int height, int width, std::span<const std::pair<int, int>> centers, double radius);

/// Per-band mean and population standard deviation over the union of disks.
RoiStats sample_tile_rois(const Hypercube& cube, std::span<const std::pair<int, int>> centers, double radius = 30.0);

struct Summary {
    double min = 0.0, median = 0.0, max = 0.0;
};

struct ReferenceComparison {
    double medape_pixelwise = 0.0;
    double medape_sensitivities = 0.0;
    Summary nrmse_per_pixel;
    std::size_t pixels = 0;
    std::size_t excluded = 0;
};

/// Synthetic against measured white reference inside the content area.
/// Sensitivities of both are taken from non-parametric fits over the same area.
ReferenceComparison compare_references(const Hypercube& synthetic, const Hypercube& measured, const ContentMask& mask);

struct TileReport {
    std::string tile_id;
    double nrmse_quant = 0.0;
    double nrmse_relative = 0.0;
    double delta_e_median = 0.0;
    std::vector<double> mean_spectrum;
    std::vector<double> reference_spectrum;
};

struct EvaluationReport {
    std::vector<TileReport> tiles;
    double mean_nrmse_quant = 0.0;
    double mean_nrmse_relative = 0.0;
    double mean_delta_e = 0.0;
    /// Same means restricted to a caller-selected subset of tiles.
    std::optional<double> subset_nrmse_quant, subset_nrmse_relative, subset_delta_e;
};

EvaluationReport evaluate_tiles(const Hypercube& cube, const std::vector<TileRoi>& layout,
                                const std::map<std::string, SampledSpectrum>& reference_spectra,
                                const std::map<std::string, LabReference>& reference_lab, const ColorMatrix& T,
                                double roi_radius = 30.0, const std::vector<std::string>& subset = {});

}  // namespace hsical
