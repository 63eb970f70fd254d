#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "hsical/mosaic.hpp"
#include "hsical/refmodel.hpp"
#include "hsical/types.hpp"

namespace hsical {

struct CubeBalance {
    Hypercube cube;
    /// Quantitative: pixels with a non-positive denominator in some band.
    /// Relative: pixels whose spectrum was entirely zero.
    std::size_t flagged = 0;
};

/// R = rho * (I - (tI/tD) D) / ((tI/tW) W - (tI/tD) D), pointwise. Entries with a
/// non-positive denominator become 0. When a mask is given, pixels outside it
/// are set to 0 and excluded from the bad-denominator count. Throws
/// CalibrationError when more than 1% of the considered pixels are flagged.
CubeBalance white_balance_cube(const Hypercube& I, const Hypercube& W, const Hypercube& D,
                               const ReflectivityFactors& rho, const Exposures& exposures,
                               const PixelMask* mask = nullptr);

/// Balancing against a rendered synthetic reference with rho = 1. Without a
/// dark cube, zero dark current is assumed.
CubeBalance balance_with_synthetic(const Hypercube& I, const WhiteReferenceModel& model,
                                   const std::optional<Hypercube>& D, const Exposures& exposures,
                                   const std::optional<ContentMask>& mask = std::nullopt);

/// Divides each (dark-corrected) spectrum by S and rescales it to mean
/// absolute value 1. Zero spectra stay zero and are counted.
CubeBalance balance_relative(const Hypercube& I, const std::vector<double>& S,
                             const std::optional<Hypercube>& D = std::nullopt, double dark_ratio = 1.0);

/// Band means over a disk of the given radius, divided by rho and scaled to mean 1.
std::vector<double> sensitivities_from_roi(const Hypercube& image, double center_i, double center_j,
                                           double radius, const ReflectivityFactors& rho);

}  // namespace hsical
