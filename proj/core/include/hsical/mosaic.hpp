#pragma once

#include <cstddef>
#include <vector>

#include "hsical/types.hpp"

namespace hsical {

/// N x N linear map applied to the spectrum at every pixel. Stored row-major.
class CrosstalkMatrix {
public:
    CrosstalkMatrix(int size, std::vector<double> rows);
    static CrosstalkMatrix identity(int size);
    static CrosstalkMatrix from_rows(const std::vector<std::vector<double>>& rows);

    int size() const noexcept { return size_; }
    double operator()(int r, int c) const noexcept { return m_[static_cast<std::size_t>(r) * size_ + c]; }

private:
    int size_;
    std::vector<double> m_;
};

/// Exposure times (ms) of the image, white and dark acquisitions.
struct Exposures {
    double image = 1.0;
    double white = 1.0;
    double dark = 1.0;
};

/// frame - (tau_frame / tau_dark) * dark, clamped at zero.
MosaicFrame dark_exposure_correct(const MosaicFrame& frame, const MosaicFrame& dark);

struct MosaicBalance {
    MosaicFrame reflectance;
    std::size_t bad_pixels = 0;
};

/// White balancing on raw mosaics before demosaicing, with the per-band
/// factor looked up through the band layout. Exposures come from the frames.
/// Pixels whose exposure-scaled (white - dark) is not positive become 0 and are
/// counted; more than 1% of them raises CalibrationError.
MosaicBalance white_balance_mosaic(const MosaicFrame& image, const MosaicFrame& white, const MosaicFrame& dark,
                                   const ReflectivityFactors& rho);

/// Bilinear demosaicing. Each band is interpolated from its own native
/// lattice; values at native sites are copied exactly and positions outside
/// the lattice hull clamp to the nearest native row/column.
Hypercube demosaic_bilinear(const MosaicFrame& frame, std::vector<double> band_centers = {});

/// Propagates per-site validity through the demosaicing stencil: an output
/// pixel is valid when every native site it draws on (with nonzero weight) is.
PixelMask demosaic_validity(const PixelMask& sites, const MosaicLayout& layout);

/// Pixels whose stencil needs no border clamping in any band.
PixelMask demosaic_interior(int height, int width, const MosaicLayout& layout);

Hypercube crosstalk_correct(const Hypercube& cube, const CrosstalkMatrix& matrix);

}  // namespace hsical
