#pragma once

#include <limits>
#include <vector>

#include "hsical/types.hpp"

namespace hsical {

struct CompositeParams {
    /// Fraction of full scale above which samples are treated as specular.
    double saturation_fraction = 0.98;
    int savgol_window = 15;
    int savgol_order = 2;
    /// Peak height and prominence thresholds, as fractions of max |gradient|.
    double peak_min_height_frac = 0.5;
    double peak_min_prominence_frac = 0.25;
    /// Frames trimmed from each end of a detected region.
    int region_margin = 1;
    int otsu_bins = 256;
    /// Minimum Otsu effectiveness (between-class / total variance) for a
    /// profile to count as containing the reference at all.
    double min_separability = 0.8;
    /// Abort when more than this fraction of pixels never sees the reference.
    double max_invalid_fraction = 0.4;

    void validate() const;
};

struct FrameRegion {
    int start = 0;
    int end = 0;  // inclusive
    bool operator==(const FrameRegion&) const = default;
};

/// Temporal intensity profile of one mosaic site and the frame intervals in
/// which the reference object covers it.
struct TemporalProfile {
    std::vector<double> values;
    std::vector<double> preprocessed;
    std::vector<FrameRegion> regions;
    /// Otsu level separating background from reference; +inf when the profile
    /// has no usable contrast.
    double threshold = std::numeric_limits<double>::infinity();
};

/// Thresholds (Otsu over the unsaturated samples), clamps, smooths and
/// differentiates the profile, then pairs rising-gradient peaks (entries) with
/// the following falling-gradient peaks (exits). Each pair selects the run of
/// above-threshold raw samples it brackets; the run is shrunk by
/// `region_margin` unless that would leave nothing.
TemporalProfile segment_reference_regions(std::vector<double> values, const CompositeParams& params, int bit_depth);

/// Median of the raw above-threshold samples inside the profile's regions,
/// or NaN when there are none.
double region_median(const TemporalProfile& profile);

struct CompositeResult {
    MosaicFrame composite;
    PixelMask valid;
    std::size_t invalid_count = 0;
    double coverage = 0.0;
};

/// Builds the initial composite white reference from a sweep video, one
/// mosaic site at a time. Sites that never see the reference are 0 and
/// marked invalid. Throws CoverageError above `max_invalid_fraction`.
CompositeResult build_composite(const MosaicVideo& video, const CompositeParams& params);

}  // namespace hsical
