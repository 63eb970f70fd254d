#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hsical/io.hpp"
#include "hsical/refmodel.hpp"
#include "hsical/types.hpp"

namespace hsical {

/// N Gaussian responses with evenly spaced peaks, sampled every `step_nm`
/// and truncated at three standard deviations.
BandResponseSet gaussian_band_responses(int bands, double first_peak_nm, double last_peak_nm, double fwhm_nm,
                                        double step_nm = 1.0);

/// Planck emission sampled every `step_nm` over [lo, hi], scaled to peak 1.
SampledSpectrum blackbody_spectrum(double kelvin, double lo_nm, double hi_nm, double step_nm = 5.0);

struct NoiseModel {
    enum class Kind { none, gaussian, poisson };
    Kind kind = Kind::gaussian;
    /// Gaussian: standard deviation as a fraction of the noise-free signal.
    double sigma_frac = 0.01;
    /// Poisson-like: variance = gain * signal (counts^2).
    double gain = 1.0;
};

enum class SweepAxis { rows, cols };

struct RulerSpec {
    SampledSpectrum reflectance = SampledSpectrum::constant(300.0, 1100.0, 0.9);
    /// Extent along the motion, in pixels.
    int width_px = 64;
    /// Extent across the motion; 0 spans the whole frame.
    int length_px = 0;
    /// First pixel across the motion when length_px is set.
    int offset_px = 0;
    double speed = 8.0;
    SweepAxis axis = SweepAxis::rows;
    /// Background-only frames before the ruler enters and after it leaves.
    int lead_frames = 4;
    /// 0 chooses enough frames for the ruler to cross the frame completely.
    int frame_count = 0;
    /// Probability that a ruler sample is replaced by a saturated specular value.
    double specular_probability = 0.0;
};

struct SimScenario {
    int height = 64;
    int width = 64;
    MosaicLayout layout = MosaicLayout::sequential(4, 4);
    SampledSpectrum light_spectrum = SampledSpectrum::constant(300.0, 1100.0, 1.0);
    BandResponseSet band_responses = gaussian_band_responses(16, 460.0, 620.0, 15.0);
    GaussianVignetting vignetting{32.0, 32.0, 40.0};
    double M = 600.0;
    NoiseModel noise;
    RulerSpec ruler;
    SampledSpectrum background_reflectance = SampledSpectrum::constant(300.0, 1100.0, 0.1);
    std::uint64_t seed = 0;
    double exposure_ms = 10.0;
    int bit_depth = 10;
    /// Scope content area; outside it no light reaches the sensor.
    std::optional<ContentMask> content;

    int bands() const noexcept { return layout.band_count(); }
    void validate() const;
};

/// Band-averaged light spectrum renormalized to mean 1.
std::vector<double> true_sensitivities(const SimScenario& sc);

/// Ground-truth separable model of the scenario's white reference.
WhiteReferenceModel true_reference_model(const SimScenario& sc);

struct SimulatedReference {
    Hypercube cube;
    WhiteReferenceModel truth;
};

SimulatedReference simulate_white_reference(const SimScenario& sc);

struct SimulatedSweep {
    MosaicVideo video;
    /// Noise-free ruler radiance at every mosaic site.
    MosaicFrame truth;
    /// Sites the ruler covers in at least one frame.
    PixelMask covered;
    double coverage = 0.0;
    /// The frame budget ended before the ruler crossed the whole frame.
    bool incomplete = false;
};

SimulatedSweep simulate_ruler_sweep(const SimScenario& sc);

struct CheckerboardLayout {
    int rows = 2;
    int cols = 3;
    /// 0 picks min(30, quarter tile - 1).
    double roi_radius = 0.0;
};

/// Six tiles with flat, sloped and peaked reflectance over 300-1100 nm.
std::map<std::string, SampledSpectrum> default_tiles();

struct SimulatedCheckerboard {
    Hypercube cube;
    /// Tile id per pixel index into `tile_ids`, -1 outside any tile.
    std::vector<int> tile_of_pixel;
    std::vector<std::string> tile_ids;
    /// Band-averaged reflectance per tile.
    std::map<std::string, std::vector<double>> reflectance;
    std::vector<TileRoi> layout;
    double roi_radius = 0.0;
};

/// Tiles fill a rows x cols grid in map order. Each tile gets five ROI
/// centres: its middle and four points a quarter tile away.
SimulatedCheckerboard simulate_checkerboard(const SimScenario& sc, const std::map<std::string, SampledSpectrum>& tiles,
                                            const CheckerboardLayout& grid);

struct ScenarioFile {
    SimScenario scenario;
    std::map<std::string, SampledSpectrum> tiles;
    CheckerboardLayout grid;
};

/// JSON scenario. Relative file references resolve against the file's directory.
ScenarioFile load_scenario(const std::filesystem::path& path);

// Counter-based noise so the output never depends on evaluation order.
double standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t frame, std::uint64_t pixel) noexcept;
double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t frame, std::uint64_t pixel) noexcept;

double apply_noise(const NoiseModel& noise, double value, std::uint64_t seed, std::uint64_t stream,
                   std::uint64_t frame, std::uint64_t pixel) noexcept;

}  // namespace hsical
