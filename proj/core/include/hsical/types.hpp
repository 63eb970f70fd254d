#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace hsical {

/// Periodic filter pattern of a snapshot mosaic sensor. `bands` is stored
/// row-major over the pattern and must be a bijection onto {0..N-1}.
class MosaicLayout {
public:
    MosaicLayout(int rows, int cols, std::vector<int> bands);

    /// Identity layout: band index = row * cols + col.
    static MosaicLayout sequential(int rows, int cols);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    int band_count() const noexcept { return rows_ * cols_; }
    const std::vector<int>& bands() const noexcept { return bands_; }

    int band_at(int y, int x) const noexcept { return bands_[(y % rows_) * cols_ + (x % cols_)]; }

    /// Pattern cell (row, col) holding band n.
    std::pair<int, int> site_of(int band) const noexcept { return sites_[band]; }

    bool operator==(const MosaicLayout& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_ && bands_ == other.bands_;
    }

private:
    int rows_;
    int cols_;
    std::vector<int> bands_;
    std::vector<std::pair<int, int>> sites_;
};

/// Raw 2D sensor frame. Counts are held as floats from ingestion on;
/// `bit_depth` is kept for saturation handling.
class MosaicFrame {
public:
    MosaicFrame(int height, int width, MosaicLayout layout, std::vector<float> data,
                double exposure_ms, int bit_depth);

    static MosaicFrame filled(int height, int width, MosaicLayout layout, float value,
                              double exposure_ms, int bit_depth);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    const MosaicLayout& layout() const noexcept { return layout_; }
    double exposure_ms() const noexcept { return exposure_ms_; }
    int bit_depth() const noexcept { return bit_depth_; }
    double full_scale() const noexcept { return static_cast<double>((1u << bit_depth_) - 1u); }

    float at(int y, int x) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    float& at(int y, int x) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    bool same_geometry(const MosaicFrame& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && layout_ == other.layout_;
    }

    /// Throws InvalidArgument if any value is outside [0, 2^bit_depth - 1].
    void validate_counts() const;

private:
    int height_;
    int width_;
    MosaicLayout layout_;
    std::vector<float> data_;
    double exposure_ms_;
    int bit_depth_;
};

/// Sequence of frames sharing geometry, layout and exposure. Frames are stored
/// contiguously as [t][y][x].
class MosaicVideo {
public:
    MosaicVideo(int height, int width, MosaicLayout layout, double exposure_ms, int bit_depth,
                int frame_count, std::vector<float> data);
    MosaicVideo(int height, int width, MosaicLayout layout, double exposure_ms, int bit_depth,
                int frame_count);

    static MosaicVideo from_frames(const std::vector<MosaicFrame>& frames);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int frame_count() const noexcept { return frame_count_; }
    const MosaicLayout& layout() const noexcept { return layout_; }
    double exposure_ms() const noexcept { return exposure_ms_; }
    int bit_depth() const noexcept { return bit_depth_; }
    std::size_t frame_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }

    std::span<const float> frame_data(int t) const noexcept {
        return std::span<const float>(data_).subspan(t * frame_size(), frame_size());
    }
    std::span<float> frame_data(int t) noexcept {
        return std::span<float>(data_).subspan(t * frame_size(), frame_size());
    }
    std::span<const float> data() const noexcept { return data_; }

    MosaicFrame frame(int t) const;

private:
    int height_;
    int width_;
    MosaicLayout layout_;
    double exposure_ms_;
    int bit_depth_;
    int frame_count_;
    std::vector<float> data_;
};

enum class CubeKind : std::uint8_t { intensity = 0, reflectance = 1, relative = 2 };

/// H x W x N data indexed (i, j, n), stored row-major with the band index fastest.
class Hypercube {
public:
    Hypercube(int height, int width, int bands, CubeKind kind = CubeKind::intensity,
              std::vector<double> band_centers = {});
    Hypercube(int height, int width, int bands, CubeKind kind, std::vector<double> band_centers,
              std::vector<double> data);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int bands() const noexcept { return bands_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }
    CubeKind kind() const noexcept { return kind_; }
    void set_kind(CubeKind kind) noexcept { kind_ = kind; }
    const std::vector<double>& band_centers() const noexcept { return band_centers_; }
    void set_band_centers(std::vector<double> centers);

    std::size_t index(int i, int j, int n) const noexcept {
        return (static_cast<std::size_t>(i) * width_ + j) * bands_ + n;
    }
    double at(int i, int j, int n) const noexcept { return data_[index(i, j, n)]; }
    double& at(int i, int j, int n) noexcept { return data_[index(i, j, n)]; }

    std::span<const double> spectrum(int i, int j) const noexcept {
        return std::span<const double>(data_).subspan(index(i, j, 0), bands_);
    }
    std::span<double> spectrum(int i, int j) noexcept {
        return std::span<double>(data_).subspan(index(i, j, 0), bands_);
    }
    std::span<const double> spectrum(std::size_t pixel) const noexcept {
        return std::span<const double>(data_).subspan(pixel * bands_, bands_);
    }
    std::span<double> spectrum(std::size_t pixel) noexcept {
        return std::span<double>(data_).subspan(pixel * bands_, bands_);
    }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    bool same_shape(const Hypercube& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && bands_ == other.bands_;
    }

    /// Number of non-finite or negative entries; values above one are counted separately.
    struct ReflectanceCheck {
        std::size_t invalid = 0;
        std::size_t above_one = 0;
    };
    ReflectanceCheck check_reflectance() const noexcept;

private:
    int height_;
    int width_;
    int bands_;
    CubeKind kind_;
    std::vector<double> band_centers_;
    std::vector<double> data_;
};

/// Wavelength-sampled curve with strictly increasing wavelengths (nm).
class SampledSpectrum {
public:
    SampledSpectrum(std::vector<double> wavelengths, std::vector<double> values);

    static SampledSpectrum constant(double lo, double hi, double value);

    std::size_t size() const noexcept { return wavelengths_.size(); }
    const std::vector<double>& wavelengths() const noexcept { return wavelengths_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double min_wavelength() const noexcept { return wavelengths_.front(); }
    double max_wavelength() const noexcept { return wavelengths_.back(); }

    /// Linear interpolation; zero outside the sampled range.
    double value_at(double wavelength) const noexcept;

    /// Interval outside which the linear interpolant is identically zero.
    std::pair<double, double> support() const noexcept;

    bool covers(double lo, double hi) const noexcept {
        return wavelengths_.front() <= lo && wavelengths_.back() >= hi;
    }

private:
    std::vector<double> wavelengths_;
    std::vector<double> values_;
};

/// Per-band sensor responses b_n(lambda).
class BandResponseSet {
public:
    explicit BandResponseSet(std::vector<SampledSpectrum> responses);

    int size() const noexcept { return static_cast<int>(responses_.size()); }
    const SampledSpectrum& operator[](int n) const noexcept { return responses_[n]; }
    const std::vector<SampledSpectrum>& responses() const noexcept { return responses_; }

    /// Midpoint of each response's support.
    std::vector<double> centers() const;

private:
    std::vector<SampledSpectrum> responses_;
};

/// Per-band reflectivity of a reference object; every factor lies in (0, 1].
class ReflectivityFactors {
public:
    explicit ReflectivityFactors(std::vector<double> rho);
    static ReflectivityFactors uniform(int bands, double rho);

    int size() const noexcept { return static_cast<int>(rho_.size()); }
    double operator[](int n) const noexcept { return rho_[n]; }
    const std::vector<double>& values() const noexcept { return rho_; }

private:
    std::vector<double> rho_;
};

/// Circular content area produced by imaging through a scope. Coordinates in
/// pixels; `cx` is the column, `cy` the row.
struct ContentMask {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 1.0;
    double shrink_factor = 0.9;
    bool full_frame = false;

    ContentMask() = default;
    ContentMask(double cx_, double cy_, double radius_, double shrink = 0.9);

    double effective_radius() const noexcept { return radius * shrink_factor; }
    bool contains(int i, int j) const noexcept {
        const double di = i - cy;
        const double dj = j - cx;
        const double r = effective_radius();
        return di * di + dj * dj <= r * r;
    }
};

/// Per-pixel boolean selection over an H x W grid.
class PixelMask {
public:
    PixelMask(int height, int width, bool value = true);
    static PixelMask from_content(int height, int width, const ContentMask& mask);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    bool operator()(int i, int j) const noexcept {
        return bits_[static_cast<std::size_t>(i) * width_ + j] != 0;
    }
    bool operator[](std::size_t pixel) const noexcept { return bits_[pixel] != 0; }
    void set(int i, int j, bool v) noexcept { bits_[static_cast<std::size_t>(i) * width_ + j] = v ? 1 : 0; }
    void set(std::size_t pixel, bool v) noexcept { bits_[pixel] = v ? 1 : 0; }
    std::size_t count() const noexcept;

    PixelMask& operator&=(const PixelMask& other);

private:
    int height_;
    int width_;
    std::vector<std::uint8_t> bits_;
};

}  // namespace hsical
