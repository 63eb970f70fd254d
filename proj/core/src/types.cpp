#include "hsical/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsical/error.hpp"

namespace hsical {

MosaicLayout::MosaicLayout(int rows, int cols, std::vector<int> bands)
    : rows_(rows), cols_(cols), bands_(std::move(bands)) {
    if (rows <= 0 || cols <= 0) throw InvalidArgument("mosaic pattern dimensions must be positive");
    const int n = rows * cols;
    if (static_cast<int>(bands_.size()) != n)
        throw InvalidArgument("band layout has " + std::to_string(bands_.size()) + " entries, expected " +
                              std::to_string(n));
    sites_.assign(n, {-1, -1});
    for (int k = 0; k < n; ++k) {
        const int b = bands_[k];
        if (b < 0 || b >= n) throw InvalidArgument("band index " + std::to_string(b) + " out of range");
        if (sites_[b].first >= 0) throw InvalidArgument("duplicate band index " + std::to_string(b) + " in layout");
        sites_[b] = {k / cols, k % cols};
    }
}

MosaicLayout MosaicLayout::sequential(int rows, int cols) {
    std::vector<int> bands(static_cast<std::size_t>(rows) * cols);
    for (std::size_t k = 0; k < bands.size(); ++k) bands[k] = static_cast<int>(k);
    return MosaicLayout(rows, cols, std::move(bands));
}

MosaicFrame::MosaicFrame(int height, int width, MosaicLayout layout, std::vector<float> data,
                         double exposure_ms, int bit_depth)
    : height_(height),
      width_(width),
      layout_(std::move(layout)),
      data_(std::move(data)),
      exposure_ms_(exposure_ms),
      bit_depth_(bit_depth) {
    if (height <= 0 || width <= 0) throw InvalidArgument("frame dimensions must be positive");
    if (height % layout_.rows() != 0 || width % layout_.cols() != 0)
        throw InvalidArgument("frame dimensions must be multiples of the mosaic pattern");
    if (data_.size() != static_cast<std::size_t>(height) * width)
        throw InvalidArgument("frame data size does not match dimensions");
    if (bit_depth < 1 || bit_depth > 31) throw InvalidArgument("bit depth out of range");
}

MosaicFrame MosaicFrame::filled(int height, int width, MosaicLayout layout, float value, double exposure_ms,
                                int bit_depth) {
    std::vector<float> data(static_cast<std::size_t>(height) * width, value);
    return MosaicFrame(height, width, std::move(layout), std::move(data), exposure_ms, bit_depth);
}

void MosaicFrame::validate_counts() const {
    const double hi = full_scale();
    for (std::size_t k = 0; k < data_.size(); ++k) {
        const float v = data_[k];
        if (!(v >= 0.0f && v <= hi))
            throw InvalidArgument("raw count " + std::to_string(v) + " at pixel " + std::to_string(k) +
                                  " outside [0, " + std::to_string(hi) + "]");
    }
}

MosaicVideo::MosaicVideo(int height, int width, MosaicLayout layout, double exposure_ms, int bit_depth,
                         int frame_count, std::vector<float> data)
    : height_(height),
      width_(width),
      layout_(std::move(layout)),
      exposure_ms_(exposure_ms),
      bit_depth_(bit_depth),
      frame_count_(frame_count),
      data_(std::move(data)) {
    if (height <= 0 || width <= 0) throw InvalidArgument("video dimensions must be positive");
    if (height % layout_.rows() != 0 || width % layout_.cols() != 0)
        throw InvalidArgument("video dimensions must be multiples of the mosaic pattern");
    if (frame_count < 1) throw InvalidArgument("video must contain at least one frame");
    if (data_.size() != frame_size() * frame_count) throw InvalidArgument("video data size does not match header");
}

MosaicVideo::MosaicVideo(int height, int width, MosaicLayout layout, double exposure_ms, int bit_depth,
                         int frame_count)
    : MosaicVideo(height, width, std::move(layout), exposure_ms, bit_depth, frame_count,
                  std::vector<float>(static_cast<std::size_t>(height) * width * std::max(frame_count, 0))) {}

MosaicVideo MosaicVideo::from_frames(const std::vector<MosaicFrame>& frames) {
    if (frames.empty()) throw InvalidArgument("video must contain at least one frame");
    const MosaicFrame& first = frames.front();
    std::vector<float> data;
    data.reserve(first.data().size() * frames.size());
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const MosaicFrame& f = frames[t];
        if (!f.same_geometry(first) || f.exposure_ms() != first.exposure_ms() || f.bit_depth() != first.bit_depth())
            throw InvalidArgument("frame " + std::to_string(t) + " differs from frame 0 in geometry or metadata");
        data.insert(data.end(), f.data().begin(), f.data().end());
    }
    return MosaicVideo(first.height(), first.width(), first.layout(), first.exposure_ms(), first.bit_depth(),
                       static_cast<int>(frames.size()), std::move(data));
}

MosaicFrame MosaicVideo::frame(int t) const {
    auto src = frame_data(t);
    return MosaicFrame(height_, width_, layout_, std::vector<float>(src.begin(), src.end()), exposure_ms_,
                       bit_depth_);
}

Hypercube::Hypercube(int height, int width, int bands, CubeKind kind, std::vector<double> band_centers)
    : Hypercube(height, width, bands, kind, std::move(band_centers),
                std::vector<double>(static_cast<std::size_t>(std::max(height, 0)) * std::max(width, 0) *
                                    std::max(bands, 0))) {}

Hypercube::Hypercube(int height, int width, int bands, CubeKind kind, std::vector<double> band_centers,
                     std::vector<double> data)
    : height_(height), width_(width), bands_(bands), kind_(kind), data_(std::move(data)) {
    if (height <= 0 || width <= 0 || bands <= 0) throw InvalidArgument("cube dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(height) * width * bands)
        throw InvalidArgument("cube data size does not match dimensions");
    set_band_centers(std::move(band_centers));
}

void Hypercube::set_band_centers(std::vector<double> centers) {
    if (centers.empty()) centers.assign(bands_, 0.0);
    if (static_cast<int>(centers.size()) != bands_) throw InvalidArgument("band center count does not match bands");
    band_centers_ = std::move(centers);
}

Hypercube::ReflectanceCheck Hypercube::check_reflectance() const noexcept {
    ReflectanceCheck c;
    for (double v : data_) {
        if (!std::isfinite(v) || v < 0.0)
            ++c.invalid;
        else if (v > 1.0)
            ++c.above_one;
    }
    return c;
}

SampledSpectrum::SampledSpectrum(std::vector<double> wavelengths, std::vector<double> values)
    : wavelengths_(std::move(wavelengths)), values_(std::move(values)) {
    if (wavelengths_.size() != values_.size()) throw InvalidArgument("spectrum wavelength/value count mismatch");
    if (wavelengths_.size() < 2) throw InvalidArgument("spectrum needs at least two samples");
    for (std::size_t k = 1; k < wavelengths_.size(); ++k)
        if (!(wavelengths_[k] > wavelengths_[k - 1]))
            throw InvalidArgument("spectrum wavelengths must be strictly increasing");
}

SampledSpectrum SampledSpectrum::constant(double lo, double hi, double value) {
    return SampledSpectrum({lo, hi}, {value, value});
}

double SampledSpectrum::value_at(double wavelength) const noexcept {
    if (wavelength < wavelengths_.front() || wavelength > wavelengths_.back()) return 0.0;
    auto it = std::upper_bound(wavelengths_.begin(), wavelengths_.end(), wavelength);
    if (it == wavelengths_.end()) return values_.back();
    const std::size_t k = static_cast<std::size_t>(it - wavelengths_.begin());
    const double w0 = wavelengths_[k - 1], w1 = wavelengths_[k];
    const double f = (wavelength - w0) / (w1 - w0);
    return values_[k - 1] + f * (values_[k] - values_[k - 1]);
}

std::pair<double, double> SampledSpectrum::support() const noexcept {
    std::size_t first = values_.size(), last = 0;
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (values_[k] != 0.0) {
            if (first == values_.size()) first = k;
            last = k;
        }
    }
    if (first == values_.size()) return {wavelengths_.front(), wavelengths_.front()};
    const std::size_t lo = first > 0 ? first - 1 : 0;
    const std::size_t hi = std::min(last + 1, values_.size() - 1);
    return {wavelengths_[lo], wavelengths_[hi]};
}

BandResponseSet::BandResponseSet(std::vector<SampledSpectrum> responses) : responses_(std::move(responses)) {
    if (responses_.empty()) throw InvalidArgument("band response set is empty");
    for (std::size_t n = 0; n < responses_.size(); ++n) {
        const auto& r = responses_[n];
        double area = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (r.values()[k] < 0.0) throw InvalidArgument("band " + std::to_string(n) + " response is negative");
            if (k > 0)
                area += 0.5 * (r.values()[k] + r.values()[k - 1]) * (r.wavelengths()[k] - r.wavelengths()[k - 1]);
        }
        if (!(area > 0.0)) throw InvalidArgument("band " + std::to_string(n) + " response has zero integral");
    }
}

std::vector<double> BandResponseSet::centers() const {
    std::vector<double> c;
    c.reserve(responses_.size());
    for (const auto& r : responses_) {
        auto [lo, hi] = r.support();
        c.push_back(0.5 * (lo + hi));
    }
    return c;
}

ReflectivityFactors::ReflectivityFactors(std::vector<double> rho) : rho_(std::move(rho)) {
    if (rho_.empty()) throw InvalidArgument("reflectivity factors are empty");
    for (std::size_t n = 0; n < rho_.size(); ++n)
        if (!(rho_[n] > 0.0 && rho_[n] <= 1.0))
            throw InvalidArgument("reflectivity factor for band " + std::to_string(n) + " must lie in (0, 1], got " +
                                  std::to_string(rho_[n]));
}

ReflectivityFactors ReflectivityFactors::uniform(int bands, double rho) {
    return ReflectivityFactors(std::vector<double>(bands, rho));
}

ContentMask::ContentMask(double cx_, double cy_, double radius_, double shrink)
    : cx(cx_), cy(cy_), radius(radius_), shrink_factor(shrink) {
    if (!(radius > 0.0)) throw InvalidArgument("content mask radius must be positive");
    if (!(shrink_factor > 0.0 && shrink_factor <= 1.0)) throw InvalidArgument("shrink factor must lie in (0, 1]");
}

PixelMask::PixelMask(int height, int width, bool value)
    : height_(height), width_(width), bits_(static_cast<std::size_t>(height) * width, value ? 1 : 0) {}

PixelMask PixelMask::from_content(int height, int width, const ContentMask& mask) {
    PixelMask m(height, width, false);
    for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j) m.set(i, j, mask.contains(i, j));
    return m;
}

std::size_t PixelMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

PixelMask& PixelMask::operator&=(const PixelMask& other) {
    if (other.height_ != height_ || other.width_ != width_) throw InvalidArgument("pixel mask shape mismatch");
    for (std::size_t k = 0; k < bits_.size(); ++k) bits_[k] &= other.bits_[k];
    return *this;
}

}  // namespace hsical
