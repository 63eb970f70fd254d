#pragma once

#include <span>
#include <vector>

namespace hsical {

/// Otsu's threshold over a `bins`-bin histogram spanning [min, max]. The
/// result is the bin edge that maximizes the between-class variance; values
/// strictly below it form the lower class. Throws DegenerateInput when all
/// values are equal.
double otsu_threshold(std::span<const double> values, int bins = 256);

struct OtsuResult {
    double threshold;
    /// Between-class variance over total variance, in [0, 1].
    double separability;
};
OtsuResult otsu(std::span<const double> values, int bins = 256);

/// Precomputed Savitzky-Golay smoother. Interior samples use the centered
/// window; the first and last `window / 2` samples evaluate the polynomial
/// fitted to the first (last) full window.
class SavgolFilter {
public:
    SavgolFilter(int window, int order);

    int window() const noexcept { return window_; }
    int order() const noexcept { return order_; }

    /// Throws InvalidArgument when the input is shorter than the window.
    void apply(std::span<const double> in, std::span<double> out) const;
    std::vector<double> operator()(std::span<const double> in) const;

private:
    int window_;
    int order_;
    // coeffs_[s * window_ + k]: weight of window sample k when evaluating at position s.
    std::vector<double> coeffs_;
};

std::vector<double> savgol_filter(std::span<const double> values, int window, int order);

/// Central differences in the interior, one-sided differences at both ends.
void gradient(std::span<const double> in, std::span<double> out);

/// Topographic prominence of the sample at `peak`. Among equal heights the
/// earlier sample counts as the higher one.
double peak_prominence(std::span<const double> values, int peak);

/// Strict local maxima (plateaus report their left edge), excluding the two
/// end samples, with height >= min_height and prominence >= min_prominence.
std::vector<int> find_peaks(std::span<const double> values, double min_height, double min_prominence);

}  // namespace hsical
