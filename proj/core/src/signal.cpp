#include "hsical/signal.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "hsical/error.hpp"

namespace hsical {

OtsuResult otsu(std::span<const double> values, int bins) {
    if (bins < 2) throw InvalidArgument("Otsu needs at least two bins");
    if (values.empty()) throw DegenerateInput("Otsu threshold of an empty sequence");
    auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *mn_it, hi = *mx_it;
    if (!(hi > lo)) throw DegenerateInput("Otsu threshold of a constant sequence");

    const double width = (hi - lo) / bins;
    std::vector<double> count(bins, 0.0), sum(bins, 0.0);
    for (double v : values) {
        int b = static_cast<int>((v - lo) / width);
        b = std::clamp(b, 0, bins - 1);
        count[b] += 1.0;
        sum[b] += v;
    }
    const double total_n = static_cast<double>(values.size());
    double total_s = 0.0;
    for (double s : sum) total_s += s;

    double best = -1.0;
    int best_k = 1;
    double n0 = 0.0, s0 = 0.0;
    for (int k = 1; k < bins; ++k) {
        n0 += count[k - 1];
        s0 += sum[k - 1];
        const double n1 = total_n - n0;
        if (n0 == 0.0 || n1 == 0.0) continue;
        const double d = s0 / n0 - (total_s - s0) / n1;
        const double between = n0 * n1 * d * d;
        if (between > best) {
            best = between;
            best_k = k;
        }
    }
    double mean = total_s / total_n, var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    // n0 * n1 * d^2 / n^2 is the between-class variance; var / n the total.
    const double separability = var > 0.0 ? std::min(1.0, best / total_n / var) : 0.0;
    return {lo + best_k * width, separability};
}

double otsu_threshold(std::span<const double> values, int bins) { return otsu(values, bins).threshold; }

SavgolFilter::SavgolFilter(int window, int order) : window_(window), order_(order) {
    if (window < 1 || window % 2 == 0) throw InvalidArgument("Savitzky-Golay window must be odd and positive");
    if (order < 0 || order >= window) throw InvalidArgument("Savitzky-Golay order must be below the window size");
    const int half = window / 2;
    Eigen::MatrixXd A(window, order + 1);
    for (int k = 0; k < window; ++k) {
        double x = 1.0;
        for (int p = 0; p <= order; ++p) {
            A(k, p) = x;
            x *= (k - half);
        }
    }
    // Least-squares pseudo-inverse: maps window samples to polynomial coefficients.
    const Eigen::MatrixXd pinv = A.householderQr().solve(Eigen::MatrixXd::Identity(window, window));
    coeffs_.resize(static_cast<std::size_t>(window) * window);
    for (int s = 0; s < window; ++s) {
        Eigen::RowVectorXd e(order + 1);
        double x = 1.0;
        for (int p = 0; p <= order; ++p) {
            e(p) = x;
            x *= (s - half);
        }
        const Eigen::RowVectorXd c = e * pinv;
        for (int k = 0; k < window; ++k) coeffs_[static_cast<std::size_t>(s) * window + k] = c(k);
    }
}

void SavgolFilter::apply(std::span<const double> in, std::span<double> out) const {
    const int T = static_cast<int>(in.size());
    if (T < window_)
        throw InvalidArgument("input of length " + std::to_string(T) + " is shorter than the smoothing window " +
                              std::to_string(window_));
    const int half = window_ / 2;
    auto eval = [&](int start, int s) {
        const double* c = coeffs_.data() + static_cast<std::size_t>(s) * window_;
        double acc = 0.0;
        for (int k = 0; k < window_; ++k) acc += c[k] * in[start + k];
        return acc;
    };
    for (int t = 0; t < half; ++t) out[t] = eval(0, t);
    for (int t = half; t < T - half; ++t) out[t] = eval(t - half, half);
    for (int t = std::max(half, T - half); t < T; ++t) out[t] = eval(T - window_, t - (T - window_));
}

std::vector<double> SavgolFilter::operator()(std::span<const double> in) const {
    std::vector<double> out(in.size());
    apply(in, out);
    return out;
}

std::vector<double> savgol_filter(std::span<const double> values, int window, int order) {
    return SavgolFilter(window, order)(values);
}

void gradient(std::span<const double> in, std::span<double> out) {
    const std::size_t T = in.size();
    if (T == 0) return;
    if (T == 1) {
        out[0] = 0.0;
        return;
    }
    out[0] = in[1] - in[0];
    out[T - 1] = in[T - 1] - in[T - 2];
    for (std::size_t t = 1; t + 1 < T; ++t) out[t] = 0.5 * (in[t + 1] - in[t - 1]);
}

double peak_prominence(std::span<const double> values, int peak) {
    const double h = values[peak];
    const int T = static_cast<int>(values.size());
    // Walk left until a sample at least as high (earlier samples win ties).
    double left_min = h;
    for (int t = peak - 1; t >= 0; --t) {
        if (values[t] >= h) break;
        left_min = std::min(left_min, values[t]);
    }
    double right_min = h;
    for (int t = peak + 1; t < T; ++t) {
        if (values[t] > h) break;
        right_min = std::min(right_min, values[t]);
    }
    return h - std::max(left_min, right_min);
}

std::vector<int> find_peaks(std::span<const double> values, double min_height, double min_prominence) {
    std::vector<int> peaks;
    const int T = static_cast<int>(values.size());
    int t = 1;
    while (t < T - 1) {
        if (values[t - 1] < values[t]) {
            int e = t;
            while (e + 1 < T - 1 && values[e + 1] == values[t]) ++e;
            if (values[e + 1] < values[t]) {
                if (values[t] >= min_height && peak_prominence(values, t) >= min_prominence) peaks.push_back(t);
            }
            t = e + 1;
        } else {
            ++t;
        }
    }
    return peaks;
}

}  // namespace hsical
