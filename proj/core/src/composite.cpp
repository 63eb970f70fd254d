#include "hsical/composite.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsical/error.hpp"
#include "hsical/parallel.hpp"
#include "hsical/signal.hpp"

namespace hsical {

void CompositeParams::validate() const {
    auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
    if (savgol_window < 1 || savgol_window % 2 == 0) throw InvalidArgument("savgol_window must be odd");
    if (savgol_order < 0 || savgol_order >= savgol_window)
        throw InvalidArgument("savgol_order must be smaller than savgol_window");
    if (!in_unit(saturation_fraction)) throw InvalidArgument("saturation_fraction must lie in (0, 1]");
    if (!in_unit(peak_min_height_frac)) throw InvalidArgument("peak_min_height_frac must lie in (0, 1]");
    if (!in_unit(peak_min_prominence_frac)) throw InvalidArgument("peak_min_prominence_frac must lie in (0, 1]");
    if (!in_unit(max_invalid_fraction)) throw InvalidArgument("max_invalid_fraction must lie in (0, 1]");
    if (!(min_separability >= 0.0 && min_separability <= 1.0))
        throw InvalidArgument("min_separability must lie in [0, 1]");
    if (region_margin < 0) throw InvalidArgument("region_margin must be non-negative");
    if (otsu_bins < 2) throw InvalidArgument("otsu_bins must be at least 2");
}

namespace {

// Per-worker scratch so the per-site pipeline does not allocate.
struct Workspace {
    std::vector<double> smoothed, grad, neg_grad, samples;
};

void segment_into(TemporalProfile& p, const CompositeParams& params, const SavgolFilter& filter, double saturation,
                  Workspace& ws) {
    const auto& raw = p.values;
    const int T = static_cast<int>(raw.size());
    p.regions.clear();
    p.preprocessed.assign(raw.begin(), raw.end());
    p.threshold = std::numeric_limits<double>::infinity();

    ws.samples.clear();
    for (double v : raw)
        if (v <= saturation) ws.samples.push_back(v);
    OtsuResult split;
    try {
        split = otsu(ws.samples, params.otsu_bins);
    } catch (const DegenerateInput&) {
        std::fill(p.preprocessed.begin(), p.preprocessed.end(), 0.0);
        return;
    }
    if (split.separability < params.min_separability) {
        std::fill(p.preprocessed.begin(), p.preprocessed.end(), 0.0);
        return;
    }
    p.threshold = split.threshold;
    const double thr = split.threshold;

    for (auto& v : p.preprocessed) {
        if (v < thr || v > saturation) v = 0.0;
    }

    ws.smoothed.resize(T);
    ws.grad.resize(T);
    ws.neg_grad.resize(T);
    filter.apply(p.preprocessed, ws.smoothed);
    gradient(ws.smoothed, ws.grad);
    double gmax = 0.0;
    for (int t = 0; t < T; ++t) {
        ws.neg_grad[t] = -ws.grad[t];
        gmax = std::max(gmax, std::abs(ws.grad[t]));
    }

    const int margin = params.region_margin;
    // The event pair only selects the above-threshold run; its extent comes
    // from the raw samples. The margin is skipped when it would empty the region.
    auto add_region = [&](int lo, int hi) {
        lo = std::max(lo, 0);
        hi = std::min(hi, T - 1);
        int start = lo;
        while (start <= hi && raw[start] < thr) ++start;
        if (start > hi) return;
        int end = hi;
        while (raw[end] < thr) --end;
        while (start > 0 && raw[start - 1] >= thr) --start;
        while (end < T - 1 && raw[end + 1] >= thr) ++end;
        if (end - start >= 2 * margin) {
            start += margin;
            end -= margin;
        }
        if (!p.regions.empty() && start <= p.regions.back().end + 1)
            p.regions.back().end = std::max(p.regions.back().end, end);
        else
            p.regions.push_back({start, end});
    };

    if (gmax > 0.0) {
        const double h = params.peak_min_height_frac * gmax;
        const double prom = params.peak_min_prominence_frac * gmax;
        const auto entries = find_peaks(ws.grad, h, prom);
        const auto exits = find_peaks(ws.neg_grad, h, prom);

        // Each entry opens a region that the next exit closes. An exit with no
        // preceding entry closes a region open since the first frame, and an
        // entry left open at the end runs to the last frame.
        std::size_t a = 0, b = 0;
        int open = -1;
        bool any_event = false;
        while (a < entries.size() || b < exits.size()) {
            const bool take_entry = b >= exits.size() || (a < entries.size() && entries[a] <= exits[b]);
            if (take_entry) {
                if (open < 0) open = entries[a];
                ++a;
            } else {
                const int x = exits[b++];
                if (open >= 0) {
                    add_region(open, x);
                    open = -1;
                } else if (!any_event) {
                    add_region(0, x);
                }
            }
            any_event = true;
        }
        if (open >= 0) add_region(open, T - 1);
    }

    if (p.regions.empty()) {
        // Fallback: the longest run of nonzero preprocessed samples.
        int best_start = -1, best_len = 0, run_start = -1;
        for (int t = 0; t <= T; ++t) {
            const bool nz = t < T && p.preprocessed[t] != 0.0;
            if (nz && run_start < 0) run_start = t;
            if (!nz && run_start >= 0) {
                if (t - run_start > best_len) {
                    best_len = t - run_start;
                    best_start = run_start;
                }
                run_start = -1;
            }
        }
        if (best_len >= 3) p.regions.push_back({best_start, best_start + best_len - 1});
    }
}

double median_in_regions(const TemporalProfile& p, std::vector<double>& samples) {
    samples.clear();
    for (const auto& r : p.regions)
        for (int t = r.start; t <= r.end; ++t)
            if (p.values[t] >= p.threshold) samples.push_back(p.values[t]);
    if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t n = samples.size();
    const std::size_t mid = n / 2;
    std::nth_element(samples.begin(), samples.begin() + mid, samples.end());
    const double upper = samples[mid];
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(samples.begin(), samples.begin() + mid);
    return 0.5 * (lower + upper);
}

}  // namespace

TemporalProfile segment_reference_regions(std::vector<double> values, const CompositeParams& params, int bit_depth) {
    params.validate();
    if (static_cast<int>(values.size()) < params.savgol_window)
        throw InvalidArgument("profile of length " + std::to_string(values.size()) +
                              " is shorter than the smoothing window");
    const SavgolFilter filter(params.savgol_window, params.savgol_order);
    const double saturation = params.saturation_fraction * static_cast<double>((1ull << bit_depth) - 1);
    TemporalProfile p;
    p.values = std::move(values);
    Workspace ws;
    segment_into(p, params, filter, saturation, ws);
    return p;
}

double region_median(const TemporalProfile& profile) {
    std::vector<double> samples;
    return median_in_regions(profile, samples);
}

CompositeResult build_composite(const MosaicVideo& video, const CompositeParams& params) {
    params.validate();
    const int T = video.frame_count();
    if (T < 3 || T < params.savgol_window)
        throw InvalidArgument("video has " + std::to_string(T) + " frames; at least " +
                              std::to_string(std::max(3, params.savgol_window)) + " are required");
    const int H = video.height(), W = video.width();
    const SavgolFilter filter(params.savgol_window, params.savgol_order);
    const double saturation = params.saturation_fraction * static_cast<double>((1ull << video.bit_depth()) - 1);

    std::vector<float> out(video.frame_size(), 0.0f);
    PixelMask valid(H, W, false);
    std::vector<std::size_t> row_invalid(H, 0);

    parallel_for(static_cast<std::size_t>(H), [&](std::size_t y0, std::size_t y1) {
        Workspace ws;
        TemporalProfile p;
        p.values.resize(T);
        std::vector<float> block(static_cast<std::size_t>(T) * W);
        for (std::size_t y = y0; y < y1; ++y) {
            for (int t = 0; t < T; ++t) {
                auto f = video.frame_data(t);
                std::copy_n(f.data() + y * W, W, block.data() + static_cast<std::size_t>(t) * W);
            }
            for (int x = 0; x < W; ++x) {
                for (int t = 0; t < T; ++t) p.values[t] = block[static_cast<std::size_t>(t) * W + x];
                segment_into(p, params, filter, saturation, ws);
                const double m = median_in_regions(p, ws.samples);
                const std::size_t idx = y * W + x;
                if (std::isnan(m)) {
                    ++row_invalid[y];
                } else {
                    out[idx] = static_cast<float>(m);
                    valid.set(idx, true);
                }
            }
        }
    });

    std::size_t invalid = 0;
    for (auto c : row_invalid) invalid += c;
    const double total = static_cast<double>(video.frame_size());
    const double coverage = 1.0 - static_cast<double>(invalid) / total;
    if (static_cast<double>(invalid) > params.max_invalid_fraction * total)
        throw CoverageError("reference covered only " + std::to_string(coverage * 100.0) +
                                "% of the field of view; record a slower or fuller sweep",
                            coverage);
    return {MosaicFrame(H, W, video.layout(), std::move(out), video.exposure_ms(), video.bit_depth()),
            std::move(valid), invalid, coverage};
}

}  // namespace hsical
