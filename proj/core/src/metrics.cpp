#include "hsical/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hsical/error.hpp"
#include "hsical/parallel.hpp"
#include "hsical/refmodel.hpp"

namespace hsical {

double nrmse(std::span<const double> s, std::span<const double> r) {
    if (s.size() != r.size()) throw InvalidArgument("spectra differ in length");
    if (s.empty()) throw InvalidArgument("empty spectra");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        num += (s[k] - r[k]) * (s[k] - r[k]);
        den += r[k] * r[k];
    }
    if (den == 0.0) throw InvalidArgument("reference spectrum is all zero");
    return std::sqrt(num / den);
}

namespace {

std::vector<double> mean_normalized(std::span<const double> s) {
    double acc = 0.0;
    for (double v : s) acc += std::abs(v);
    std::vector<double> out(s.begin(), s.end());
    if (acc > 0.0)
        for (double& v : out) v *= s.size() / acc;
    return out;
}

}  // namespace

double relative_nrmse(std::span<const double> s, std::span<const double> r) {
    const auto a = mean_normalized(s), b = mean_normalized(r);
    return nrmse(a, b);
}

double median_inplace(std::vector<double>& v) {
    if (v.empty()) throw InvalidArgument("median of an empty set");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    const double upper = v[mid];
    if (v.size() % 2) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lower + upper);
}

MedapeResult medape(std::span<const double> u, std::span<const double> ref) {
    if (u.size() != ref.size()) throw InvalidArgument("sequences differ in length");
    std::vector<double> ape;
    ape.reserve(u.size());
    MedapeResult r;
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (ref[k] == 0.0) {
            ++r.excluded;
            continue;
        }
        ape.push_back(std::abs((u[k] - ref[k]) / ref[k]));
    }
    if (ape.empty()) throw InvalidArgument("all reference entries are zero");
    r.value = median_inplace(ape);
    return r;
}

std::vector<std::size_t> roi_pixels(int height, int width, std::span<const std::pair<int, int>> centers,
                                    double radius) {
    std::set<std::size_t> members;
    const int r = static_cast<int>(std::floor(radius));
    for (const auto& [ci, cj] : centers) {
        if (ci - r < 0 || cj - r < 0 || ci + r >= height || cj + r >= width)
            throw InvalidArgument("ROI disk at (" + std::to_string(ci) + ", " + std::to_string(cj) +
                                  ") extends outside the image");
        for (int di = -r; di <= r; ++di)
            for (int dj = -r; dj <= r; ++dj)
                if (di * di + dj * dj <= radius * radius)
                    members.insert(static_cast<std::size_t>(ci + di) * width + (cj + dj));
    }
    return {members.begin(), members.end()};
}

RoiStats sample_tile_rois(const Hypercube& cube, std::span<const std::pair<int, int>> centers, double radius) {
    if (centers.empty()) throw InvalidArgument("no ROI centers given");
    const auto px = roi_pixels(cube.height(), cube.width(), centers, radius);
    const int N = cube.bands();
    RoiStats st{std::vector<double>(N, 0.0), std::vector<double>(N, 0.0), px.size()};
    for (std::size_t p : px) {
        auto s = cube.spectrum(p);
        for (int n = 0; n < N; ++n) st.mean[n] += s[n];
    }
    for (double& m : st.mean) m /= px.size();
    for (std::size_t p : px) {
        auto s = cube.spectrum(p);
        for (int n = 0; n < N; ++n) st.stddev[n] += (s[n] - st.mean[n]) * (s[n] - st.mean[n]);
    }
    for (double& v : st.stddev) v = std::sqrt(v / px.size());
    return st;
}

ReferenceComparison compare_references(const Hypercube& synthetic, const Hypercube& measured,
                                       const ContentMask& mask) {
    if (!synthetic.same_shape(measured)) throw InvalidArgument("reference cubes differ in geometry");
    const PixelMask pm = PixelMask::from_content(synthetic.height(), synthetic.width(), mask);
    const int N = synthetic.bands();

    std::vector<double> u, ref, per_pixel;
    u.reserve(pm.count() * N);
    ref.reserve(pm.count() * N);
    per_pixel.reserve(pm.count());
    ReferenceComparison out;
    for (std::size_t p = 0; p < synthetic.pixel_count(); ++p) {
        if (!pm[p]) continue;
        auto s = synthetic.spectrum(p), m = measured.spectrum(p);
        u.insert(u.end(), s.begin(), s.end());
        ref.insert(ref.end(), m.begin(), m.end());
        double den = 0.0;
        for (double v : m) den += v * v;
        if (den > 0.0) per_pixel.push_back(nrmse(s, m));
    }
    if (u.empty()) throw InvalidArgument("content mask selects no pixels");
    out.pixels = u.size() / N;
    const auto mp = medape(u, ref);
    out.medape_pixelwise = mp.value;
    out.excluded = mp.excluded;

    const auto fs = fit_nonparametric(synthetic, pm), fm = fit_nonparametric(measured, pm);
    out.medape_sensitivities = medape(fs.S, fm.S).value;

    if (!per_pixel.empty()) {
        out.nrmse_per_pixel.min = *std::min_element(per_pixel.begin(), per_pixel.end());
        out.nrmse_per_pixel.max = *std::max_element(per_pixel.begin(), per_pixel.end());
        out.nrmse_per_pixel.median = median_inplace(per_pixel);
    }
    return out;
}

EvaluationReport evaluate_tiles(const Hypercube& cube, const std::vector<TileRoi>& layout,
                                const std::map<std::string, SampledSpectrum>& reference_spectra,
                                const std::map<std::string, LabReference>& reference_lab, const ColorMatrix& T,
                                double roi_radius, const std::vector<std::string>& subset) {
    const auto& centers = cube.band_centers();
    const int N = cube.bands();
    if (static_cast<int>(centers.size()) != N) throw InvalidArgument("cube has no band centers");
    if (layout.empty()) throw InvalidArgument("tile layout is empty");

    EvaluationReport rep;
    rep.tiles.resize(layout.size());
    parallel_for(layout.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const TileRoi& roi = layout[k];
            auto sit = reference_spectra.find(roi.tile_id);
            if (sit == reference_spectra.end())
                throw InvalidArgument("no reference spectrum for tile '" + roi.tile_id + "'");
            auto lit = reference_lab.find(roi.tile_id);
            if (lit == reference_lab.end()) throw InvalidArgument("no reference Lab for tile '" + roi.tile_id + "'");
            const SampledSpectrum& rs = sit->second;
            if (!rs.covers(centers.front(), centers.back()))
                throw InvalidArgument("reference spectrum of tile '" + roi.tile_id + "' does not cover the band centers");

            TileReport& t = rep.tiles[k];
            t.tile_id = roi.tile_id;
            const auto px = roi_pixels(cube.height(), cube.width(), roi.centers, roi_radius);
            t.mean_spectrum.assign(N, 0.0);
            for (std::size_t p : px) {
                auto s = cube.spectrum(p);
                for (int n = 0; n < N; ++n) t.mean_spectrum[n] += s[n];
            }
            for (double& v : t.mean_spectrum) v /= px.size();
            t.reference_spectrum.resize(N);
            for (int n = 0; n < N; ++n) t.reference_spectrum[n] = rs.value_at(centers[n]);
            t.nrmse_quant = nrmse(t.mean_spectrum, t.reference_spectrum);
            t.nrmse_relative = relative_nrmse(t.mean_spectrum, t.reference_spectrum);

            const ColorTriple ref{ColorSpace::Lab, lit->second.L, lit->second.a, lit->second.b};
            std::vector<double> de;
            de.reserve(px.size());
            for (std::size_t p : px) de.push_back(delta_e_2000(xyz_to_lab(spectrum_to_xyz(cube.spectrum(p), T)), ref));
            t.delta_e_median = median_inplace(de);
        }
    });

    for (const auto& t : rep.tiles) {
        rep.mean_nrmse_quant += t.nrmse_quant;
        rep.mean_nrmse_relative += t.nrmse_relative;
        rep.mean_delta_e += t.delta_e_median;
    }
    const double n = static_cast<double>(rep.tiles.size());
    rep.mean_nrmse_quant /= n;
    rep.mean_nrmse_relative /= n;
    rep.mean_delta_e /= n;

    if (!subset.empty()) {
        double q = 0, r = 0, d = 0;
        std::size_t count = 0;
        for (const auto& id : subset) {
            auto it = std::find_if(rep.tiles.begin(), rep.tiles.end(), [&](const TileReport& t) { return t.tile_id == id; });
            if (it == rep.tiles.end()) throw InvalidArgument("subset names unknown tile '" + id + "'");
            q += it->nrmse_quant;
            r += it->nrmse_relative;
            d += it->delta_e_median;
            ++count;
        }
        rep.subset_nrmse_quant = q / count;
        rep.subset_nrmse_relative = r / count;
        rep.subset_delta_e = d / count;
    }
    return rep;
}

}  // namespace hsical
