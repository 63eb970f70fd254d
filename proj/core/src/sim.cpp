#include "hsical/sim.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "hsical/error.hpp"
#include "hsical/parallel.hpp"
#include "hsical/spectral.hpp"

namespace hsical {

namespace {

constexpr std::uint64_t kWhiteStream = 1;
constexpr std::uint64_t kSweepStream = 2;
constexpr std::uint64_t kBoardStream = 3;
constexpr std::uint64_t kSpecularStream = 4;

std::uint64_t splitmix(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t frame, std::uint64_t pixel,
                           std::uint64_t lane) noexcept {
    std::uint64_t h = splitmix(seed);
    h = splitmix(h ^ stream);
    h = splitmix(h ^ frame);
    h = splitmix(h ^ pixel);
    return splitmix(h ^ lane);
}

double to_unit(std::uint64_t bits) noexcept {
    // 53 random bits into (0, 1)
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<double> band_averages(const SampledSpectrum& s, const BandResponseSet& bands) {
    std::vector<double> out(bands.size());
    for (int n = 0; n < bands.size(); ++n) out[n] = band_average(s, bands[n]);
    return out;
}

bool inside_content(const SimScenario& sc, int i, int j) {
    return !sc.content || sc.content->full_frame || sc.content->contains(i, j);
}

}  // namespace

double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t frame, std::uint64_t pixel) noexcept {
    return to_unit(counter_hash(seed, stream, frame, pixel, 0));
}

double standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t frame, std::uint64_t pixel) noexcept {
    const double u1 = to_unit(counter_hash(seed, stream, frame, pixel, 1));
    const double u2 = to_unit(counter_hash(seed, stream, frame, pixel, 2));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double apply_noise(const NoiseModel& noise, double value, std::uint64_t seed, std::uint64_t stream,
                   std::uint64_t frame, std::uint64_t pixel) noexcept {
    switch (noise.kind) {
        case NoiseModel::Kind::none: return value;
        case NoiseModel::Kind::gaussian:
            return value + noise.sigma_frac * value * standard_normal(seed, stream, frame, pixel);
        case NoiseModel::Kind::poisson:
            return value + std::sqrt(noise.gain * std::max(value, 0.0)) * standard_normal(seed, stream, frame, pixel);
    }
    return value;
}

BandResponseSet gaussian_band_responses(int bands, double first_peak_nm, double last_peak_nm, double fwhm_nm,
                                        double step_nm) {
    if (bands < 1 || !(fwhm_nm > 0.0) || !(step_nm > 0.0)) throw InvalidArgument("invalid band response parameters");
    const double sigma = fwhm_nm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const int half = static_cast<int>(std::ceil(3.0 * sigma / step_nm));
    std::vector<SampledSpectrum> out;
    for (int n = 0; n < bands; ++n) {
        const double peak =
            bands == 1 ? first_peak_nm : first_peak_nm + (last_peak_nm - first_peak_nm) * n / (bands - 1);
        std::vector<double> wl, v;
        for (int k = -half; k <= half; ++k) {
            const double x = k * step_nm;
            wl.push_back(peak + x);
            v.push_back(std::abs(k) == half ? 0.0 : std::exp(-0.5 * x * x / (sigma * sigma)));
        }
        out.emplace_back(std::move(wl), std::move(v));
    }
    return BandResponseSet(std::move(out));
}

SampledSpectrum blackbody_spectrum(double kelvin, double lo_nm, double hi_nm, double step_nm) {
    if (!(kelvin > 0.0) || !(hi_nm > lo_nm) || !(step_nm > 0.0)) throw InvalidArgument("invalid blackbody parameters");
    constexpr double c2 = 1.4387769e-2;  // m K
    std::vector<double> wl, v;
    const int count = static_cast<int>(std::floor((hi_nm - lo_nm) / step_nm + 1e-9)) + 1;
    double peak = 0.0;
    for (int k = 0; k < count; ++k) {
        const double l = lo_nm + k * step_nm;
        const double lm = l * 1e-9;
        wl.push_back(l);
        v.push_back(1.0 / (std::pow(lm, 5.0) * std::expm1(c2 / (lm * kelvin))));
        peak = std::max(peak, v.back());
    }
    for (double& x : v) x /= peak;
    return SampledSpectrum(std::move(wl), std::move(v));
}

void SimScenario::validate() const {
    if (height <= 0 || width <= 0 || height % layout.rows() || width % layout.cols())
        throw InvalidArgument("scenario geometry must be a positive multiple of the mosaic pattern");
    if (band_responses.size() != bands())
        throw InvalidArgument("scenario has " + std::to_string(band_responses.size()) + " band responses for " +
                              std::to_string(bands()) + " bands");
    if (!(M > 0.0)) throw InvalidArgument("scenario M must be positive");
    if (!(vignetting.sigma > 0.0)) throw InvalidArgument("vignetting sigma must be positive");
    if (noise.sigma_frac < 0.0 || noise.sigma_frac > 0.2) throw InvalidArgument("noise sigma_frac must lie in [0, 0.2]");
    if (noise.gain < 0.0) throw InvalidArgument("noise gain must be non-negative");
    if (!(ruler.speed >= 1.0)) throw InvalidArgument("ruler speed must be at least 1 px/frame");
    if (ruler.width_px < 1 || ruler.length_px < 0 || ruler.offset_px < 0 || ruler.lead_frames < 0 ||
        ruler.frame_count < 0)
        throw InvalidArgument("invalid ruler geometry");
    if (ruler.specular_probability < 0.0 || ruler.specular_probability > 1.0)
        throw InvalidArgument("specular probability must lie in [0, 1]");
    if (bit_depth < 1 || bit_depth > 16) throw InvalidArgument("bit depth must lie in [1, 16]");
    if (!(exposure_ms > 0.0)) throw InvalidArgument("exposure must be positive");
}

std::vector<double> true_sensitivities(const SimScenario& sc) {
    auto s = band_averages(sc.light_spectrum, sc.band_responses);
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= s.size();
    if (!(mean > 0.0)) throw InvalidArgument("light spectrum has no energy in the sensor bands");
    for (double& v : s) v /= mean;
    return s;
}

WhiteReferenceModel true_reference_model(const SimScenario& sc) {
    WhiteReferenceModel m;
    m.method = FitMethod::gaussian_joint;
    m.M = sc.M;
    m.S = true_sensitivities(sc);
    m.V = sc.vignetting;
    m.height = sc.height;
    m.width = sc.width;
    return m;
}

SimulatedReference simulate_white_reference(const SimScenario& sc) {
    sc.validate();
    const auto S = true_sensitivities(sc);
    const int N = sc.bands();
    Hypercube cube(sc.height, sc.width, N, CubeKind::intensity, sc.band_responses.centers());
    parallel_for(static_cast<std::size_t>(sc.height), [&](std::size_t i0, std::size_t i1) {
        for (int i = static_cast<int>(i0); i < static_cast<int>(i1); ++i) {
            for (int j = 0; j < sc.width; ++j) {
                if (!inside_content(sc, i, j)) continue;
                const double mv = sc.M * sc.vignetting(i, j);
                auto s = cube.spectrum(i, j);
                const std::size_t pixel = static_cast<std::size_t>(i) * sc.width + j;
                for (int n = 0; n < N; ++n)
                    s[n] = apply_noise(sc.noise, mv * S[n], sc.seed, kWhiteStream, n, pixel);
            }
        }
    }, 8);
    return {std::move(cube), true_reference_model(sc)};
}

SimulatedSweep simulate_ruler_sweep(const SimScenario& sc) {
    sc.validate();
    const auto S = true_sensitivities(sc);
    const auto rho_ruler = band_averages(sc.ruler.reflectance, sc.band_responses);
    const auto rho_bg = band_averages(sc.background_reflectance, sc.band_responses);
    const RulerSpec& r = sc.ruler;
    const bool along_rows = r.axis == SweepAxis::rows;
    const int travel = along_rows ? sc.height : sc.width;
    const int across = along_rows ? sc.width : sc.height;
    const int needed = r.lead_frames + static_cast<int>(std::ceil((travel + r.width_px) / r.speed)) + r.lead_frames;
    const int frames = r.frame_count > 0 ? r.frame_count : needed;
    const int across_lo = r.length_px > 0 ? r.offset_px : 0;
    const int across_hi = r.length_px > 0 ? std::min(across, r.offset_px + r.length_px) : across;
    const double full = static_cast<double>((1u << sc.bit_depth) - 1u);

    auto ruler_start = [&](int t) {
        return static_cast<int>(std::floor(-r.width_px + r.speed * (t - r.lead_frames + 1)));
    };

    MosaicVideo video(sc.height, sc.width, sc.layout, sc.exposure_ms, sc.bit_depth, frames);
    parallel_for(static_cast<std::size_t>(frames), [&](std::size_t t0, std::size_t t1) {
        for (int t = static_cast<int>(t0); t < static_cast<int>(t1); ++t) {
            auto data = video.frame_data(t);
            const int p = ruler_start(t);
            for (int y = 0; y < sc.height; ++y) {
                for (int x = 0; x < sc.width; ++x) {
                    const std::size_t pixel = static_cast<std::size_t>(y) * sc.width + x;
                    if (!inside_content(sc, y, x)) {
                        data[pixel] = 0.0f;
                        continue;
                    }
                    const int along = along_rows ? y : x, cross = along_rows ? x : y;
                    const bool on_ruler = along >= p && along < p + r.width_px && cross >= across_lo && cross < across_hi;
                    const int n = sc.layout.band_at(y, x);
                    const double base = sc.M * S[n] * sc.vignetting(y, x);
                    double v = base * (on_ruler ? rho_ruler[n] : rho_bg[n]);
                    v = apply_noise(sc.noise, v, sc.seed, kSweepStream, t, pixel);
                    if (on_ruler && r.specular_probability > 0.0 &&
                        uniform01(sc.seed, kSpecularStream, t, pixel) < r.specular_probability)
                        v = full;
                    data[pixel] = static_cast<float>(std::clamp(v, 0.0, full));
                }
            }
        }
    });

    std::vector<float> truth(static_cast<std::size_t>(sc.height) * sc.width, 0.0f);
    PixelMask covered(sc.height, sc.width, false);
    std::size_t count = 0;
    for (int y = 0; y < sc.height; ++y) {
        for (int x = 0; x < sc.width; ++x) {
            if (!inside_content(sc, y, x)) continue;
            const int n = sc.layout.band_at(y, x);
            truth[static_cast<std::size_t>(y) * sc.width + x] =
                static_cast<float>(std::clamp(sc.M * S[n] * sc.vignetting(y, x) * rho_ruler[n], 0.0, full));
            const int along = along_rows ? y : x, cross = along_rows ? x : y;
            if (cross < across_lo || cross >= across_hi) continue;
            // Frames whose ruler band contains `along`.
            bool seen = false;
            for (int t = 0; t < frames && !seen; ++t) {
                const int p = ruler_start(t);
                seen = along >= p && along < p + r.width_px;
            }
            if (seen) {
                covered.set(y, x, true);
                ++count;
            }
        }
    }
    MosaicFrame truth_frame(sc.height, sc.width, sc.layout, std::move(truth), sc.exposure_ms, sc.bit_depth);
    const double coverage = static_cast<double>(count) / (static_cast<double>(sc.height) * sc.width);
    return {std::move(video), std::move(truth_frame), std::move(covered), coverage, frames < needed};
}

std::map<std::string, SampledSpectrum> default_tiles() {
    std::map<std::string, SampledSpectrum> t;
    t.emplace("A1", SampledSpectrum::constant(300.0, 1100.0, 0.2));
    t.emplace("A2", SampledSpectrum::constant(300.0, 1100.0, 0.5));
    t.emplace("A3", SampledSpectrum::constant(300.0, 1100.0, 0.8));
    t.emplace("B1", SampledSpectrum({300.0, 450.0, 650.0, 1100.0}, {0.1, 0.1, 0.7, 0.7}));
    t.emplace("B2", SampledSpectrum({300.0, 450.0, 650.0, 1100.0}, {0.75, 0.75, 0.15, 0.15}));
    t.emplace("B3", SampledSpectrum({300.0, 500.0, 540.0, 580.0, 1100.0}, {0.1, 0.1, 0.6, 0.1, 0.1}));
    return t;
}

SimulatedCheckerboard simulate_checkerboard(const SimScenario& sc, const std::map<std::string, SampledSpectrum>& tiles,
                                            const CheckerboardLayout& grid) {
    sc.validate();
    if (tiles.empty()) throw InvalidArgument("checkerboard needs at least one tile");
    if (grid.rows < 1 || grid.cols < 1 || static_cast<int>(tiles.size()) > grid.rows * grid.cols)
        throw InvalidArgument("checkerboard grid has fewer cells than tiles");
    const int th = sc.height / grid.rows, tw = sc.width / grid.cols;
    const double radius = grid.roi_radius > 0.0 ? grid.roi_radius : std::min(30.0, std::floor(std::min(th, tw) / 4.0) - 1.0);
    if (!(radius >= 1.0) || radius + 1 > std::min(th, tw) / 4.0)
        throw InvalidArgument("ROI radius does not fit inside a quarter tile");

    const auto S = true_sensitivities(sc);
    const auto rho_bg = band_averages(sc.background_reflectance, sc.band_responses);
    const int N = sc.bands();

    SimulatedCheckerboard out{Hypercube(sc.height, sc.width, N, CubeKind::intensity, sc.band_responses.centers()),
                              std::vector<int>(static_cast<std::size_t>(sc.height) * sc.width, -1),
                              {},
                              {},
                              {},
                              radius};
    std::vector<std::vector<double>> rho;
    for (const auto& [id, spectrum] : tiles) {
        const int k = static_cast<int>(out.tile_ids.size());
        out.tile_ids.push_back(id);
        rho.push_back(band_averages(spectrum, sc.band_responses));
        out.reflectance[id] = rho.back();
        const int ci = (k / grid.cols) * th + th / 2, cj = (k % grid.cols) * tw + tw / 2;
        out.layout.push_back({id, {{ci, cj}, {ci - th / 4, cj}, {ci + th / 4, cj}, {ci, cj - tw / 4}, {ci, cj + tw / 4}}});
    }
    const int count = static_cast<int>(tiles.size());

    parallel_for(static_cast<std::size_t>(sc.height), [&](std::size_t i0, std::size_t i1) {
        for (int i = static_cast<int>(i0); i < static_cast<int>(i1); ++i) {
            for (int j = 0; j < sc.width; ++j) {
                const std::size_t pixel = static_cast<std::size_t>(i) * sc.width + j;
                const int gi = i / th, gj = j / tw;
                int k = -1;
                if (gi < grid.rows && gj < grid.cols && gi * grid.cols + gj < count) k = gi * grid.cols + gj;
                out.tile_of_pixel[pixel] = k;
                if (!inside_content(sc, i, j)) continue;
                const auto& refl = k >= 0 ? rho[k] : rho_bg;
                const double mv = sc.M * sc.vignetting(i, j);
                auto s = out.cube.spectrum(pixel);
                for (int n = 0; n < N; ++n)
                    s[n] = apply_noise(sc.noise, mv * S[n] * refl[n], sc.seed, kBoardStream, n, pixel);
            }
        }
    }, 8);
    return out;
}

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& what) { throw ParseError("scenario: " + what, 0); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key)) fail("unknown key '" + key + "' in " + where);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(std::string("invalid value for '") + key + "'");
    }
}

SampledSpectrum parse_spectrum(const json& j, const fs::path& base, const std::string& where) {
    if (j.is_number()) return SampledSpectrum::constant(300.0, 1100.0, j.get<double>());
    if (j.is_string()) return load_sampled_spectrum(base / j.get<std::string>());
    if (j.is_object() && j.contains("blackbody_k")) {
        check_keys(j, where, {"blackbody_k", "range_nm", "step_nm"});
        const auto range = get_or<std::vector<double>>(j, "range_nm", {380.0, 780.0});
        if (range.size() != 2) fail(where + ".range_nm must have two entries");
        return blackbody_spectrum(j["blackbody_k"].get<double>(), range[0], range[1], get_or(j, "step_nm", 5.0));
    }
    if (j.is_object()) {
        check_keys(j, where, {"wavelength_nm", "value"});
        try {
            return SampledSpectrum(j.at("wavelength_nm").get<std::vector<double>>(), j.at("value").get<std::vector<double>>());
        } catch (const json::exception&) {
            fail(where + " needs numeric arrays 'wavelength_nm' and 'value'");
        } catch (const InvalidArgument& e) {
            fail(where + ": " + e.what());
        }
    }
    fail(where + " must be a number, a file name or an object");
}

BandResponseSet parse_bands(const json& j, const fs::path& base) {
    if (j.is_string()) return load_band_responses(base / j.get<std::string>());
    check_keys(j, "band_responses", {"gaussian"});
    const json& g = j.at("gaussian");
    check_keys(g, "band_responses.gaussian", {"count", "first_peak_nm", "last_peak_nm", "fwhm_nm", "step_nm"});
    return gaussian_band_responses(get_or(g, "count", 16), get_or(g, "first_peak_nm", 460.0),
                                   get_or(g, "last_peak_nm", 620.0), get_or(g, "fwhm_nm", 15.0),
                                   get_or(g, "step_nm", 1.0));
}

}  // namespace

ScenarioFile load_scenario(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario: ") + e.what(), 0);
    }
    check_keys(j, "scenario",
               {"height", "width", "pattern", "light_spectrum", "band_responses", "vignetting", "M", "noise", "ruler",
                "background_reflectance", "seed", "exposure_ms", "bit_depth", "content", "checkerboard"});
    const fs::path base = path.parent_path();
    ScenarioFile f;
    SimScenario& sc = f.scenario;
    sc.height = get_or(j, "height", sc.height);
    sc.width = get_or(j, "width", sc.width);
    if (j.contains("pattern")) {
        const json& p = j["pattern"];
        check_keys(p, "pattern", {"rows", "cols", "bands"});
        const int rows = get_or(p, "rows", 4), cols = get_or(p, "cols", 4);
        sc.layout = p.contains("bands") ? MosaicLayout(rows, cols, get_or<std::vector<int>>(p, "bands", {}))
                                        : MosaicLayout::sequential(rows, cols);
    }
    if (j.contains("light_spectrum")) sc.light_spectrum = parse_spectrum(j["light_spectrum"], base, "light_spectrum");
    if (j.contains("band_responses")) sc.band_responses = parse_bands(j["band_responses"], base);
    if (j.contains("vignetting")) {
        const json& v = j["vignetting"];
        check_keys(v, "vignetting", {"mu_i", "mu_j", "sigma"});
        sc.vignetting = {get_or(v, "mu_i", sc.height / 2.0), get_or(v, "mu_j", sc.width / 2.0), get_or(v, "sigma", 1.0)};
    } else {
        sc.vignetting = {sc.height / 2.0, sc.width / 2.0, 0.6 * std::hypot(sc.height, sc.width)};
    }
    sc.M = get_or(j, "M", sc.M);
    if (j.contains("noise")) {
        const json& n = j["noise"];
        check_keys(n, "noise", {"kind", "sigma_frac", "gain"});
        const auto kind = get_or<std::string>(n, "kind", "gaussian");
        if (kind == "none") sc.noise.kind = NoiseModel::Kind::none;
        else if (kind == "gaussian") sc.noise.kind = NoiseModel::Kind::gaussian;
        else if (kind == "poisson") sc.noise.kind = NoiseModel::Kind::poisson;
        else fail("noise.kind must be none, gaussian or poisson");
        sc.noise.sigma_frac = get_or(n, "sigma_frac", sc.noise.sigma_frac);
        sc.noise.gain = get_or(n, "gain", sc.noise.gain);
    }
    if (j.contains("ruler")) {
        const json& r = j["ruler"];
        check_keys(r, "ruler", {"reflectance", "width_px", "length_px", "offset_px", "speed", "orientation",
                                "lead_frames", "frame_count", "specular_probability"});
        if (r.contains("reflectance")) sc.ruler.reflectance = parse_spectrum(r["reflectance"], base, "ruler.reflectance");
        sc.ruler.width_px = get_or(r, "width_px", sc.ruler.width_px);
        sc.ruler.length_px = get_or(r, "length_px", sc.ruler.length_px);
        sc.ruler.offset_px = get_or(r, "offset_px", sc.ruler.offset_px);
        sc.ruler.speed = get_or(r, "speed", sc.ruler.speed);
        const auto axis = get_or<std::string>(r, "orientation", "rows");
        if (axis == "rows") sc.ruler.axis = SweepAxis::rows;
        else if (axis == "cols") sc.ruler.axis = SweepAxis::cols;
        else fail("ruler.orientation must be rows or cols");
        sc.ruler.lead_frames = get_or(r, "lead_frames", sc.ruler.lead_frames);
        sc.ruler.frame_count = get_or(r, "frame_count", sc.ruler.frame_count);
        sc.ruler.specular_probability = get_or(r, "specular_probability", sc.ruler.specular_probability);
    }
    if (j.contains("background_reflectance"))
        sc.background_reflectance = parse_spectrum(j["background_reflectance"], base, "background_reflectance");
    sc.seed = get_or<std::uint64_t>(j, "seed", 0);
    sc.exposure_ms = get_or(j, "exposure_ms", sc.exposure_ms);
    sc.bit_depth = get_or(j, "bit_depth", sc.bit_depth);
    if (j.contains("content")) {
        const json& c = j["content"];
        check_keys(c, "content", {"cx", "cy", "radius", "shrink_factor"});
        sc.content = ContentMask(get_or(c, "cx", sc.width / 2.0), get_or(c, "cy", sc.height / 2.0),
                                 get_or(c, "radius", 0.5 * std::min(sc.height, sc.width)),
                                 get_or(c, "shrink_factor", 1.0));
    }
    if (j.contains("checkerboard")) {
        const json& c = j["checkerboard"];
        check_keys(c, "checkerboard", {"rows", "cols", "roi_radius", "tiles"});
        f.grid.rows = get_or(c, "rows", f.grid.rows);
        f.grid.cols = get_or(c, "cols", f.grid.cols);
        f.grid.roi_radius = get_or(c, "roi_radius", f.grid.roi_radius);
        if (c.contains("tiles")) {
            if (!c["tiles"].is_object()) fail("checkerboard.tiles must map tile ids to spectra");
            for (const auto& [id, spec] : c["tiles"].items())
                f.tiles.emplace(id, parse_spectrum(spec, base, "checkerboard.tiles." + id));
        }
    }
    try {
        sc.validate();
    } catch (const InvalidArgument& e) {
        fail(e.what());
    }
    return f;
}

}  // namespace hsical
