#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "hsical/colorsci.hpp"
#include "hsical/composite.hpp"
#include "hsical/error.hpp"
#include "hsical/io.hpp"
#include "hsical/metrics.hpp"
#include "hsical/mosaic.hpp"
#include "hsical/parallel.hpp"
#include "hsical/refmodel.hpp"
#include "hsical/sim.hpp"
#include "hsical/whitebalance.hpp"

#ifndef HSICAL_DATA_DIR
#define HSICAL_DATA_DIR "data"
#endif

namespace hsical::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr const char* kVersion = "1.0.0";

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path + " for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 20);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
    return hex.str();
}

namespace {

// Records what a command read, how it was configured and what it wrote.
// Paths are reduced to file names so reruns into other directories compare equal.
class Manifest {
public:
    explicit Manifest(std::string command) {
        doc_["command"] = std::move(command);
        doc_["version"] = kVersion;
        doc_["parameters"] = ordered_json::object();
        doc_["inputs"] = ordered_json::array();
        doc_["outputs"] = ordered_json::array();
    }
    template <typename T>
    void param(const std::string& key, const T& value) {
        doc_["parameters"][key] = value;
    }
    void input(const fs::path& p) { doc_["inputs"].push_back(entry(p)); }
    void output(const fs::path& p) { doc_["outputs"].push_back(entry(p)); }
    void write(const fs::path& p) const {
        std::ofstream out(p, std::ios::trunc);
        if (!out) throw Error("cannot write manifest " + p.string());
        out << doc_.dump(2) << '\n';
    }

private:
    static ordered_json entry(const fs::path& p) {
        return {{"file", p.filename().string()}, {"sha256", sha256_file(p.string())}};
    }
    ordered_json doc_;
};

ContentMask parse_content(const std::string& spec, double shrink) {
    std::vector<double> v;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            v.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw InvalidArgument("content disk must be cx,cy,radius");
        }
    }
    if (v.size() != 3) throw InvalidArgument("content disk must be cx,cy,radius");
    return ContentMask(v[0], v[1], v[2], shrink);
}

struct LoadedImage {
    Hypercube cube;
    double exposure_ms = 0.0;  // 0 when the file carries none
};

LoadedImage load_image(const fs::path& path, const std::vector<double>& centers) {
    const std::string magic = sniff_magic(path);
    if (magic == "HSIC") {
        Hypercube c = read_cube(path);
        if (c.band_centers().empty() && static_cast<int>(centers.size()) == c.bands()) c.set_band_centers(centers);
        return {std::move(c), 0.0};
    }
    if (magic == "HSIV") {
        const MosaicFrame f = read_mosaic_frame(path);
        return {demosaic_bilinear(f, centers), f.exposure_ms()};
    }
    throw FormatError(path.string() + " is neither an HSIC cube nor an HSIV frame", 0);
}

ColorMatrix color_matrix(const std::string& matrix_path, const std::string& cmfs_path, const std::string& bands_path,
                         Manifest& mf) {
    if (!matrix_path.empty()) {
        mf.input(matrix_path);
        return ColorMatrix::from_rows(load_matrix(matrix_path));
    }
    if (bands_path.empty()) throw InvalidArgument("colour conversion needs --color-matrix or --bands");
    mf.input(cmfs_path);
    return camera_matrix_from_cmfs(load_band_responses(bands_path), load_cmfs(cmfs_path));
}

void write_frame_mask(const fs::path& path, const PixelMask& mask, const MosaicLayout& layout, double exposure) {
    std::vector<float> v(static_cast<std::size_t>(mask.height()) * mask.width());
    for (std::size_t p = 0; p < v.size(); ++p) v[p] = mask[p] ? 1.0f : 0.0f;
    write_mosaic_frame(path, MosaicFrame(mask.height(), mask.width(), layout, std::move(v), exposure, 1));
}

PixelMask read_frame_mask(const fs::path& path) {
    const MosaicFrame f = read_mosaic_frame(path);
    PixelMask m(f.height(), f.width(), false);
    for (std::size_t p = 0; p < f.data().size(); ++p) m.set(p, f.data()[p] > 0.5f);
    return m;
}

fs::path manifest_path(const std::string& explicit_path, const fs::path& out) {
    if (!explicit_path.empty()) return explicit_path;
    fs::path p = out;
    p += ".manifest.json";
    return p;
}

// ---------------------------------------------------------------- compose

struct ComposeArgs {
    std::string video, out, mask_out, manifest;
    CompositeParams params;
};

int cmd_compose(const ComposeArgs& a) {
    a.params.validate();
    Manifest mf("compose");
    mf.input(a.video);
    const MosaicVideo video = read_mosaic_video(a.video);
    mf.param("saturation_fraction", a.params.saturation_fraction);
    mf.param("savgol_window", a.params.savgol_window);
    mf.param("savgol_order", a.params.savgol_order);
    mf.param("peak_min_height_frac", a.params.peak_min_height_frac);
    mf.param("peak_min_prominence_frac", a.params.peak_min_prominence_frac);
    mf.param("region_margin", a.params.region_margin);
    mf.param("otsu_bins", a.params.otsu_bins);
    mf.param("min_separability", a.params.min_separability);
    mf.param("max_invalid_fraction", a.params.max_invalid_fraction);

    const CompositeResult res = build_composite(video, a.params);
    const fs::path out = a.out;
    fs::path mask_out = a.mask_out;
    if (mask_out.empty()) mask_out = fs::path(out).replace_extension(".mask.hsiv");
    write_mosaic_frame(out, res.composite);
    write_frame_mask(mask_out, res.valid, video.layout(), video.exposure_ms());
    mf.param("coverage", res.coverage);
    mf.param("invalid_pixels", res.invalid_count);
    mf.output(out);
    mf.output(mask_out);
    mf.write(manifest_path(a.manifest, out));
    std::cout << "composite: " << res.invalid_count << " invalid pixels, coverage " << res.coverage << '\n';
    return ok;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string composite, reflectance, bands, method = "gaussian-sequential", out, valid_mask, content, manifest;
    bool detect_content = false;
    bool no_valid_mask = false;
    double shrink = 0.9;
};

int cmd_fit(const FitArgs& a) {
    Manifest mf("fit");
    const FitMethod method = parse_fit_method(a.method);
    mf.param("method", to_string(method));
    mf.input(a.composite);
    mf.input(a.reflectance);
    mf.input(a.bands);
    const MosaicFrame composite = read_mosaic_frame(a.composite);
    const SampledSpectrum t = load_sampled_spectrum(a.reflectance);
    const BandResponseSet bands = load_band_responses(a.bands);
    if (bands.size() != composite.layout().band_count())
        throw InvalidArgument("band response file has " + std::to_string(bands.size()) + " bands, composite has " +
                              std::to_string(composite.layout().band_count()));

    const ReflectivityFactors rho = reflectivity_factors(t, bands);
    const Hypercube cube = apply_reflectivity_correction(demosaic_bilinear(composite, bands.centers()), rho.values());

    PixelMask mask = demosaic_interior(composite.height(), composite.width(), composite.layout());
    fs::path valid_path = a.valid_mask;
    if (valid_path.empty() && !a.no_valid_mask) {
        const fs::path guess = fs::path(a.composite).replace_extension(".mask.hsiv");
        if (fs::exists(guess)) valid_path = guess;
    }
    if (!valid_path.empty()) {
        mf.input(valid_path);
        const PixelMask sites = read_frame_mask(valid_path);
        if (sites.height() != composite.height() || sites.width() != composite.width())
            throw InvalidArgument("validity mask geometry does not match the composite");
        mask &= demosaic_validity(sites, composite.layout());
    }
    std::optional<ContentMask> content;
    if (!a.content.empty()) {
        content = parse_content(a.content, a.shrink);
    } else if (a.detect_content) {
        content = detect_content_circle(composite, a.shrink);
        if (content->full_frame) content.reset();
    }
    if (content) {
        mask &= PixelMask::from_content(composite.height(), composite.width(), *content);
        mf.param("content", std::vector<double>{content->cx, content->cy, content->radius, content->shrink_factor});
    }
    mf.param("fitted_pixels", mask.count());

    const WhiteReferenceModel model = fit_model(method, cube, mask);
    save_model(a.out, model, content);
    mf.output(a.out);
    if (!model.is_gaussian()) mf.output(fs::path(a.out).replace_extension(".vignetting.hsic"));
    mf.param("converged", model.converged);
    mf.param("degenerate", model.degenerate);
    mf.write(manifest_path(a.manifest, a.out));

    if (model.degenerate) std::cerr << "warning: no vignetting detected (sigma exceeds ten image diagonals)\n";
    if (!model.converged) {
        std::cerr << "error: fit did not converge after " << model.iterations << " iterations; best estimate written\n";
        return not_converged;
    }
    return ok;
}

// ---------------------------------------------------------------- balance

struct BalanceArgs {
    std::string image, model, white, dark, mode = "quantitative", sensitivities, out, srgb, color_matrix, bands,
        white_reflectance, manifest;
    std::string cmfs = std::string(HSICAL_DATA_DIR) + "/cie1931_2deg.csv";
    double exposure_image = 0.0, exposure_white = 0.0, exposure_dark = 0.0;
};

int cmd_balance(const BalanceArgs& a) {
    Manifest mf("balance");
    mf.param("mode", a.mode);
    if (a.mode != "quantitative" && a.mode != "relative") throw InvalidArgument("mode must be quantitative or relative");

    std::vector<double> centers;
    std::optional<BandResponseSet> bands;
    if (!a.bands.empty()) {
        mf.input(a.bands);
        bands = load_band_responses(a.bands);
        centers = bands->centers();
    }
    mf.input(a.image);
    LoadedImage img = load_image(a.image, centers);
    std::optional<Hypercube> dark;
    double dark_exposure = 0.0;
    if (!a.dark.empty()) {
        mf.input(a.dark);
        auto d = load_image(a.dark, centers);
        dark = std::move(d.cube);
        dark_exposure = d.exposure_ms;
    }

    std::optional<StoredModel> stored;
    if (!a.model.empty()) {
        mf.input(a.model);
        stored = load_model(a.model);
    }
    std::optional<ContentMask> content = stored ? stored->mask : std::nullopt;

    CubeBalance result{Hypercube(1, 1, 1), 0};
    if (a.mode == "quantitative") {
        Exposures ex;
        ex.image = a.exposure_image > 0 ? a.exposure_image : (img.exposure_ms > 0 ? img.exposure_ms : 1.0);
        ex.dark = a.exposure_dark > 0 ? a.exposure_dark : (dark_exposure > 0 ? dark_exposure : ex.image);
        if (stored) {
            ex.white = a.exposure_white > 0 ? a.exposure_white : ex.image;
            mf.param("exposures", std::vector<double>{ex.image, ex.white, ex.dark});
            result = balance_with_synthetic(img.cube, stored->model, dark, ex, content);
        } else {
            if (a.white.empty()) throw InvalidArgument("quantitative balancing needs --model or --white");
            mf.input(a.white);
            auto w = load_image(a.white, centers);
            ex.white = a.exposure_white > 0 ? a.exposure_white : (w.exposure_ms > 0 ? w.exposure_ms : ex.image);
            mf.param("exposures", std::vector<double>{ex.image, ex.white, ex.dark});
            ReflectivityFactors rho = ReflectivityFactors::uniform(img.cube.bands(), 1.0);
            if (!a.white_reflectance.empty()) {
                if (!bands) throw InvalidArgument("--white-reflectance needs --bands");
                mf.input(a.white_reflectance);
                rho = reflectivity_factors(load_sampled_spectrum(a.white_reflectance), *bands);
            }
            const Hypercube D = dark ? *dark : Hypercube(img.cube.height(), img.cube.width(), img.cube.bands());
            result = white_balance_cube(img.cube, w.cube, D, rho, ex);
        }
    } else {
        std::vector<double> S;
        if (!a.sensitivities.empty()) {
            mf.input(a.sensitivities);
            S = load_band_values(a.sensitivities);
        } else if (stored) {
            S = stored->model.S;
        } else if (!a.white.empty()) {
            mf.input(a.white);
            S = fit_nonparametric(load_image(a.white, centers).cube, PixelMask(img.cube.height(), img.cube.width())).S;
        } else {
            throw InvalidArgument("relative balancing needs --sensitivities, --model or --white");
        }
        const double ratio = (a.exposure_image > 0 && a.exposure_dark > 0) ? a.exposure_image / a.exposure_dark : 1.0;
        result = balance_relative(img.cube, S, dark, ratio);
        if (content) {
            for (int i = 0; i < result.cube.height(); ++i)
                for (int j = 0; j < result.cube.width(); ++j)
                    if (!content->contains(i, j))
                        for (double& v : result.cube.spectrum(i, j)) v = 0.0;
        }
    }

    write_cube(a.out, result.cube);
    mf.output(a.out);
    mf.param("flagged_pixels", result.flagged);
    if (!a.srgb.empty()) {
        if (result.cube.kind() != CubeKind::reflectance) throw InvalidArgument("--srgb needs quantitative balancing");
        const ColorMatrix T = color_matrix(a.color_matrix, a.cmfs, a.bands, mf);
        const RgbImage rgb = cube_to_srgb_image(result.cube, T, content);
        write_png(a.srgb, rgb);
        mf.param("gamut_clipped_pixels", rgb.clipped);
        mf.output(a.srgb);
    }
    mf.write(manifest_path(a.manifest, a.out));
    if (result.flagged) std::cerr << "warning: " << result.flagged << " pixels flagged\n";
    return ok;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string cube, layout, spectra, lab, out, json_out, color_matrix, bands, synthetic, measured, content, manifest;
    std::string cmfs = std::string(HSICAL_DATA_DIR) + "/cie1931_2deg.csv";
    std::vector<std::string> subset;
    double roi_radius = 30.0;
    double shrink = 0.9;
};

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

int cmd_evaluate(const EvaluateArgs& a) {
    Manifest mf("evaluate");
    mf.param("roi_radius", a.roi_radius);
    std::vector<double> centers;
    if (!a.bands.empty()) {
        mf.input(a.bands);
        centers = load_band_responses(a.bands).centers();
    }
    mf.input(a.cube);
    const Hypercube cube = load_image(a.cube, centers).cube;
    mf.input(a.layout);
    mf.input(a.spectra);
    mf.input(a.lab);
    const ColorMatrix T = color_matrix(a.color_matrix, a.cmfs, a.bands, mf);
    const EvaluationReport rep = evaluate_tiles(cube, load_tile_layout(a.layout), load_tile_spectra(a.spectra),
                                                load_tile_lab(a.lab), T, a.roi_radius, a.subset);

    std::optional<ReferenceComparison> cmp;
    if (!a.synthetic.empty() || !a.measured.empty()) {
        if (a.synthetic.empty() || a.measured.empty())
            throw InvalidArgument("reference comparison needs both --synthetic and --measured");
        mf.input(a.synthetic);
        mf.input(a.measured);
        const Hypercube syn = load_image(a.synthetic, centers).cube, mea = load_image(a.measured, centers).cube;
        const ContentMask mask = a.content.empty() ? ContentMask((syn.width() - 1) / 2.0, (syn.height() - 1) / 2.0,
                                                                 std::hypot(syn.height(), syn.width()), 1.0)
                                                   : parse_content(a.content, a.shrink);
        cmp = compare_references(syn, mea, mask);
    }

    {
        std::ofstream csv(a.out, std::ios::trunc);
        if (!csv) throw Error("cannot write " + a.out);
        csv << "tile_id,nrmse_quantitative_pct,nrmse_relative_au,delta_e_median";
        if (cmp) csv << ",medape_sensitivities_pct,medape_pixelwise_pct";
        csv << '\n';
        for (const auto& t : rep.tiles) {
            csv << t.tile_id << ',' << fmt(100.0 * t.nrmse_quant) << ',' << fmt(t.nrmse_relative) << ','
                << fmt(t.delta_e_median);
            if (cmp) csv << ',' << fmt(100.0 * cmp->medape_sensitivities) << ',' << fmt(100.0 * cmp->medape_pixelwise);
            csv << '\n';
        }
    }
    mf.output(a.out);

    ordered_json summary;
    summary["tiles"] = rep.tiles.size();
    summary["mean_nrmse_quantitative_pct"] = 100.0 * rep.mean_nrmse_quant;
    summary["mean_nrmse_relative_au"] = rep.mean_nrmse_relative;
    summary["mean_delta_e_median"] = rep.mean_delta_e;
    if (rep.subset_nrmse_quant) {
        summary["subset"] = a.subset;
        summary["subset_mean_nrmse_quantitative_pct"] = 100.0 * *rep.subset_nrmse_quant;
        summary["subset_mean_nrmse_relative_au"] = *rep.subset_nrmse_relative;
        summary["subset_mean_delta_e_median"] = *rep.subset_delta_e;
    }
    if (cmp) {
        summary["medape_sensitivities_pct"] = 100.0 * cmp->medape_sensitivities;
        summary["medape_pixelwise_pct"] = 100.0 * cmp->medape_pixelwise;
        summary["pixel_nrmse_min"] = cmp->nrmse_per_pixel.min;
        summary["pixel_nrmse_median"] = cmp->nrmse_per_pixel.median;
        summary["pixel_nrmse_max"] = cmp->nrmse_per_pixel.max;
        summary["zero_reference_entries"] = cmp->excluded;
    }
    const fs::path json_out = a.json_out.empty() ? fs::path(a.out).replace_extension(".json") : fs::path(a.json_out);
    {
        std::ofstream js(json_out, std::ios::trunc);
        if (!js) throw Error("cannot write " + json_out.string());
        js << summary.dump(2) << '\n';
    }
    mf.output(json_out);
    mf.write(manifest_path(a.manifest, a.out));
    return ok;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string scenario, out_dir;
    std::string cmfs = std::string(HSICAL_DATA_DIR) + "/cie1931_2deg.csv";
};

int cmd_simulate(const SimulateArgs& a) {
    Manifest mf("simulate");
    mf.input(a.scenario);
    mf.input(a.cmfs);
    ScenarioFile f = load_scenario(a.scenario);
    const SimScenario& sc = f.scenario;
    if (f.tiles.empty()) f.tiles = default_tiles();
    mf.param("seed", sc.seed);

    const fs::path dir = a.out_dir;
    fs::create_directories(dir);
    std::vector<fs::path> outputs;
    auto out = [&](const char* name) {
        outputs.push_back(dir / name);
        return outputs.back();
    };

    const SimulatedSweep sweep = simulate_ruler_sweep(sc);
    write_mosaic_video(out("sweep.hsiv"), sweep.video);
    write_mosaic_frame(out("sweep_truth.hsiv"), sweep.truth);
    write_frame_mask(out("sweep_covered.hsiv"), sweep.covered, sc.layout, sc.exposure_ms);
    mf.param("sweep_frames", sweep.video.frame_count());
    mf.param("sweep_coverage", sweep.coverage);
    if (sweep.incomplete)
        std::cerr << "warning: frame budget too small, ruler covers " << 100.0 * sweep.coverage << "% of the frame\n";

    const SimulatedReference ref = simulate_white_reference(sc);
    write_cube(out("white_reference.hsic"), ref.cube);
    save_model(out("white_truth.csv"), ref.truth, sc.content);

    const SimulatedCheckerboard board = simulate_checkerboard(sc, f.tiles, f.grid);
    write_cube(out("checkerboard.hsic"), board.cube);
    write_tile_layout(out("tile_layout.csv"), board.layout);
    mf.param("roi_radius", board.roi_radius);

    const ColorMatrix T = camera_matrix_from_cmfs(sc.band_responses, load_cmfs(a.cmfs));
    const auto centers = sc.band_responses.centers();
    std::vector<std::size_t> order(centers.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return centers[x] < centers[y]; });
    std::map<std::string, SampledSpectrum> spectra;
    std::map<std::string, LabReference> lab;
    for (const auto& [id, r] : board.reflectance) {
        std::vector<double> wl, v;
        for (std::size_t k : order) {
            wl.push_back(centers[k]);
            v.push_back(r[k]);
        }
        spectra.emplace(id, SampledSpectrum(std::move(wl), std::move(v)));
        const ColorTriple c = xyz_to_lab(spectrum_to_xyz(r, T));
        lab[id] = {c.c1, c.c2, c.c3};
    }
    write_tile_spectra(out("tile_spectra.csv"), spectra);
    write_tile_lab(out("tile_lab.csv"), lab);

    write_band_responses(out("band_responses.csv"), sc.band_responses);
    write_sampled_spectrum(out("light_spectrum.csv"), sc.light_spectrum);
    write_sampled_spectrum(out("ruler_reflectance.csv"), sc.ruler.reflectance);
    write_band_values(out("sensitivities.csv"), true_sensitivities(sc), "ground-truth spectral sensitivities, mean 1");
    write_matrix(out("color_matrix.csv"), T.rows(), "camera matrix: rows X, Y, Z; columns bands");

    for (const auto& p : outputs) mf.output(p);
    mf.write(dir / "manifest.json");
    return ok;
}

void add_composite_params(CLI::App* app, CompositeParams& p) {
    app->add_option("--saturation-fraction", p.saturation_fraction, "Fraction of full scale treated as specular")
        ->capture_default_str();
    app->add_option("--savgol-window", p.savgol_window, "Savitzky-Golay window length")->capture_default_str();
    app->add_option("--savgol-order", p.savgol_order, "Savitzky-Golay polynomial order")->capture_default_str();
    app->add_option("--peak-height", p.peak_min_height_frac, "Minimum peak height, fraction of max |gradient|")
        ->capture_default_str();
    app->add_option("--peak-prominence", p.peak_min_prominence_frac,
                    "Minimum peak prominence, fraction of max |gradient|")
        ->capture_default_str();
    app->add_option("--region-margin", p.region_margin, "Frames trimmed from each region end")->capture_default_str();
    app->add_option("--otsu-bins", p.otsu_bins, "Histogram bins for Otsu thresholding")->capture_default_str();
    app->add_option("--min-separability", p.min_separability, "Minimum Otsu separability for a usable profile")
        ->capture_default_str();
    app->add_option("--max-invalid-fraction", p.max_invalid_fraction, "Abort above this fraction of invalid pixels")
        ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Hyperspectral white-reference calibration", "hsical"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    unsigned threads = 1;
    app.add_option("--threads", threads, "Worker threads (0 = all cores); outputs do not depend on it")
        ->capture_default_str();

    ComposeArgs compose;
    auto* c = app.add_subcommand("compose", "Build a composite white reference from a ruler sweep video");
    c->add_option("video", compose.video, "Sweep video (.hsiv)")->required()->check(CLI::ExistingFile);
    c->add_option("-o,--out", compose.out, "Composite frame (.hsiv)")->required();
    c->add_option("--mask-out", compose.mask_out, "Validity mask frame (default <out>.mask.hsiv)");
    c->add_option("--manifest", compose.manifest, "Run manifest (default <out>.manifest.json)");
    add_composite_params(c, compose.params);

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit a separable white-reference model to a composite");
    f->add_option("composite", fit.composite, "Composite frame (.hsiv)")->required()->check(CLI::ExistingFile);
    f->add_option("--reflectance", fit.reflectance, "Reference object reflectance spectrum (CSV)")
        ->required()
        ->check(CLI::ExistingFile);
    f->add_option("--bands", fit.bands, "Sensor band responses (CSV)")->required()->check(CLI::ExistingFile);
    f->add_option("--method", fit.method, "nonparametric, gaussian-joint or gaussian-sequential")
        ->capture_default_str()
        ->check(CLI::IsMember({"nonparametric", "gaussian-joint", "gaussian-sequential"}));
    f->add_option("-o,--out", fit.out, "Model file (CSV)")->required();
    f->add_option("--valid-mask", fit.valid_mask, "Composite validity mask (default <composite>.mask.hsiv if present)");
    f->add_flag("--no-valid-mask", fit.no_valid_mask, "Use every composite pixel");
    auto* content_opt = f->add_option("--content", fit.content, "Content disk cx,cy,radius in pixels");
    f->add_flag("--detect-content", fit.detect_content, "Detect the content disk from the composite")
        ->excludes(content_opt);
    f->add_option("--shrink", fit.shrink, "Content radius shrink factor")->capture_default_str();
    f->add_option("--manifest", fit.manifest, "Run manifest (default <out>.manifest.json)");

    BalanceArgs bal;
    auto* b = app.add_subcommand("balance", "White balance an image");
    b->add_option("image", bal.image, "Image (.hsic cube or .hsiv frame)")->required()->check(CLI::ExistingFile);
    auto* model_opt = b->add_option("--model", bal.model, "Fitted model (CSV)")->check(CLI::ExistingFile);
    b->add_option("--white", bal.white, "Measured white reference (.hsic or .hsiv)")
        ->check(CLI::ExistingFile)
        ->excludes(model_opt);
    b->add_option("--dark", bal.dark, "Dark reference (.hsic or .hsiv)")->check(CLI::ExistingFile);
    b->add_option("--mode", bal.mode, "quantitative or relative")
        ->capture_default_str()
        ->check(CLI::IsMember({"quantitative", "relative"}));
    b->add_option("--sensitivities", bal.sensitivities, "Spectral sensitivities (CSV band,value)")
        ->check(CLI::ExistingFile);
    b->add_option("--white-reflectance", bal.white_reflectance, "Reflectance spectrum of the measured white target")
        ->check(CLI::ExistingFile);
    b->add_option("--bands", bal.bands, "Sensor band responses (CSV)")->check(CLI::ExistingFile);
    b->add_option("--exposure-image", bal.exposure_image, "Image exposure in ms (default from file, else 1)");
    b->add_option("--exposure-white", bal.exposure_white, "White exposure in ms (default image exposure)");
    b->add_option("--exposure-dark", bal.exposure_dark, "Dark exposure in ms (default image exposure)");
    b->add_option("-o,--out", bal.out, "Balanced cube (.hsic)")->required();
    b->add_option("--srgb", bal.srgb, "Also write an sRGB PNG");
    b->add_option("--color-matrix", bal.color_matrix, "3 x N camera matrix (CSV)")->check(CLI::ExistingFile);
    b->add_option("--cmfs", bal.cmfs, "Colour-matching functions (CSV)")->capture_default_str();
    b->add_option("--manifest", bal.manifest, "Run manifest (default <out>.manifest.json)");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Score a balanced checkerboard cube against tile references");
    e->add_option("cube", ev.cube, "Balanced cube (.hsic)")->required()->check(CLI::ExistingFile);
    e->add_option("--layout", ev.layout, "Tile ROI centres (CSV tile_id,i,j)")->required()->check(CLI::ExistingFile);
    e->add_option("--spectra", ev.spectra, "Tile reference spectra (CSV)")->required()->check(CLI::ExistingFile);
    e->add_option("--lab", ev.lab, "Tile reference Lab (CSV)")->required()->check(CLI::ExistingFile);
    e->add_option("--color-matrix", ev.color_matrix, "3 x N camera matrix (CSV)")->check(CLI::ExistingFile);
    e->add_option("--bands", ev.bands, "Sensor band responses (CSV)")->check(CLI::ExistingFile);
    e->add_option("--cmfs", ev.cmfs, "Colour-matching functions (CSV)")->capture_default_str();
    e->add_option("--roi-radius", ev.roi_radius, "ROI disk radius in pixels")->capture_default_str();
    e->add_option("--subset", ev.subset, "Tile ids for subset means")->delimiter(',');
    e->add_option("--synthetic", ev.synthetic, "Synthetic white reference (.hsic)")->check(CLI::ExistingFile);
    e->add_option("--measured", ev.measured, "Measured white reference (.hsic)")->check(CLI::ExistingFile);
    e->add_option("--content", ev.content, "Content disk cx,cy,radius for reference comparison");
    e->add_option("--shrink", ev.shrink, "Content radius shrink factor")->capture_default_str();
    e->add_option("-o,--out", ev.out, "Per-tile report (CSV)")->required();
    e->add_option("--json", ev.json_out, "Summary (default <out>.json)");
    e->add_option("--manifest", ev.manifest, "Run manifest (default <out>.manifest.json)");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Generate a synthetic acquisition with ground truth");
    s->add_option("scenario", sim.scenario, "Scenario (JSON)")->required()->check(CLI::ExistingFile);
    s->add_option("-o,--out-dir", sim.out_dir, "Output directory")->required();
    s->add_option("--cmfs", sim.cmfs, "Colour-matching functions (CSV)")->capture_default_str();

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& ex) {
        std::cout << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp& ex) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::CallForVersion& ex) {
        std::cout << kVersion << '\n';
        return ok;
    } catch (const CLI::ParseError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return input_error;
    }

    set_thread_count(threads);
    try {
        if (*c) return cmd_compose(compose);
        if (*f) return cmd_fit(fit);
        if (*b) return cmd_balance(bal);
        if (*e) return cmd_evaluate(ev);
        if (*s) return cmd_simulate(sim);
    } catch (const CoverageError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return coverage_error;
    } catch (const DetectionError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return coverage_error;
    } catch (const ParseError& ex) {
        std::cerr << "parse error: " << ex.what() << '\n';
        return input_error;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return input_error;
    }
    return input_error;
}

}  // namespace hsical::cli
