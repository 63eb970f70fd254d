#include <doctest.h>

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "cli.hpp"
#include "hsical/io.hpp"
#include "hsical/parallel.hpp"
#include "support.hpp"

using namespace hsical;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "hsical");
    return cli::run(args);
}

void write_scenario(const fs::path& p, double sigma = 300) {
    std::ofstream(p) << R"({"height": 64, "width": 96, "M": 700, "seed": 7,
        "light_spectrum": {"blackbody_k": 3200, "range_nm": [380, 780]},
        "vignetting": {"mu_i": 30, "mu_j": 50, "sigma": )"
                     << sigma << R"(},
        "noise": {"kind": "gaussian", "sigma_frac": 0.01},
        "ruler": {"reflectance": {"wavelength_nm": [380, 780], "value": [0.8, 0.95]}, "width_px": 24, "speed": 3},
        "checkerboard": {"rows": 2, "cols": 3, "roi_radius": 6}})";
}

// Runs the whole workflow into `out` and returns every produced file.
std::vector<fs::path> pipeline(const fs::path& out, int threads, const fs::path& scenario) {
    const std::string t = std::to_string(threads);
    const auto s = out / "sim";
    REQUIRE(run({"--threads", t, "simulate", scenario.string(), "-o", s.string()}) == cli::ok);
    REQUIRE(run({"--threads", t, "compose", (s / "sweep.hsiv").string(), "-o", (out / "comp.hsiv").string()}) ==
            cli::ok);
    REQUIRE(run({"--threads", t, "fit", (out / "comp.hsiv").string(), "--reflectance",
                 (s / "ruler_reflectance.csv").string(), "--bands", (s / "band_responses.csv").string(), "--method",
                 "gaussian-joint", "-o", (out / "model.csv").string()}) == cli::ok);
    REQUIRE(run({"--threads", t, "balance", (s / "checkerboard.hsic").string(), "--model",
                 (out / "model.csv").string(), "--mode", "quantitative", "-o", (out / "bal.hsic").string(),
                 "--srgb", (out / "bal.png").string(), "--color-matrix", (s / "color_matrix.csv").string()}) ==
            cli::ok);
    REQUIRE(run({"--threads", t, "balance", (s / "checkerboard.hsic").string(), "--mode", "relative",
                 "--sensitivities", (s / "sensitivities.csv").string(), "-o", (out / "rel.hsic").string()}) ==
            cli::ok);
    REQUIRE(run({"--threads", t, "evaluate", (out / "bal.hsic").string(), "--layout",
                 (s / "tile_layout.csv").string(), "--spectra", (s / "tile_spectra.csv").string(), "--lab",
                 (s / "tile_lab.csv").string(), "--color-matrix", (s / "color_matrix.csv").string(), "--roi-radius",
                 "6", "-o", (out / "report.csv").string()}) == cli::ok);
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(out))
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), out));
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run({}) == cli::input_error);
    CHECK(run({"frobnicate"}) == cli::input_error);
    CHECK(run({"--help"}) == cli::ok);
    CHECK(run({"fit", "/nonexistent.hsiv", "--reflectance", "x", "--bands", "y", "-o", "z"}) == cli::input_error);
    testing::TempDir dir;
    std::ofstream(dir / "bad.json") << R"({"hieght": 10})";
    CHECK(run({"simulate", (dir / "bad.json").string(), "-o", (dir / "o").string()}) == cli::input_error);
    std::ofstream(dir / "junk.hsiv") << "not a video";
    CHECK(run({"compose", (dir / "junk.hsiv").string(), "-o", (dir / "c.hsiv").string()}) == cli::input_error);
}

TEST_CASE("compose exit code for an uncovered sweep") {
    testing::TempDir dir;
    MosaicVideo v(8, 8, MosaicLayout::sequential(4, 4), 1.0, 10, 30);
    write_mosaic_video(dir / "bg.hsiv", v);
    CHECK(run({"compose", (dir / "bg.hsiv").string(), "-o", (dir / "c.hsiv").string()}) == cli::coverage_error);
}

TEST_CASE("full workflow with manifests") {
    testing::TempDir dir;
    write_scenario(dir / "sc.json");
    auto files = pipeline(dir.path(), 1, dir / "sc.json");
    CHECK(files.size() > 20);

    std::ifstream in(dir / "model.csv.manifest.json");
    auto mf = nlohmann::json::parse(in);
    CHECK(mf["command"] == "fit");
    CHECK(mf["parameters"]["method"] == "gaussian-joint");
    CHECK(mf["parameters"]["converged"] == true);
    bool found = false;
    for (const auto& i : mf["inputs"])
        if (i["file"] == "comp.hsiv") {
            found = true;
            CHECK(i["sha256"] == cli::sha256_file((dir / "comp.hsiv").string()));
        }
    CHECK(found);

    std::ifstream rep(dir / "report.csv");
    std::string header, line;
    std::getline(rep, header);
    CHECK(header.rfind("tile_id,nrmse_quantitative_pct,nrmse_relative_au,delta_e_median", 0) == 0);
    int rows = 0;
    while (std::getline(rep, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 6);

    CHECK(cli::sha256_file((dir / "sc.json").string()).size() == 64);
}

TEST_CASE("outputs are byte-identical across reruns and thread counts") {
    testing::TempDir a, b;
    write_scenario(a / "sc.json");
    write_scenario(b / "sc.json");
    auto fa = pipeline(a.path(), 1, a / "sc.json");
    auto fb = pipeline(b.path(), 3, b / "sc.json");
    REQUIRE(fa == fb);
    for (const auto& f : fa) {
        INFO(f.string());
        CHECK(cli::sha256_file((a.path() / f).string()) == cli::sha256_file((b.path() / f).string()));
    }
    set_thread_count(1);
}
