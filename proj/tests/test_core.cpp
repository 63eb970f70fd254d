#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "hsical/error.hpp"
#include "hsical/io.hpp"
#include "hsical/parallel.hpp"
#include "hsical/spectral.hpp"
#include "hsical/types.hpp"
#include "support.hpp"

using namespace hsical;

namespace {

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream(p) << s;
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("mosaic layout is a bijection") {
    auto seq = MosaicLayout::sequential(4, 4);
    for (int n = 0; n < 16; ++n) {
        auto [r, c] = seq.site_of(n);
        CHECK(seq.band_at(r, c) == n);
    }
    std::vector<int> perm(16);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937 rng(3);
    std::shuffle(perm.begin(), perm.end(), rng);
    MosaicLayout l(4, 4, perm);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            auto [r, c] = l.site_of(l.band_at(y, x));
            CHECK(r == y % 4);
            CHECK(c == x % 4);
        }
    CHECK_THROWS_AS(MosaicLayout(2, 2, {0, 1, 1, 3}), InvalidArgument);
    CHECK_THROWS_AS(MosaicLayout(2, 2, {0, 1, 2}), InvalidArgument);
    CHECK_THROWS_AS(MosaicLayout(2, 2, {0, 1, 2, 4}), InvalidArgument);
}

TEST_CASE("frame geometry must tile the pattern") {
    CHECK_THROWS_AS(MosaicFrame::filled(6, 8, MosaicLayout::sequential(4, 4), 0.0f, 1.0, 10), InvalidArgument);
    auto f = MosaicFrame::filled(8, 8, MosaicLayout::sequential(4, 4), 1023.0f, 1.0, 10);
    CHECK_NOTHROW(f.validate_counts());
    f.at(2, 3) = 1024.0f;
    CHECK_THROWS_AS(f.validate_counts(), InvalidArgument);
}

TEST_CASE("cube round trip") {
    testing::TempDir dir;
    SUBCASE("zeros") {
        Hypercube c(2, 2, 2);
        write_cube(dir / "z.hsic", c);
        auto r = read_cube(dir / "z.hsic");
        CHECK(r.same_shape(c));
        for (double v : r.data()) CHECK(v == 0.0);
    }
    SUBCASE("values, kind and centers") {
        Hypercube c(3, 5, 4, CubeKind::reflectance, {450, 500, 550.5, 600});
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<float> u(-10, 10);
        for (double& v : c.data()) v = u(rng);
        write_cube(dir / "c.hsic", c);
        auto r = read_cube(dir / "c.hsic");
        CHECK(r.kind() == CubeKind::reflectance);
        CHECK(r.band_centers() == c.band_centers());
        CHECK(std::equal(r.data().begin(), r.data().end(), c.data().begin()));
        CHECK(sniff_magic(dir / "c.hsic") == "HSIC");
    }
    SUBCASE("full-size payload") {
        Hypercube c(1088, 2048, 16);
        std::fill(c.data().begin(), c.data().end(), 0.5);
        write_cube(dir / "big.hsic", c);
        CHECK(fs::file_size(dir / "big.hsic") == kCubeHeaderSize + 4u * 16 + 4ull * 1088 * 2048 * 16);
        auto r = read_cube(dir / "big.hsic");
        CHECK(std::all_of(r.data().begin(), r.data().end(), [](double v) { return v == 0.5; }));
    }
}

TEST_CASE("cube format errors") {
    testing::TempDir dir;
    Hypercube c(2, 3, 2);
    write_cube(dir / "c.hsic", c);
    auto bytes = slurp(dir / "c.hsic");

    auto bad = bytes;
    std::copy_n("XXXX", 4, bad.begin());
    spit(dir / "magic.hsic", bad);
    CHECK_THROWS_AS(read_cube(dir / "magic.hsic"), FormatError);
    CHECK(sniff_magic(dir / "magic.hsic").empty());

    bad = bytes;
    bad.resize(bad.size() - 3);
    spit(dir / "short.hsic", bad);
    try {
        read_cube(dir / "short.hsic");
        FAIL("truncated cube accepted");
    } catch (const FormatError& e) {
        CHECK(e.offset() == kCubeHeaderSize);
    }

    bad = bytes;
    bad.push_back(0);
    spit(dir / "long.hsic", bad);
    CHECK_THROWS_AS(read_cube(dir / "long.hsic"), FormatError);

    bad = bytes;
    for (int k = 8; k < 20; ++k) bad[k] = static_cast<char>(0xff);
    spit(dir / "huge.hsic", bad);
    CHECK_THROWS_AS(read_cube(dir / "huge.hsic"), FormatError);

    CHECK_THROWS_AS(read_cube(dir / "missing.hsic"), Error);
}

TEST_CASE("video round trip") {
    testing::TempDir dir;
    const auto layout = MosaicLayout(2, 2, {3, 1, 0, 2});
    std::vector<MosaicFrame> frames;
    for (int k = 0; k < 30; ++k) frames.push_back(MosaicFrame::filled(64, 64, layout, float(k), 12.5, 10));
    auto v = MosaicVideo::from_frames(frames);
    write_mosaic_video(dir / "v.hsiv", v);
    auto r = read_mosaic_video(dir / "v.hsiv");
    CHECK(r.frame_count() == 30);
    CHECK(r.layout() == layout);
    CHECK(r.exposure_ms() == 12.5);
    CHECK(r.bit_depth() == 10);
    for (int k = 0; k < 30; ++k) {
        auto fd = r.frame_data(k);
        CHECK(std::all_of(fd.begin(), fd.end(), [k](float x) { return x == float(k); }));
    }

    auto single = MosaicFrame::filled(8, 8, MosaicLayout::sequential(4, 4), 7.0f, 3.0, 12);
    single.at(5, 6) = 11.0f;
    write_mosaic_frame(dir / "f.hsiv", single);
    auto back = read_mosaic_frame(dir / "f.hsiv");
    CHECK(std::equal(back.data().begin(), back.data().end(), single.data().begin()));
    CHECK(back.bit_depth() == 12);
    CHECK_THROWS_AS(read_mosaic_frame(dir / "v.hsiv"), Error);
}

TEST_CASE("video truncation and mismatched frames") {
    testing::TempDir dir;
    MosaicVideo v(8, 8, MosaicLayout::sequential(4, 4), 1.0, 10, 5);
    write_mosaic_video(dir / "v.hsiv", v);
    auto bytes = slurp(dir / "v.hsiv");
    bytes.resize(bytes.size() - 4 * 64);
    spit(dir / "t.hsiv", bytes);
    CHECK_THROWS_AS(read_mosaic_video(dir / "t.hsiv"), FormatError);

    std::vector<MosaicFrame> frames{MosaicFrame::filled(8, 8, MosaicLayout::sequential(4, 4), 0, 1, 10),
                                    MosaicFrame::filled(8, 12, MosaicLayout::sequential(4, 4), 0, 1, 10)};
    try {
        MosaicVideo::from_frames(frames);
        FAIL("mismatched frames accepted");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("frame 1") != std::string::npos);
    }
}

TEST_CASE("sampled spectrum csv") {
    testing::TempDir dir;
    write_text(dir / "flat.csv", "wavelength_nm,value\n400,0.5\n700,0.5\n");
    auto s = load_sampled_spectrum(dir / "flat.csv");
    CHECK(s.size() == 2);
    CHECK(s.value_at(550) == doctest::Approx(0.5));
    CHECK(s.value_at(399) == 0.0);

    write_text(dir / "rev.csv", "wavelength_nm,value\n700,0.5\n400,0.5\n");
    try {
        load_sampled_spectrum(dir / "rev.csv");
        FAIL("out-of-order spectrum accepted");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    write_text(dir / "dup.csv", "wavelength_nm,value\n# comment\n400,0.5\n400,0.6\n");
    CHECK_THROWS_AS(load_sampled_spectrum(dir / "dup.csv"), ParseError);
    write_text(dir / "junk.csv", "wavelength_nm,value\n400,abc\n500,1\n");
    CHECK_THROWS_AS(load_sampled_spectrum(dir / "junk.csv"), ParseError);

    std::string fine = "wavelength_nm,value\n";
    for (int w = 400; w <= 700; ++w) fine += std::to_string(w) + "," + std::to_string(w / 1000.0) + "\n";
    write_text(dir / "fine.csv", fine);
    auto f = load_sampled_spectrum(dir / "fine.csv");
    CHECK(f.size() == 301);
    CHECK(f.min_wavelength() == 400);
    CHECK(f.max_wavelength() == 700);

    write_sampled_spectrum(dir / "out.csv", f);
    auto g = load_sampled_spectrum(dir / "out.csv");
    CHECK(g.wavelengths() == f.wavelengths());
    CHECK(g.values() == f.values());
}

TEST_CASE("tabular csv round trips") {
    testing::TempDir dir;
    auto bands = testing::small_scenario().band_responses;
    write_band_responses(dir / "b.csv", bands);
    auto b2 = load_band_responses(dir / "b.csv");
    REQUIRE(b2.size() == bands.size());
    for (int n = 0; n < bands.size(); ++n) CHECK(b2[n].values() == bands[n].values());

    std::vector<TileRoi> layout{{"A1", {{10, 12}, {3, 4}}}, {"B", {{1, 1}}}};
    write_tile_layout(dir / "l.csv", layout);
    auto l2 = load_tile_layout(dir / "l.csv");
    REQUIRE(l2.size() == 2);
    CHECK(l2[0].tile_id == "A1");
    CHECK(l2[0].centers == layout[0].centers);

    std::map<std::string, LabReference> lab{{"A1", {50, 1.5, -2}}, {"B", {20, 0, 0}}};
    write_tile_lab(dir / "lab.csv", lab);
    auto lab2 = load_tile_lab(dir / "lab.csv");
    CHECK(lab2.at("A1").b == -2);

    std::vector<double> vals{1.0 / 3, 2.5, 1e-17};
    write_band_values(dir / "v.csv", vals, "header comment");
    CHECK(load_band_values(dir / "v.csv") == vals);

    std::vector<std::vector<double>> m{{1, 2, 3}, {4, 5, 6.125}};
    write_matrix(dir / "m.csv", m);
    CHECK(load_matrix(dir / "m.csv") == m);
    write_text(dir / "ragged.csv", "1,2,3\n4,5\n");
    CHECK_THROWS_AS(load_matrix(dir / "ragged.csv"), ParseError);

    write_text(dir / "gap.csv", "band,wavelength_nm,value\n0,400,1\n0,401,1\n2,400,1\n2,401,1\n");
    CHECK_THROWS_AS(load_band_responses(dir / "gap.csv"), ParseError);
}

TEST_CASE("band average by trapezoid") {
    SampledSpectrum t({600, 700}, {0.6, 0.8});
    SampledSpectrum box({600, 700}, {1, 1});
    CHECK(band_average(t, box) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(band_average(SampledSpectrum::constant(300, 1100, 0.8), box) == doctest::Approx(0.8));
    SampledSpectrum narrow({549.9, 550, 550.1}, {0, 1, 0});
    SampledSpectrum ramp({400, 700}, {0.0, 3.0});
    CHECK(band_average(ramp, narrow) == doctest::Approx(ramp.value_at(550)).epsilon(1e-9));
    CHECK_THROWS_AS(band_average(SampledSpectrum({620, 700}, {1, 1}), box), InvalidArgument);
}

TEST_CASE("parallel reduce is independent of thread count") {
    std::vector<double> x(100000);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto& v : x) v = u(rng) * 1e6;
    auto sum = [&] {
        return parallel_reduce(
            x.size(), 4096, 0.0,
            [&](std::size_t b, std::size_t e) {
                double s = 0;
                for (std::size_t k = b; k < e; ++k) s += x[k];
                return s;
            },
            [](double& a, double p) { a += p; });
    };
    set_thread_count(1);
    const double one = sum();
    set_thread_count(4);
    const double four = sum();
    set_thread_count(1);
    CHECK(one == four);
}
