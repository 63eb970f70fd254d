#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hsical/composite.hpp"
#include "hsical/error.hpp"
#include "hsical/metrics.hpp"
#include "hsical/parallel.hpp"
#include "hsical/sim.hpp"
#include "support.hpp"

using namespace hsical;

namespace {

std::vector<double> step_profile(int lo = 10, int hi = 19, int T = 30) {
    std::vector<double> v(T, 20.0);
    for (int t = lo; t <= hi; ++t) v[t] = 200.0;
    return v;
}

MosaicVideo video_of(const std::vector<double>& profile, int H = 8, int W = 8) {
    const int T = static_cast<int>(profile.size());
    MosaicVideo v(H, W, MosaicLayout::sequential(4, 4), 10.0, 10, T);
    std::vector<float> data(static_cast<std::size_t>(H) * W * T);
    for (int t = 0; t < T; ++t)
        for (std::size_t p = 0; p < v.frame_size(); ++p) data[t * v.frame_size() + p] = float(profile[t]);
    return MosaicVideo(H, W, v.layout(), 10.0, 10, T, std::move(data));
}

}  // namespace

TEST_CASE("step profile yields one region") {
    auto p = segment_reference_regions(step_profile(), {}, 10);
    REQUIRE(p.regions.size() == 1);
    CHECK(p.regions[0] == FrameRegion{11, 18});
    CHECK(p.threshold > 20);
    CHECK(p.threshold <= 200);
    CHECK(region_median(p) == 200.0);
}

TEST_CASE("shifted step") {
    auto p = segment_reference_regions(step_profile(13, 22), {}, 10);
    REQUIRE(p.regions.size() == 1);
    CHECK(p.regions[0] == FrameRegion{14, 21});
}

TEST_CASE("constant profile has no regions") {
    auto p = segment_reference_regions(std::vector<double>(30, 20.0), {}, 10);
    CHECK(p.regions.empty());
    CHECK(std::isnan(region_median(p)));
}

TEST_CASE("saturated sample inside the region") {
    auto v = step_profile();
    v[14] = 1023;
    auto p = segment_reference_regions(v, {}, 10);
    REQUIRE(p.regions.size() == 1);
    CHECK(p.regions[0] == FrameRegion{11, 18});
    CHECK(p.preprocessed[14] == 0.0);
    CHECK(region_median(p) == 200.0);
}

TEST_CASE("two-frame pulse averages its samples") {
    std::vector<double> v(30, 20.0);
    v[12] = 200;
    v[13] = 210;
    auto p = segment_reference_regions(v, {}, 10);
    REQUIRE(p.regions.size() == 1);
    CHECK(p.regions[0] == FrameRegion{12, 13});
    CHECK(region_median(p) == 205.0);
}

TEST_CASE("profile shorter than the window") {
    CHECK_THROWS_AS(segment_reference_regions(std::vector<double>(10, 1.0), {}, 10), InvalidArgument);
    CompositeParams bad;
    bad.savgol_window = 14;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("composite of a uniform step video") {
    auto r = build_composite(video_of(step_profile()), {});
    CHECK(r.invalid_count == 0);
    CHECK(r.coverage == 1.0);
    for (float v : r.composite.data()) CHECK(v == 200.0f);

    auto sat = step_profile();
    sat[15] = 1023;
    auto rs = build_composite(video_of(sat), {});
    for (float v : rs.composite.data()) CHECK(v == 200.0f);
}

TEST_CASE("background-only video fails coverage") {
    try {
        build_composite(video_of(std::vector<double>(30, 20.0)), {});
        FAIL("background video accepted");
    } catch (const CoverageError& e) {
        CHECK(e.coverage() == 0.0);
    }
}

TEST_CASE("noiseless simulated sweep reproduces the truth") {
    auto sc = testing::small_scenario();
    auto sweep = simulate_ruler_sweep(sc);
    CHECK_FALSE(sweep.incomplete);
    auto r = build_composite(sweep.video, {});
    std::size_t compared = 0;
    for (std::size_t p = 0; p < r.composite.data().size(); ++p)
        if (sweep.covered[p] && r.valid[p]) {
            CHECK(r.composite.data()[p] == sweep.truth.data()[p]);
            ++compared;
        }
    CHECK(compared == sweep.covered.count());
}

TEST_CASE("noisy sweeps stay close to the truth") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto sc = testing::small_scenario();
        sc.noise.kind = NoiseModel::Kind::gaussian;
        sc.seed = seed;
        auto sweep = simulate_ruler_sweep(sc);
        auto r = build_composite(sweep.video, {});
        std::vector<double> u, ref;
        for (std::size_t p = 0; p < r.composite.data().size(); ++p)
            if (r.valid[p]) {
                u.push_back(r.composite.data()[p]);
                ref.push_back(sweep.truth.data()[p]);
            }
        CHECK(medape(u, ref).value < 0.02);
    }
}

TEST_CASE("fast sweep with two frames per pixel") {
    auto sc = testing::small_scenario();
    sc.ruler.width_px = 8;
    sc.ruler.speed = 4;
    sc.ruler.lead_frames = 8;
    sc.noise.kind = NoiseModel::Kind::gaussian;
    auto sweep = simulate_ruler_sweep(sc);
    auto r = build_composite(sweep.video, {});
    std::vector<double> u, ref;
    for (std::size_t p = 0; p < r.composite.data().size(); ++p)
        if (r.valid[p]) {
            u.push_back(r.composite.data()[p]);
            ref.push_back(sweep.truth.data()[p]);
        }
    CHECK(r.coverage > 0.6);
    CHECK(medape(u, ref).value < 0.03);
}

TEST_CASE("composite is independent of the thread count") {
    auto sc = testing::small_scenario();
    sc.noise.kind = NoiseModel::Kind::gaussian;
    sc.ruler.specular_probability = 0.02;
    auto sweep = simulate_ruler_sweep(sc);
    set_thread_count(1);
    auto a = build_composite(sweep.video, {});
    set_thread_count(3);
    auto b = build_composite(sweep.video, {});
    set_thread_count(1);
    CHECK(std::equal(a.composite.data().begin(), a.composite.data().end(), b.composite.data().begin()));
}
