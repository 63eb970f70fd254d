#include <benchmark/benchmark.h>

#include <cmath>

#include "hsical/composite.hpp"
#include "hsical/mosaic.hpp"
#include "hsical/refmodel.hpp"
#include "hsical/sim.hpp"

using namespace hsical;

namespace {

SimScenario scenario(int H, int W) {
    SimScenario sc;
    sc.height = H;
    sc.width = W;
    sc.vignetting = {H / 2.0, W / 2.0, 0.6 * std::hypot(H, W)};
    return sc;
}

void BM_Composite(benchmark::State& state) {
    auto sc = scenario(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
    sc.ruler.speed = 4;
    const auto sweep = simulate_ruler_sweep(sc);
    for (auto _ : state) benchmark::DoNotOptimize(build_composite(sweep.video, {}));
    state.SetItemsProcessed(state.iterations() * sweep.video.data().size());
}
BENCHMARK(BM_Composite)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Demosaic(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto frame = MosaicFrame::filled(n, n, MosaicLayout::sequential(4, 4), 100.0f, 1.0, 10);
    for (auto _ : state) benchmark::DoNotOptimize(demosaic_bilinear(frame));
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Demosaic)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Fit(benchmark::State& state) {
    const auto method = static_cast<FitMethod>(state.range(0));
    const auto sc = scenario(256, 512);
    const auto ref = simulate_white_reference(sc);
    const PixelMask all(sc.height, sc.width);
    for (auto _ : state) benchmark::DoNotOptimize(fit_model(method, ref.cube, all));
    state.SetLabel(to_string(method));
}
BENCHMARK(BM_Fit)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_Render(benchmark::State& state) {
    const auto sc = scenario(512, 1024);
    const auto model = true_reference_model(sc);
    for (auto _ : state) benchmark::DoNotOptimize(render_reference(model, sc.height, sc.width));
}
BENCHMARK(BM_Render)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
