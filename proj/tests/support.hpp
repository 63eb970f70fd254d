#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "hsical/sim.hpp"
#include "hsical/types.hpp"

namespace testing {

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("hsical-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline hsical::Hypercube separable_cube(int H, int W, const std::vector<double>& S, double M,
                                        const hsical::GaussianVignetting& v) {
    hsical::Hypercube c(H, W, static_cast<int>(S.size()));
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            for (int n = 0; n < static_cast<int>(S.size()); ++n) c.at(i, j, n) = M * S[n] * v(i, j);
    return c;
}

inline std::vector<double> random_sensitivities(std::mt19937_64& rng, int N) {
    std::uniform_real_distribution<double> u(0.3, 1.7);
    std::vector<double> S(N);
    double mean = 0.0;
    for (auto& s : S) mean += (s = u(rng));
    mean /= N;
    for (auto& s : S) s /= mean;
    return S;
}

// Noise-free scenario with a warm light and a slightly tinted ruler.
inline hsical::SimScenario small_scenario(int H = 64, int W = 96) {
    hsical::SimScenario sc;
    sc.height = H;
    sc.width = W;
    sc.light_spectrum = hsical::blackbody_spectrum(3200.0, 380.0, 780.0);
    sc.vignetting = {H / 2.0, W / 2.0, 0.8 * std::hypot(H, W)};
    sc.M = 700.0;
    sc.noise.kind = hsical::NoiseModel::Kind::none;
    sc.ruler.reflectance = hsical::SampledSpectrum({380.0, 780.0}, {0.8, 0.95});
    sc.ruler.width_px = 24;
    sc.ruler.speed = 3.0;
    return sc;
}

}  // namespace testing
