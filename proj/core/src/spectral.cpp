#include "hsical/spectral.hpp"

#include <algorithm>
#include <string>

#include "hsical/error.hpp"

namespace hsical {

double band_average(const SampledSpectrum& f, const SampledSpectrum& band) {
    const auto [lo, hi] = band.support();
    if (!(hi > lo)) throw InvalidArgument("band response has empty support");
    if (!f.covers(lo, hi))
        throw InvalidArgument("spectrum range [" + std::to_string(f.min_wavelength()) + ", " +
                              std::to_string(f.max_wavelength()) + "] nm does not cover band support [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "] nm");

    std::vector<double> grid;
    grid.reserve(f.size() + band.size() + 2);
    grid.push_back(lo);
    grid.push_back(hi);
    for (double w : f.wavelengths())
        if (w > lo && w < hi) grid.push_back(w);
    for (double w : band.wavelengths())
        if (w > lo && w < hi) grid.push_back(w);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    double num = 0.0, den = 0.0;
    double prev_b = band.value_at(grid[0]);
    double prev_fb = f.value_at(grid[0]) * prev_b;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double dw = grid[k] - grid[k - 1];
        const double b = band.value_at(grid[k]);
        const double fb = f.value_at(grid[k]) * b;
        num += 0.5 * (fb + prev_fb) * dw;
        den += 0.5 * (b + prev_b) * dw;
        prev_b = b;
        prev_fb = fb;
    }
    if (!(den > 0.0)) throw InvalidArgument("band response integrates to zero");
    return num / den;
}

double trapezoid(const SampledSpectrum& s) {
    double acc = 0.0;
    for (std::size_t k = 1; k < s.size(); ++k)
        acc += 0.5 * (s.values()[k] + s.values()[k - 1]) * (s.wavelengths()[k] - s.wavelengths()[k - 1]);
    return acc;
}

}  // namespace hsical
