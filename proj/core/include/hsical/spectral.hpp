#pragma once

#include "hsical/types.hpp"

namespace hsical {

/// Response-weighted average of f over a band:
///   integral f(l) b(l) dl / integral b(l) dl
/// using the trapezoidal rule on the union of both sample grids, restricted to
/// the support of b. Throws InvalidArgument if f's sampled range does not
/// cover that support or the band integral is zero.
double band_average(const SampledSpectrum& f, const SampledSpectrum& band);

/// Trapezoidal integral of a sampled curve over its own grid.
double trapezoid(const SampledSpectrum& s);

}  // namespace hsical
