#include "hsical/mosaic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsical/error.hpp"
#include "hsical/parallel.hpp"

namespace hsical {

CrosstalkMatrix::CrosstalkMatrix(int size, std::vector<double> rows) : size_(size), m_(std::move(rows)) {
    if (size <= 0) throw InvalidArgument("crosstalk matrix must be non-empty");
    if (m_.size() != static_cast<std::size_t>(size) * size) throw InvalidArgument("crosstalk matrix must be square");
}

CrosstalkMatrix CrosstalkMatrix::identity(int size) {
    std::vector<double> m(static_cast<std::size_t>(size) * size, 0.0);
    for (int k = 0; k < size; ++k) m[static_cast<std::size_t>(k) * size + k] = 1.0;
    return CrosstalkMatrix(size, std::move(m));
}

CrosstalkMatrix CrosstalkMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const int n = static_cast<int>(rows.size());
    std::vector<double> m;
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != n) throw InvalidArgument("crosstalk matrix must be square");
        m.insert(m.end(), r.begin(), r.end());
    }
    return CrosstalkMatrix(n, std::move(m));
}

MosaicFrame dark_exposure_correct(const MosaicFrame& frame, const MosaicFrame& dark) {
    if (!frame.same_geometry(dark)) throw InvalidArgument("frame and dark differ in geometry or layout");
    if (!(frame.exposure_ms() > 0.0) || !(dark.exposure_ms() > 0.0))
        throw InvalidArgument("exposure times must be positive");
    const double k = frame.exposure_ms() / dark.exposure_ms();
    std::vector<float> out(frame.data().size());
    auto src = frame.data();
    auto d = dark.data();
    for (std::size_t p = 0; p < out.size(); ++p)
        out[p] = static_cast<float>(std::max(0.0, static_cast<double>(src[p]) - k * d[p]));
    return MosaicFrame(frame.height(), frame.width(), frame.layout(), std::move(out), frame.exposure_ms(),
                       frame.bit_depth());
}

MosaicBalance white_balance_mosaic(const MosaicFrame& image, const MosaicFrame& white, const MosaicFrame& dark,
                                   const ReflectivityFactors& rho) {
    if (!image.same_geometry(white) || !image.same_geometry(dark))
        throw InvalidArgument("image, white and dark differ in geometry or layout");
    if (rho.size() != image.layout().band_count()) throw InvalidArgument("reflectivity factor count mismatch");
    if (!(image.exposure_ms() > 0.0) || !(white.exposure_ms() > 0.0) || !(dark.exposure_ms() > 0.0))
        throw InvalidArgument("exposure times must be positive");

    const double kw = image.exposure_ms() / white.exposure_ms();
    const double kd = image.exposure_ms() / dark.exposure_ms();
    const int H = image.height(), W = image.width();
    std::vector<float> out(static_cast<std::size_t>(H) * W);
    std::size_t bad = 0;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * W + x;
            const double num = std::max(0.0, image.data()[p] - kd * dark.data()[p]);
            const double den = kw * white.data()[p] - kd * dark.data()[p];
            if (!(den > 0.0)) {
                ++bad;
                out[p] = 0.0f;
                continue;
            }
            out[p] = static_cast<float>(rho[image.layout().band_at(y, x)] * num / den);
        }
    }
    if (bad * 100 > out.size())
        throw CalibrationError(std::to_string(bad) + " of " + std::to_string(out.size()) +
                               " pixels have a non-positive white-minus-dark denominator");
    return {MosaicFrame(H, W, image.layout(), std::move(out), image.exposure_ms(), image.bit_depth()), bad};
}

namespace {

// Interpolation stencil along one axis for one band: lower/upper lattice index
// and the weight of the upper one.
struct AxisStencil {
    int lo, hi;
    double w;
    bool clamped;
};

std::vector<AxisStencil> axis_stencil(int length, int period, int offset) {
    const int count = length / period;
    std::vector<AxisStencil> s(length);
    for (int p = 0; p < length; ++p) {
        const int rel = p - offset;
        if (rel <= 0) {
            s[p] = {0, 0, 0.0, rel < 0};
        } else if (rel >= (count - 1) * period) {
            s[p] = {count - 1, count - 1, 0.0, rel > (count - 1) * period};
        } else {
            const int a = rel / period;
            const int r = rel - a * period;
            s[p] = {a, r == 0 ? a : a + 1, static_cast<double>(r) / period, false};
        }
    }
    return s;
}

}  // namespace

Hypercube demosaic_bilinear(const MosaicFrame& frame, std::vector<double> band_centers) {
    const auto& layout = frame.layout();
    const int H = frame.height(), W = frame.width(), N = layout.band_count();
    const int pr = layout.rows(), pc = layout.cols();
    Hypercube cube(H, W, N, CubeKind::intensity, std::move(band_centers));

    std::vector<std::vector<AxisStencil>> rows(N), cols(N);
    for (int n = 0; n < N; ++n) {
        auto [r0, c0] = layout.site_of(n);
        rows[n] = axis_stencil(H, pr, r0);
        cols[n] = axis_stencil(W, pc, c0);
    }

    auto src = frame.data();
    parallel_for(static_cast<std::size_t>(H), [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            for (int n = 0; n < N; ++n) {
                auto [r0, c0] = layout.site_of(n);
                const AxisStencil& sy = rows[n][i];
                const float* lo = src.data() + static_cast<std::size_t>(r0 + sy.lo * pr) * W + c0;
                const float* hi = src.data() + static_cast<std::size_t>(r0 + sy.hi * pr) * W + c0;
                const auto& cs = cols[n];
                for (int j = 0; j < W; ++j) {
                    const AxisStencil& sx = cs[j];
                    const double top = (1.0 - sx.w) * lo[sx.lo * pc] + sx.w * lo[sx.hi * pc];
                    const double bot = (1.0 - sx.w) * hi[sx.lo * pc] + sx.w * hi[sx.hi * pc];
                    cube.at(static_cast<int>(i), j, n) = (1.0 - sy.w) * top + sy.w * bot;
                }
            }
        }
    }, 8);
    return cube;
}

PixelMask demosaic_validity(const PixelMask& sites, const MosaicLayout& layout) {
    const int H = sites.height(), W = sites.width(), N = layout.band_count();
    const int pr = layout.rows(), pc = layout.cols();
    PixelMask out(H, W, true);
    for (int n = 0; n < N; ++n) {
        auto [r0, c0] = layout.site_of(n);
        auto rs = axis_stencil(H, pr, r0);
        auto cs = axis_stencil(W, pc, c0);
        for (int i = 0; i < H; ++i) {
            const auto& sy = rs[i];
            for (int j = 0; j < W; ++j) {
                if (!out(i, j)) continue;
                const auto& sx = cs[j];
                auto site_ok = [&](int a, int b) { return sites(r0 + a * pr, c0 + b * pc); };
                bool ok = site_ok(sy.lo, sx.lo);
                if (sx.w > 0.0) ok = ok && site_ok(sy.lo, sx.hi);
                if (sy.w > 0.0) ok = ok && site_ok(sy.hi, sx.lo);
                if (sx.w > 0.0 && sy.w > 0.0) ok = ok && site_ok(sy.hi, sx.hi);
                if (!ok) out.set(i, j, false);
            }
        }
    }
    return out;
}

PixelMask demosaic_interior(int height, int width, const MosaicLayout& layout) {
    PixelMask out(height, width, true);
    for (int n = 0; n < layout.band_count(); ++n) {
        auto [r0, c0] = layout.site_of(n);
        auto rs = axis_stencil(height, layout.rows(), r0);
        auto cs = axis_stencil(width, layout.cols(), c0);
        for (int i = 0; i < height; ++i)
            for (int j = 0; j < width; ++j)
                if (rs[i].clamped || cs[j].clamped) out.set(i, j, false);
    }
    return out;
}

Hypercube crosstalk_correct(const Hypercube& cube, const CrosstalkMatrix& matrix) {
    const int N = cube.bands();
    if (matrix.size() != N)
        throw InvalidArgument("crosstalk matrix is " + std::to_string(matrix.size()) + "x" +
                              std::to_string(matrix.size()) + " but cube has " + std::to_string(N) + " bands");
    Hypercube out(cube.height(), cube.width(), N, cube.kind(), cube.band_centers());
    parallel_for(cube.pixel_count(), [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            auto s = cube.spectrum(p);
            auto d = out.spectrum(p);
            for (int r = 0; r < N; ++r) {
                double acc = 0.0;
                for (int c = 0; c < N; ++c) acc += matrix(r, c) * s[c];
                d[r] = acc;
            }
        }
    }, 1024);
    return out;
}

}  // namespace hsical
