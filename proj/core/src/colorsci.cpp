#include "hsical/colorsci.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <numbers>

#include "hsical/error.hpp"
#include "hsical/parallel.hpp"
#include "hsical/spectral.hpp"

namespace hsical {

ColorMatrix::ColorMatrix(int bands, std::vector<double> rows) : bands_(bands), t_(std::move(rows)) {
    if (bands <= 0) throw InvalidArgument("colour matrix needs at least one band");
    if (t_.size() != static_cast<std::size_t>(3 * bands)) throw InvalidArgument("colour matrix must be 3 x N");
    for (double v : t_)
        if (!std::isfinite(v)) throw InvalidArgument("colour matrix entries must be finite");
}

ColorMatrix ColorMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.size() != 3) throw InvalidArgument("colour matrix must have 3 rows");
    const std::size_t n = rows[0].size();
    std::vector<double> flat;
    for (const auto& r : rows) {
        if (r.size() != n) throw InvalidArgument("colour matrix rows differ in length");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return ColorMatrix(static_cast<int>(n), std::move(flat));
}

std::vector<std::vector<double>> ColorMatrix::rows() const {
    std::vector<std::vector<double>> r(3);
    for (int c = 0; c < 3; ++c) r[c].assign(t_.begin() + c * bands_, t_.begin() + (c + 1) * bands_);
    return r;
}

ColorMatrix camera_matrix_from_cmfs(const BandResponseSet& bands, const std::array<SampledSpectrum, 3>& cmfs) {
    const int N = bands.size();
    std::vector<double> t(3 * N);
    const double white[3] = {kD65.c1, kD65.c2, kD65.c3};
    for (int c = 0; c < 3; ++c) {
        double row = 0.0;
        for (int n = 0; n < N; ++n) {
            t[c * N + n] = band_average(cmfs[c], bands[n]);
            row += t[c * N + n];
        }
        if (!(row > 0.0)) throw InvalidArgument("colour-matching function has no response over the sensor bands");
        for (int n = 0; n < N; ++n) t[c * N + n] *= white[c] / row;
    }
    return ColorMatrix(N, std::move(t));
}

ColorTriple spectrum_to_xyz(std::span<const double> spectrum, const ColorMatrix& T) {
    if (static_cast<int>(spectrum.size()) != T.bands())
        throw InvalidArgument("spectrum length does not match the colour matrix");
    double xyz[3] = {0, 0, 0};
    for (int c = 0; c < 3; ++c)
        for (int n = 0; n < T.bands(); ++n) xyz[c] += T(c, n) * spectrum[n];
    return {ColorSpace::XYZ, xyz[0], xyz[1], xyz[2]};
}

GamutResult xyz_to_linear_srgb(const ColorTriple& xyz) {
    if (xyz.space != ColorSpace::XYZ) throw InvalidArgument("expected an XYZ triple");
    static constexpr double m[3][3] = {{3.2404542, -1.5371385, -0.4985314},
                                       {-0.9692660, 1.8760108, 0.0415560},
                                       {0.0556434, -0.2040259, 1.0572252}};
    double v[3];
    bool clipped = false;
    for (int r = 0; r < 3; ++r) {
        v[r] = m[r][0] * xyz.c1 + m[r][1] * xyz.c2 + m[r][2] * xyz.c3;
        if (v[r] < 0.0) {
            v[r] = 0.0;
            clipped = true;
        }
    }
    return {{ColorSpace::linear_sRGB, v[0], v[1], v[2]}, clipped};
}

double srgb_transfer(double v) noexcept {
    if (v >= 1.0) return 1.0;
    v = std::max(v, 0.0);
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

ColorTriple gamma_encode(const ColorTriple& linear) {
    if (linear.space != ColorSpace::linear_sRGB) throw InvalidArgument("expected a linear sRGB triple");
    return {ColorSpace::sRGB, srgb_transfer(linear.c1), srgb_transfer(linear.c2), srgb_transfer(linear.c3)};
}

namespace {

constexpr double kDelta = 6.0 / 29.0;

double lab_f(double t) {
    return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double f) { return f > kDelta ? f * f * f : 3.0 * kDelta * kDelta * (f - 4.0 / 29.0); }

}  // namespace

ColorTriple xyz_to_lab(const ColorTriple& xyz, const ColorTriple& white) {
    if (xyz.space != ColorSpace::XYZ) throw InvalidArgument("expected an XYZ triple");
    if (!(white.c1 > 0 && white.c2 > 0 && white.c3 > 0)) throw InvalidArgument("white point must be positive");
    const double fx = lab_f(xyz.c1 / white.c1), fy = lab_f(xyz.c2 / white.c2), fz = lab_f(xyz.c3 / white.c3);
    return {ColorSpace::Lab, 116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

ColorTriple lab_to_xyz(const ColorTriple& lab, const ColorTriple& white) {
    if (lab.space != ColorSpace::Lab) throw InvalidArgument("expected a Lab triple");
    const double fy = (lab.c1 + 16.0) / 116.0;
    const double fx = fy + lab.c2 / 500.0, fz = fy - lab.c3 / 200.0;
    return {ColorSpace::XYZ, white.c1 * lab_f_inv(fx), white.c2 * lab_f_inv(fy), white.c3 * lab_f_inv(fz)};
}

double delta_e_2000(const ColorTriple& lab1, const ColorTriple& lab2) {
    if (lab1.space != ColorSpace::Lab || lab2.space != ColorSpace::Lab) throw InvalidArgument("expected Lab triples");
    constexpr double pi = std::numbers::pi;
    constexpr double deg = pi / 180.0;
    const double L1 = lab1.c1, a1 = lab1.c2, b1 = lab1.c3;
    const double L2 = lab2.c1, a2 = lab2.c2, b2 = lab2.c3;

    const double C1 = std::hypot(a1, b1), C2 = std::hypot(a2, b2);
    const double Cbar = 0.5 * (C1 + C2);
    const double Cbar7 = std::pow(Cbar, 7.0);
    const double G = 0.5 * (1.0 - std::sqrt(Cbar7 / (Cbar7 + std::pow(25.0, 7.0))));
    const double a1p = (1.0 + G) * a1, a2p = (1.0 + G) * a2;
    const double C1p = std::hypot(a1p, b1), C2p = std::hypot(a2p, b2);

    auto hue = [&](double b, double ap) {
        if (b == 0.0 && ap == 0.0) return 0.0;
        double h = std::atan2(b, ap) / deg;
        return h < 0.0 ? h + 360.0 : h;
    };
    const double h1p = hue(b1, a1p), h2p = hue(b2, a2p);

    const double dLp = L2 - L1;
    const double dCp = C2p - C1p;
    double dhp = 0.0;
    if (C1p * C2p != 0.0) {
        dhp = h2p - h1p;
        if (dhp > 180.0) dhp -= 360.0;
        else if (dhp < -180.0) dhp += 360.0;
    }
    const double dHp = 2.0 * std::sqrt(C1p * C2p) * std::sin(0.5 * dhp * deg);

    const double Lbp = 0.5 * (L1 + L2);
    const double Cbp = 0.5 * (C1p + C2p);
    double hbp = h1p + h2p;
    if (C1p * C2p != 0.0) {
        if (std::abs(h1p - h2p) <= 180.0) hbp *= 0.5;
        else if (hbp < 360.0) hbp = 0.5 * (hbp + 360.0);
        else hbp = 0.5 * (hbp - 360.0);
    }

    const double T = 1.0 - 0.17 * std::cos((hbp - 30.0) * deg) + 0.24 * std::cos(2.0 * hbp * deg) +
                     0.32 * std::cos((3.0 * hbp + 6.0) * deg) - 0.20 * std::cos((4.0 * hbp - 63.0) * deg);
    const double dtheta = 30.0 * std::exp(-std::pow((hbp - 275.0) / 25.0, 2.0));
    const double Cbp7 = std::pow(Cbp, 7.0);
    const double Rc = 2.0 * std::sqrt(Cbp7 / (Cbp7 + std::pow(25.0, 7.0)));
    const double l50 = (Lbp - 50.0) * (Lbp - 50.0);
    const double Sl = 1.0 + 0.015 * l50 / std::sqrt(20.0 + l50);
    const double Sc = 1.0 + 0.045 * Cbp;
    const double Sh = 1.0 + 0.015 * Cbp * T;
    const double Rt = -std::sin(2.0 * dtheta * deg) * Rc;

    const double tl = dLp / Sl, tc = dCp / Sc, th = dHp / Sh;
    return std::sqrt(tl * tl + tc * tc + th * th + Rt * tc * th);
}

RgbImage cube_to_srgb_image(const Hypercube& cube, const ColorMatrix& T, const std::optional<ContentMask>& mask) {
    if (cube.bands() != T.bands()) throw InvalidArgument("cube band count does not match the colour matrix");
    RgbImage img{cube.height(), cube.width(), std::vector<std::uint8_t>(cube.pixel_count() * 3, 0), 0};
    std::vector<std::uint8_t> clipped(cube.pixel_count(), 0);
    parallel_for(cube.pixel_count(), [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
            const int i = static_cast<int>(p / cube.width()), j = static_cast<int>(p % cube.width());
            if (mask && !mask->contains(i, j)) continue;
            const auto lin = xyz_to_linear_srgb(spectrum_to_xyz(cube.spectrum(p), T));
            const auto rgb = gamma_encode(lin.rgb);
            clipped[p] = lin.clipped;
            const double c[3] = {rgb.c1, rgb.c2, rgb.c3};
            for (int k = 0; k < 3; ++k) img.pixels[p * 3 + k] = static_cast<std::uint8_t>(std::lround(c[k] * 255.0));
        }
    }, 4096);
    for (auto c : clipped) img.clipped += c;
    return img;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw Error("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw Error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw Error("PNG encoding failed for " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y)
        png_write_row(png, const_cast<png_bytep>(image.pixels.data() + static_cast<std::size_t>(y) * image.width * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace hsical
