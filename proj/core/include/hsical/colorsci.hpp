#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "hsical/types.hpp"

namespace hsical {

/// 3 x N map from a band spectrum to CIEXYZ.
class ColorMatrix {
public:
    ColorMatrix(int bands, std::vector<double> rows);
    static ColorMatrix from_rows(const std::vector<std::vector<double>>& rows);

    int bands() const noexcept { return bands_; }
    double operator()(int c, int n) const noexcept { return t_[static_cast<std::size_t>(c) * bands_ + n]; }
    std::vector<std::vector<double>> rows() const;

private:
    int bands_;
    std::vector<double> t_;
};

enum class ColorSpace { XYZ, linear_sRGB, sRGB, Lab };

struct ColorTriple {
    ColorSpace space = ColorSpace::XYZ;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0;
};

/// D65, 2-degree observer.
inline constexpr ColorTriple kD65{ColorSpace::XYZ, 0.95047, 1.0, 1.08883};

/// Band-averaged colour-matching functions, each row scaled so that a flat
/// unit spectrum lands on the D65 white point (Y = 1).
ColorMatrix camera_matrix_from_cmfs(const BandResponseSet& bands, const std::array<SampledSpectrum, 3>& cmfs);

ColorTriple spectrum_to_xyz(std::span<const double> spectrum, const ColorMatrix& T);

struct GamutResult {
    ColorTriple rgb;
    bool clipped = false;
};
GamutResult xyz_to_linear_srgb(const ColorTriple& xyz);
ColorTriple gamma_encode(const ColorTriple& linear);
double srgb_transfer(double v) noexcept;

ColorTriple xyz_to_lab(const ColorTriple& xyz, const ColorTriple& white = kD65);
ColorTriple lab_to_xyz(const ColorTriple& lab, const ColorTriple& white = kD65);

double delta_e_2000(const ColorTriple& lab1, const ColorTriple& lab2);

struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;  // interleaved RGB
    std::size_t clipped = 0;
};

/// Spectrum -> XYZ -> linear sRGB -> gamma -> 8 bit. Pixels outside the mask are black.
RgbImage cube_to_srgb_image(const Hypercube& cube, const ColorMatrix& T,
                            const std::optional<ContentMask>& mask = std::nullopt);

/// 8-bit RGB PNG without an embedded colour profile.
void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace hsical
