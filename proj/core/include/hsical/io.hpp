#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hsical/types.hpp"

namespace hsical {

namespace fs = std::filesystem;

// Binary containers. All multi-byte fields are little-endian.
//
// HSIC (cube):  "HSIC" u32 version=1, u32 H, u32 W, u32 N, u8 kind, 3 pad bytes,
//               N x f32 band centers, H*W*N x f32 payload in (i, j, n) order.
// HSIV (video): "HSIV" u32 version=1, u32 H, u32 W, u32 pattern_rows, u32 pattern_cols,
//               u32 frame_count, f32 exposure_ms, u8 bit_depth, 3 pad bytes,
//               16 x u8 band layout (row-major over the pattern, zero padded),
//               frame_count x (H*W x f32).

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kCubeHeaderSize = 24;
inline constexpr std::size_t kVideoHeaderSize = 52;

Hypercube read_cube(const fs::path& path);
void write_cube(const fs::path& path, const Hypercube& cube);

MosaicVideo read_mosaic_video(const fs::path& path);
void write_mosaic_video(const fs::path& path, const MosaicVideo& video);

/// Single frames are stored as one-frame HSIV files.
MosaicFrame read_mosaic_frame(const fs::path& path);
void write_mosaic_frame(const fs::path& path, const MosaicFrame& frame);

/// "HSIC", "HSIV", or an empty string when the file is neither.
std::string sniff_magic(const fs::path& path);

// Text formats. Every CSV has a header row; lines starting with '#' are comments.

/// `wavelength_nm,value`
SampledSpectrum load_sampled_spectrum(const fs::path& path);
void write_sampled_spectrum(const fs::path& path, const SampledSpectrum& spectrum);

/// `band,wavelength_nm,value`, bands numbered from 0 and contiguous.
BandResponseSet load_band_responses(const fs::path& path);
void write_band_responses(const fs::path& path, const BandResponseSet& bands);

/// `wavelength_nm,x,y,z`
std::array<SampledSpectrum, 3> load_cmfs(const fs::path& path);

/// Dense numeric matrix: one row per line, comma separated, no header.
std::vector<std::vector<double>> load_matrix(const fs::path& path);
void write_matrix(const fs::path& path, const std::vector<std::vector<double>>& rows,
                  const std::string& comment = {});

/// `band,value`
std::vector<double> load_band_values(const fs::path& path);
void write_band_values(const fs::path& path, const std::vector<double>& values, const std::string& comment = {});

struct LabReference {
    double L = 0.0, a = 0.0, b = 0.0;
};

/// `tile_id,L,a,b`
std::map<std::string, LabReference> load_tile_lab(const fs::path& path);
void write_tile_lab(const fs::path& path, const std::map<std::string, LabReference>& tiles);

struct TileRoi {
    std::string tile_id;
    std::vector<std::pair<int, int>> centers;  // (i, j)
};

/// `tile_id,i,j`, one row per ROI center; tiles keep first-appearance order.
std::vector<TileRoi> load_tile_layout(const fs::path& path);
void write_tile_layout(const fs::path& path, const std::vector<TileRoi>& layout);

/// `tile_id,wavelength_nm,value`
std::map<std::string, SampledSpectrum> load_tile_spectra(const fs::path& path);
void write_tile_spectra(const fs::path& path, const std::map<std::string, SampledSpectrum>& tiles);

}  // namespace hsical
