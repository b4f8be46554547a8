#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hairstep/image.hpp"
#include "hairstep/repr.hpp"

namespace hairstep::io {

namespace fs = std::filesystem;

/// Decoded PNG samples, row-major, interleaved, widened to 16 bits per
/// sample (8-bit files keep values in [0, 255]).
struct PngData {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 = gray, 2 = gray+alpha, 3 = RGB, 4 = RGBA
    int bitDepth = 0;  // 8 or 16
    std::vector<std::uint16_t> samples;
};

PngData read_png(const fs::path& path);
void write_png(const fs::path& path, const PngData& data);

/// 8-bit RGB, channel order (mask, g, b).
void write_strand_map(const fs::path& path, const StrandMap& map);
StrandMap read_strand_map(const fs::path& path);

/// 8-bit grayscale, 0 or 255.
void write_mask(const fs::path& path, const Mask& mask);
Mask read_mask(const fs::path& path);

/// Any PNG as luminance in [0, 1].
GrayImage read_gray(const fs::path& path);
void write_gray(const fs::path& path, const GrayImage& image);

/// 16-bit grayscale PNG plus a JSON sidecar {d_near, d_far, width, height}
/// at the same path with extension .json. Sample 0 = invalid; valid nearness
/// v in [0, 1] is stored as 1 + round(v * 65534).
void write_depth_map(const fs::path& pngPath, const DepthMap& depth);
DepthMap read_depth_map(const fs::path& pngPath);
fs::path sidecar_path(const fs::path& path);

/// 16-bit grayscale label image.
void write_labels(const fs::path& path, const Grid<int>& labels);
Grid<int> read_labels(const fs::path& path);

/// Raw little-endian float32 (dx, dy) pairs, row-major, at `binPath`, with a
/// JSON header {width, height} at the sidecar path.
void write_direction_field(const fs::path& binPath, const DirectionField& field);
DirectionField read_direction_field(const fs::path& binPath);

std::vector<char> read_bytes(const fs::path& path);
void write_bytes(const fs::path& path, const void* data, std::size_t size);
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace hairstep::io
