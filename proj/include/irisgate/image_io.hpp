#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "irisgate/core_model.hpp"

namespace irisgate {

// Binary PGM (P5), maxval 255.
EyeImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const EyeImage& image);

/// Mask container layout (all integers little-endian):
///   bytes 0..3   magic "IGMK"
///   byte  4      version (1)
///   bytes 5..8   width  (uint32)
///   bytes 9..12  height (uint32)
///   then four planes (pupil, iris, eyeball, eyelash), each ceil(w*h/8)
///   bytes, row-major, bit i of the plane stored at byte i/8, bit i%8.
inline constexpr std::uint8_t kMaskFormatVersion = 1;

SegmentationMasks read_masks(const std::filesystem::path& path);
void write_masks(const std::filesystem::path& path, const SegmentationMasks& masks);

/// LSB-first bit packing shared by the mask and code file formats.
std::vector<std::uint8_t> pack_bits_lsb(std::span<const std::uint8_t> cells);
std::vector<std::uint8_t> unpack_bits_lsb(std::span<const std::uint8_t> bytes, std::size_t count);

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v);
std::uint32_t get_u32_le(std::span<const std::uint8_t> bytes, std::size_t offset);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace irisgate
