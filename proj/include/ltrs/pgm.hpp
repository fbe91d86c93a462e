#pragma once

#include "ltrs/image.hpp"

#include <filesystem>

namespace ltrs {

struct PgmImage {
    Image image;  // values in [0, 1]
    int bit_depth = 8;
};

/// Binary PGM (P5). Values are clamped to [0, 1] and quantized to 8 or 16 bits;
/// 16-bit samples are big-endian as the format requires.
void write_pgm(const std::filesystem::path& path, const Image& img, int bit_depth = 8);

PgmImage read_pgm(const std::filesystem::path& path);

}  // namespace ltrs
