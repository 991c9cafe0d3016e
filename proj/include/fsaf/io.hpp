// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fsaf {

/// Interleaved 8-bit image (1 or 3 channels).
struct ImageU8 {
    int h = 0;
    int w = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t& at(int i, int j, int c) { return pixels[(i * w + j) * channels + c]; }
    std::uint8_t at(int i, int j, int c) const { return pixels[(i * w + j) * channels + c]; }
};

void write_ppm(const std::string& path, const ImageU8& image);  ///< P6, 3 channels
ImageU8 read_ppm(const std::string& path);
void write_pgm(const std::string& path, const ImageU8& image);  ///< P5, 1 channel

/// Raw little-endian float32 payload.
void write_f32_le(const std::string& path, const std::vector<float>& values);
std::vector<float> read_f32_le(const std::string& path);

}  // namespace fsaf
