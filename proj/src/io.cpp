// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsaf/io.hpp"

#include <bit>
#include <fstream>

#include "fsaf/errors.hpp"

namespace fsaf {

namespace {

/// Reads the next header token of a PNM file, skipping whitespace and
/// '#' comment lines.
int read_pnm_int(std::istream& is) {
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = is.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = is.get();
    }
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = is.get();
    }
    if (!any) throw DataError("malformed PNM header");
    return value;
}

}  // namespace

void write_ppm(const std::string& path, const ImageU8& image) {
    if (image.channels != 3) throw DataError("write_ppm: expected 3 channels");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("write_ppm: cannot open " + path);
    os << "P6\n" << image.w << " " << image.h << "\n255\n";
    os.write(reinterpret_cast<const char*>(image.pixels.data()),
             static_cast<std::streamsize>(image.pixels.size()));
    if (!os) throw DataError("write_ppm: write failed for " + path);
}

ImageU8 read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("read_ppm: cannot open " + path);
    char magic[2];
    is.read(magic, 2);
    if (!is || magic[0] != 'P' || magic[1] != '6') {
        throw DataError("read_ppm: " + path + " is not a P6 file");
    }
    ImageU8 image;
    image.w = read_pnm_int(is);
    image.h = read_pnm_int(is);
    const int maxval = read_pnm_int(is);
    if (maxval != 255) throw DataError("read_ppm: unsupported max value");
    image.channels = 3;
    image.pixels.resize(static_cast<std::size_t>(image.h) * image.w * 3);
    is.read(reinterpret_cast<char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
    if (!is) throw DataError("read_ppm: truncated pixel data in " + path);
    return image;
}

void write_pgm(const std::string& path, const ImageU8& image) {
    if (image.channels != 1) throw DataError("write_pgm: expected 1 channel");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("write_pgm: cannot open " + path);
    os << "P5\n" << image.w << " " << image.h << "\n255\n";
    os.write(reinterpret_cast<const char*>(image.pixels.data()),
             static_cast<std::streamsize>(image.pixels.size()));
    if (!os) throw DataError("write_pgm: write failed for " + path);
}

void write_f32_le(const std::string& path, const std::vector<float>& values) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("write_f32_le: cannot open " + path);
    for (const float v : values) {
        const auto u = std::bit_cast<std::uint32_t>(v);
        const char bytes[4] = {static_cast<char>(u), static_cast<char>(u >> 8),
                               static_cast<char>(u >> 16), static_cast<char>(u >> 24)};
        os.write(bytes, 4);
    }
    if (!os) throw DataError("write_f32_le: write failed for " + path);
}

std::vector<float> read_f32_le(const std::string& path) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw DataError("read_f32_le: cannot open " + path);
    const auto bytes = static_cast<std::size_t>(is.tellg());
    if (bytes % 4 != 0) throw DataError("read_f32_le: size not a multiple of 4");
    is.seekg(0);
    std::vector<float> values(bytes / 4);
    for (auto& v : values) {
        unsigned char b[4];
        is.read(reinterpret_cast<char*>(b), 4);
        v = std::bit_cast<float>(std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
                                 std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24);
    }
    if (!is) throw DataError("read_f32_le: truncated file " + path);
    return values;
}

}  // namespace fsaf
