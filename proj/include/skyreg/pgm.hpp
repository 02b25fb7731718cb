#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "skyreg/raster.hpp"

namespace skyreg {

/// Binary (P5) PGM, maxval 255. Intensities map to [0,1] by division by 255.
inline Raster read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pgm: cannot open " + path.string());
    const auto next_token = [&in, &path]() {
        std::string tok;
        int c = in.get();
        while (c != EOF) {
            if (c == '#') {
                while (c != EOF && c != '\n') c = in.get();
            } else if (!std::isspace(c)) {
                break;
            }
            c = in.get();
        }
        while (c != EOF && !std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            c = in.get();
        }
        if (tok.empty()) throw std::runtime_error("read_pgm: truncated header in " + path.string());
        return tok;
    };
    if (next_token() != "P5") throw std::runtime_error("read_pgm: not a binary PGM: " + path.string());
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(next_token());
        height = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw std::runtime_error("read_pgm: malformed header in " + path.string());
    }
    if (width <= 0 || height <= 0) throw std::runtime_error("read_pgm: bad dimensions in " + path.string());
    if (maxval != 255) throw std::runtime_error("read_pgm: expected 8-bit maxval 255 in " + path.string());
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw std::runtime_error("read_pgm: truncated pixel data in " + path.string());
    Raster img(width, height);
    for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0;
    return img;
}

inline void write_pgm(const std::filesystem::path& path, const Raster& image) {
    if (image.empty()) throw std::invalid_argument("write_pgm: empty raster");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path.string());
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    std::vector<std::uint8_t> bytes(image.pixel_count());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const long v = std::lround(image.data[i] * 255.0);
        bytes[i] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write_pgm: short write to " + path.string());
}

}  // namespace skyreg
