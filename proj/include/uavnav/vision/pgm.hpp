#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "uavnav/vision/depth_image.hpp"

namespace uavnav::vision {

// 16-bit binary PGM (P5, maxval 65535, big-endian samples). Depth scales to
// the full integer range; max_range rides along in a comment so a round trip
// restores meters.
inline void write_pgm16(const std::string& path, const DepthImage& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IntegrityError("cannot open for writing: " + path);
    f << "P5\n# max_range " << img.max_range << "\n" << img.width << " " << img.height
      << "\n65535\n";
    const double scale = 65535.0 / img.max_range;
    for (double v : img.data) {
        const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(v * scale, 0.0, 65535.0)));
        f.put(static_cast<char>(q >> 8));
        f.put(static_cast<char>(q & 0xff));
    }
    if (!f) throw IntegrityError("write failed: " + path);
}

inline DepthImage read_pgm16(const std::string& path, double default_max_range = 20.0) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IntegrityError("cannot open: " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5") throw IntegrityError(path + ": not a binary PGM (P5)");

    double max_range = default_max_range;
    auto next_token = [&]() {
        std::string tok;
        while (f >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(f, rest);
                std::istringstream cs(tok.substr(1) + rest);
                std::string key;
                double v;
                if (cs >> key >> v && key == "max_range") max_range = v;
                continue;
            }
            return tok;
        }
        throw IntegrityError(path + ": truncated header");
    };

    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (maxval != 65535) throw IntegrityError(path + ": expected 16-bit maxval 65535");
    f.get();  // single whitespace after maxval

    std::vector<double> data(static_cast<std::size_t>(w) * h);
    const double scale = max_range / 65535.0;
    for (auto& v : data) {
        const int hi = f.get(), lo = f.get();
        if (hi < 0 || lo < 0) throw IntegrityError(path + ": truncated pixel data");
        v = static_cast<double>((hi << 8) | lo) * scale;
    }
    return DepthImage(h, w, max_range, std::move(data));
}

}  // namespace uavnav::vision
