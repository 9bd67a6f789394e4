#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "uavnav/core/error.hpp"

namespace uavnav::vision {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Row-major grid of range readings in meters, each in [0, max_range].
// Power-of-two dimensions keep the spectral ops radix-2.
struct DepthImage {
    int height = 0;
    int width = 0;
    double max_range = 20.0;
    std::vector<double> data;

    DepthImage() = default;
    DepthImage(int h, int w, double max_range_, std::vector<double> d)
        : height(h), width(w), max_range(max_range_), data(std::move(d)) {
        validate();
    }

    static DepthImage filled(int h, int w, double value, double max_range) {
        return DepthImage(h, w, max_range,
                          std::vector<double>(static_cast<std::size_t>(h) * w, value));
    }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
    std::size_t pixels() const { return data.size(); }

    void validate() const {
        if (!is_pow2(height) || !is_pow2(width))
            throw ConfigError("depth image dimensions must be powers of two, got " +
                              std::to_string(height) + "x" + std::to_string(width));
        if (data.size() != static_cast<std::size_t>(height) * width)
            throw DimensionError("depth image holds " + std::to_string(data.size()) +
                                 " values for " + std::to_string(height) + "x" +
                                 std::to_string(width));
        if (max_range <= 0) throw ParameterError("max_range must be positive");
        for (double v : data)
            if (!(v >= 0.0 && v <= max_range))
                throw ParameterError("depth reading " + std::to_string(v) + " outside [0, " +
                                     std::to_string(max_range) + "]");
    }
};

// Per-pixel d / max_range, in [0, 1]; the encoder input.
inline std::vector<double> normalize(const DepthImage& img) {
    std::vector<double> out(img.data.size());
    const double inv = 1.0 / img.max_range;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.data[i] * inv;
    return out;
}

inline DepthImage clamped(int h, int w, double max_range, std::vector<double> raw) {
    for (auto& v : raw) v = std::clamp(v, 0.0, max_range);
    return DepthImage(h, w, max_range, std::move(raw));
}

}  // namespace uavnav::vision
