#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "uavnav/vision/depth_image.hpp"

namespace uavnav::vision {

using cplx = std::complex<double>;

// Amplitude/phase split of a 2-D spectrum with the convention
// F = amplitude * exp(-j * phase), phase normalized to (-pi, pi].
struct Spectrum {
    int height = 0;
    int width = 0;
    std::vector<double> amplitude;
    std::vector<double> phase;

    cplx bin(int r, int c) const {
        const std::size_t i = static_cast<std::size_t>(r) * width + c;
        return std::polar(amplitude[i], -phase[i]);
    }
};

namespace detail {

// In-place iterative radix-2 transform of one stride-1 row.
inline void fft1(cplx* a, int n, bool inverse) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / len;
        const cplx wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline void fft2_grid(std::vector<cplx>& g, int h, int w, bool inverse) {
    for (int r = 0; r < h; ++r) fft1(g.data() + static_cast<std::size_t>(r) * w, w, inverse);
    std::vector<cplx> col(h);
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) col[r] = g[static_cast<std::size_t>(r) * w + c];
        fft1(col.data(), h, inverse);
        for (int r = 0; r < h; ++r) g[static_cast<std::size_t>(r) * w + c] = col[r];
    }
    if (inverse) {
        const double norm = 1.0 / (static_cast<double>(h) * w);
        for (auto& v : g) v *= norm;
    }
}

}  // namespace detail

inline Spectrum fft2(const DepthImage& img) {
    if (!is_pow2(img.height) || !is_pow2(img.width))
        throw ConfigError("fft2: dimensions must be powers of two, got " +
                          std::to_string(img.height) + "x" + std::to_string(img.width));
    std::vector<cplx> g(img.data.begin(), img.data.end());
    detail::fft2_grid(g, img.height, img.width, false);
    Spectrum s;
    s.height = img.height;
    s.width = img.width;
    s.amplitude.resize(g.size());
    s.phase.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        s.amplitude[i] = std::abs(g[i]);
        double p = -std::arg(g[i]);
        if (p <= -M_PI) p += 2.0 * M_PI;
        s.phase[i] = p;
    }
    return s;
}

struct InverseResult {
    std::vector<double> real;  // unclamped spatial values
    double max_imag = 0.0;     // largest imaginary residue
};

inline InverseResult ifft2(const Spectrum& s) {
    std::vector<cplx> g(s.amplitude.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::polar(s.amplitude[i], -s.phase[i]);
    detail::fft2_grid(g, s.height, s.width, true);
    InverseResult out;
    out.real.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        out.real[i] = g[i].real();
        out.max_imag = std::max(out.max_imag, std::abs(g[i].imag()));
    }
    return out;
}

}  // namespace uavnav::vision
