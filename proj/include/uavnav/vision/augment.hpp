#pragma once

#include <cmath>
#include <vector>

#include "uavnav/core/rng.hpp"
#include "uavnav/vision/fft.hpp"

namespace uavnav::vision {

// Uniform amplitude scaling in the frequency domain; phase untouched.
// Structure (phase) survives, low-level image statistics shift.
struct AmplitudePerturbResult {
    DepthImage image;               // clamped to [0, max_range]
    std::vector<double> pre_clamp;  // inverse transform before clamping
    double max_imag = 0.0;
};

inline AmplitudePerturbResult amplitude_perturb_detailed(const DepthImage& img, double lambda) {
    if (lambda <= 0.0) throw ParameterError("amplitude scale must be positive, got " +
                                            std::to_string(lambda));
    Spectrum s = fft2(img);
    for (auto& a : s.amplitude) a *= lambda;
    InverseResult inv = ifft2(s);
    AmplitudePerturbResult out;
    out.max_imag = inv.max_imag;
    out.pre_clamp = inv.real;
    out.image = clamped(img.height, img.width, img.max_range, inv.real);
    return out;
}

inline DepthImage amplitude_perturb(const DepthImage& img, double lambda) {
    return amplitude_perturb_detailed(img, lambda).image;
}

inline DepthImage random_noise(const DepthImage& img, double sigma, Rng& rng) {
    if (sigma < 0.0) throw ParameterError("noise sigma must be >= 0");
    std::vector<double> out = img.data;
    if (sigma > 0.0)
        for (auto& v : out) v += rng.normal(0.0, sigma);
    return clamped(img.height, img.width, img.max_range, std::move(out));
}

// 1-D line kernel of `kernel_length` uniform taps at `angle`, sampled with
// bilinear interpolation and edge replication.
inline DepthImage motion_blur(const DepthImage& img, int kernel_length, double angle) {
    if (kernel_length < 1 || kernel_length % 2 == 0)
        throw ParameterError("blur kernel length must be odd and >= 1, got " +
                             std::to_string(kernel_length));
    if (kernel_length == 1) return img;

    auto sample = [&](double r, double c) {
        r = std::clamp(r, 0.0, static_cast<double>(img.height - 1));
        c = std::clamp(c, 0.0, static_cast<double>(img.width - 1));
        const int r0 = static_cast<int>(std::floor(r));
        const int c0 = static_cast<int>(std::floor(c));
        const int r1 = std::min(r0 + 1, img.height - 1);
        const int c1 = std::min(c0 + 1, img.width - 1);
        const double fr = r - r0, fc = c - c0;
        return (1 - fr) * ((1 - fc) * img.at(r0, c0) + fc * img.at(r0, c1)) +
               fr * ((1 - fc) * img.at(r1, c0) + fc * img.at(r1, c1));
    };

    const double dr = std::sin(angle), dc = std::cos(angle);
    const double half = (kernel_length - 1) / 2.0;
    const double weight = 1.0 / kernel_length;
    std::vector<double> out(img.data.size());
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            double acc = 0.0;
            for (int k = 0; k < kernel_length; ++k) {
                const double off = k - half;
                acc += sample(r + off * dr, c + off * dc);
            }
            out[static_cast<std::size_t>(r) * img.width + c] = acc * weight;
        }
    return clamped(img.height, img.width, img.max_range, std::move(out));
}

// d -> mid + factor * (d - mid) with mid = max_range / 2.
inline DepthImage contrast_stretch(const DepthImage& img, double factor) {
    if (factor <= 0.0) throw ParameterError("contrast factor must be positive");
    const double mid = img.max_range / 2.0;
    std::vector<double> out(img.data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mid + factor * (img.data[i] - mid);
    return clamped(img.height, img.width, img.max_range, std::move(out));
}

struct InterventionConfig {
    bool enable_amplitude = true;
    bool enable_noise = true;
    bool enable_blur = true;
    bool enable_contrast = true;
    double lambda_low = 0.5;
    double lambda_high = 1.5;
    double noise_sigma = 0.4;  // meters; 0.02 * default max_range
    int blur_kernel_length = 5;
    double contrast_low = 0.7;
    double contrast_high = 1.3;

    int count() const {
        return static_cast<int>(enable_amplitude) + static_cast<int>(enable_noise) +
               static_cast<int>(enable_blur) + static_cast<int>(enable_contrast);
    }

    void validate() const {
        if (!(lambda_low > 0.0) || lambda_low > lambda_high)
            throw ConfigError("intervention: need 0 < lambda_low <= lambda_high");
        if (noise_sigma < 0.0) throw ConfigError("intervention: noise_sigma must be >= 0");
        if (blur_kernel_length < 1 || blur_kernel_length % 2 == 0)
            throw ConfigError("intervention: blur_kernel_length must be odd and >= 1");
        if (!(contrast_low > 0.0) || contrast_low > contrast_high)
            throw ConfigError("intervention: need 0 < contrast_low <= contrast_high");
        if (count() < 1) throw ConfigError("intervention: at least one augmentation must be enabled");
    }
};

// One freshly randomized variant per enabled augmentation type.
inline std::vector<DepthImage> intervene_set(const DepthImage& img, const InterventionConfig& cfg,
                                             Rng& rng) {
    cfg.validate();
    std::vector<DepthImage> out;
    out.reserve(static_cast<std::size_t>(cfg.count()));
    if (cfg.enable_amplitude)
        out.push_back(amplitude_perturb(img, rng.uniform(cfg.lambda_low, cfg.lambda_high)));
    if (cfg.enable_noise) out.push_back(random_noise(img, cfg.noise_sigma, rng));
    if (cfg.enable_blur) out.push_back(motion_blur(img, cfg.blur_kernel_length, rng.uniform(0.0, M_PI)));
    if (cfg.enable_contrast)
        out.push_back(contrast_stretch(img, rng.uniform(cfg.contrast_low, cfg.contrast_high)));
    return out;
}

}  // namespace uavnav::vision
