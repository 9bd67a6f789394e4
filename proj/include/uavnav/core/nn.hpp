#pragma once

#include <string>
#include <utility>
#include <vector>

#include "uavnav/core/conv.hpp"
#include "uavnav/core/rng.hpp"
#include "uavnav/core/tensor.hpp"

namespace uavnav::ad {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

inline Tensor uniform_init(Shape shape, double bound, Rng& rng) {
    std::vector<double> data(static_cast<std::size_t>(numel(shape)));
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return Tensor::param(std::move(shape), std::move(data));
}

// Fully connected layer, weights [in, out] so that y = x * w + b.
struct Linear {
    Tensor w, b;

    Linear() = default;
    Linear(int in, int out, Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        w = uniform_init({in, out}, bound, rng);
        b = uniform_init({out}, bound, rng);
    }

    Tensor operator()(const Tensor& x) const { return add(matmul(x, w), b); }

    void collect(const std::string& prefix, NamedParams& out) const {
        out.emplace_back(prefix + ".w", w);
        out.emplace_back(prefix + ".b", b);
    }
};

struct Conv2dLayer {
    Tensor w, b;
    int stride = 1, pad = 0;

    Conv2dLayer() = default;
    Conv2dLayer(int in_ch, int out_ch, int kernel, int stride_, int pad_, Rng& rng)
        : stride(stride_), pad(pad_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * kernel * kernel));
        w = uniform_init({out_ch, in_ch, kernel, kernel}, bound, rng);
        b = uniform_init({out_ch}, bound, rng);
    }

    Tensor operator()(const Tensor& x) const { return conv2d(x, w, b, stride, pad); }

    void collect(const std::string& prefix, NamedParams& out) const {
        out.emplace_back(prefix + ".w", w);
        out.emplace_back(prefix + ".b", b);
    }
};

struct ConvTranspose2dLayer {
    Tensor w, b;
    int stride = 1, pad = 0;

    ConvTranspose2dLayer() = default;
    ConvTranspose2dLayer(int in_ch, int out_ch, int kernel, int stride_, int pad_, Rng& rng)
        : stride(stride_), pad(pad_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * kernel * kernel));
        w = uniform_init({in_ch, out_ch, kernel, kernel}, bound, rng);
        b = uniform_init({out_ch}, bound, rng);
    }

    Tensor operator()(const Tensor& x) const { return conv_transpose2d(x, w, b, stride, pad); }

    void collect(const std::string& prefix, NamedParams& out) const {
        out.emplace_back(prefix + ".w", w);
        out.emplace_back(prefix + ".b", b);
    }
};

// MLP with relu hidden activations and a linear head.
struct Mlp {
    std::vector<Linear> layers;

    Mlp() = default;
    Mlp(int in, const std::vector<int>& hidden, int out, Rng& rng) {
        int prev = in;
        for (int h : hidden) {
            layers.emplace_back(prev, h, rng);
            prev = h;
        }
        layers.emplace_back(prev, out, rng);
    }

    Tensor operator()(const Tensor& x) const {
        Tensor h = x;
        for (std::size_t i = 0; i + 1 < layers.size(); ++i) h = relu(layers[i](h));
        return layers.back()(h);
    }

    void collect(const std::string& prefix, NamedParams& out) const {
        for (std::size_t i = 0; i < layers.size(); ++i)
            layers[i].collect(prefix + ".l" + std::to_string(i), out);
    }
};

inline std::vector<Tensor> values_of(const NamedParams& named) {
    std::vector<Tensor> out;
    out.reserve(named.size());
    for (const auto& [name, t] : named) out.push_back(t);
    return out;
}

// target <- tau * online + (1 - tau) * target, elementwise.
inline void soft_update(const std::vector<Tensor>& online, std::vector<Tensor>& target,
                        double tau) {
    if (online.size() != target.size())
        throw DimensionError("soft_update: group sizes differ: " + std::to_string(online.size()) +
                             " vs " + std::to_string(target.size()));
    for (std::size_t i = 0; i < online.size(); ++i) {
        const auto& src = online[i].values();
        auto& dst = target[i].values();
        if (src.size() != dst.size())
            throw DimensionError("soft_update: parameter " + std::to_string(i) + " shape " +
                                 shape_str(online[i].shape()) + " vs " +
                                 shape_str(target[i].shape()));
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] = tau * src[j] + (1.0 - tau) * dst[j];
    }
}

inline void copy_params(const std::vector<Tensor>& src, std::vector<Tensor>& dst) {
    soft_update(src, dst, 1.0);
}

}  // namespace uavnav::ad
