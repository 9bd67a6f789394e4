#pragma once

#include <cstdint>
#include <vector>

#include "uavnav/core/tensor.hpp"

namespace uavnav::ad {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One parameter group with its own learning rate and moment state.
class Adam {
  public:
    Adam() = default;
    explicit Adam(std::vector<Tensor> params, AdamConfig cfg = {})
        : cfg_(cfg), params_(std::move(params)) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i].values().size(), 0.0);
            v_[i].assign(params_[i].values().size(), 0.0);
        }
    }

    // Bias-corrected update in place; reads gradients, never writes them.
    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = params_[i].values();
            const auto& g = params_[i].grad();
            if (g.size() != p.size())
                throw DimensionError("adam: grad/param size mismatch for parameter " +
                                     std::to_string(i));
            auto& m = m_[i];
            auto& v = v_[i];
            for (std::size_t j = 0; j < p.size(); ++j) {
                m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
                v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
                const double mhat = m[j] / bc1;
                const double vhat = v[j] / bc2;
                p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    const std::vector<Tensor>& params() const { return params_; }
    std::int64_t t() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    // Checkpoint access.
    std::vector<std::vector<double>>& moments1() { return m_; }
    std::vector<std::vector<double>>& moments2() { return v_; }
    void set_t(std::int64_t t) { t_ = t; }

  private:
    AdamConfig cfg_;
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    std::int64_t t_ = 0;
};

}  // namespace uavnav::ad
