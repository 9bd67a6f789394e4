#pragma once

#include <array>
#include <vector>

#include "uavnav/core/nn.hpp"

namespace uavnav::rl {

using ad::Tensor;

// Squashed-diagonal-normal policy head. The trunk outputs per-dimension mean
// and log standard deviation; samples go through tanh and an affine map onto
// the command bounds.
class Actor {
  public:
    Actor() = default;

    Actor(int obs_dim, const std::vector<int>& hidden, std::vector<double> lo,
          std::vector<double> hi, double log_std_lo, double log_std_hi, Rng& rng)
        : lo_(std::move(lo)),
          hi_(std::move(hi)),
          log_std_lo_(log_std_lo),
          log_std_hi_(log_std_hi),
          trunk_(obs_dim, hidden, 2 * static_cast<int>(lo_.size()), rng) {
        if (lo_.size() != hi_.size()) throw DimensionError("actor: bound arrays differ in length");
    }

    int action_dim() const { return static_cast<int>(lo_.size()); }

    struct Head {
        Tensor mean;     // [N, A]
        Tensor log_std;  // [N, A], clamped
    };

    Head head(const Tensor& obs) const {
        Tensor out = trunk_(obs);
        const int a = action_dim();
        Head h;
        h.mean = ad::slice(out, 1, 0, a);
        h.log_std = ad::clamp(ad::slice(out, 1, a, a), log_std_lo_, log_std_hi_);
        return h;
    }

    struct Sample {
        Tensor action;    // [N, A], inside bounds
        Tensor log_prob;  // [N]
        Tensor mean_action;  // deterministic path, [N, A]
        std::vector<double> eps;
    };

    // Reparameterized sample with the tanh change-of-variables correction,
    // log(1 - tanh(u)^2) = 2 * (log 2 - u - softplus(-2u)).
    Sample sample_with_eps(const Tensor& obs, std::vector<double> eps) const {
        const int N = obs.shape()[0];
        const int A = action_dim();
        if (eps.size() != static_cast<std::size_t>(N) * A)
            throw DimensionError("actor sample: eps length mismatch");
        Head h = head(obs);
        Tensor eps_t = Tensor::from({N, A}, eps);
        Tensor sigma = ad::exp(h.log_std);
        Tensor u = ad::add(h.mean, ad::mul(sigma, eps_t));

        Sample s;
        s.action = affine_squash(u, N);
        s.mean_action = affine_squash(h.mean, N);
        s.eps = std::move(eps);

        // gaussian term: -0.5*((u-mean)/sigma)^2 - log_std - 0.5*log(2*pi)
        Tensor zscore = ad::mul(ad::sub(u, h.mean), ad::exp(ad::scale(h.log_std, -1.0)));
        Tensor gauss = ad::sub(ad::scale(ad::square(zscore), -0.5), h.log_std);
        gauss = ad::add_scalar(gauss, -0.5 * std::log(2.0 * M_PI));
        // squash correction: - log(1 - tanh(u)^2) = 2*(u + softplus(-2u) - log 2)
        Tensor corr = ad::scale(ad::add_scalar(ad::add(u, ad::softplus(ad::scale(u, -2.0))),
                                               -std::log(2.0)),
                                2.0);
        // affine correction: - log((hi - lo) / 2) per dimension
        double affine_term = 0.0;
        for (int i = 0; i < A; ++i) affine_term -= std::log((hi_[i] - lo_[i]) / 2.0);
        s.log_prob = ad::add_scalar(ad::sum_rows(ad::add(gauss, corr)), affine_term);
        return s;
    }

    Sample sample(const Tensor& obs, Rng& rng) const {
        std::vector<double> eps(static_cast<std::size_t>(obs.shape()[0]) * action_dim());
        for (auto& e : eps) e = rng.normal();
        return sample_with_eps(obs, std::move(eps));
    }

    Tensor deterministic(const Tensor& obs) const {
        Head h = head(obs);
        return affine_squash(h.mean, obs.shape()[0]);
    }

    ad::NamedParams params(const std::string& prefix = "actor") const {
        ad::NamedParams out;
        trunk_.collect(prefix, out);
        return out;
    }

    const std::vector<double>& lo() const { return lo_; }
    const std::vector<double>& hi() const { return hi_; }

  private:
    Tensor affine_squash(const Tensor& u, int N) const {
        const int A = action_dim();
        std::vector<double> half(static_cast<std::size_t>(N) * A), base(half.size());
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < A; ++j) {
                half[static_cast<std::size_t>(i) * A + j] = (hi_[j] - lo_[j]) / 2.0;
                base[static_cast<std::size_t>(i) * A + j] = lo_[j];
            }
        Tensor t = ad::add_scalar(ad::tanh(u), 1.0);
        return ad::add(ad::mul(t, Tensor::from({N, A}, half)), Tensor::from({N, A}, base));
    }

    std::vector<double> lo_, hi_;
    double log_std_lo_ = -10.0, log_std_hi_ = 2.0;
    ad::Mlp trunk_;
};

// Q(o, a) as an MLP over the concatenated observation and action.
class Critic {
  public:
    Critic() = default;
    Critic(int obs_dim, int action_dim, const std::vector<int>& hidden, Rng& rng)
        : trunk_(obs_dim + action_dim, hidden, 1, rng) {}

    Tensor operator()(const Tensor& obs, const Tensor& action) const {
        Tensor in = ad::concat({obs, action}, 1);
        return ad::reshape(trunk_(in), {obs.shape()[0]});
    }

    ad::NamedParams params(const std::string& prefix) const {
        ad::NamedParams out;
        trunk_.collect(prefix, out);
        return out;
    }

  private:
    ad::Mlp trunk_;
};

}  // namespace uavnav::rl
