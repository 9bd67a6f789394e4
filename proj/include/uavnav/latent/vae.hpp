#pragma once

#include <set>
#include <string>
#include <vector>

#include "uavnav/core/nn.hpp"

namespace uavnav::latent {

using ad::NamedParams;
using ad::Tensor;

// Partition of the latent vector: z1 carries background-only content, z2
// scenario-specific task content, z3 scenario-invariant task content.
struct LatentLayout {
    int n1 = 16;
    int n2 = 16;
    int n3 = 32;

    int total() const { return n1 + n2 + n3; }

    void validate() const {
        if (n1 < 1 || n2 < 1 || n3 < 1) throw ConfigError("latent layout: all blocks must be >= 1");
    }

    bool operator==(const LatentLayout&) const = default;
};

// Which blocks feed the policy. Default: the task-relevant pair {z2, z3}.
struct BlockMask {
    bool z1 = false;
    bool z2 = true;
    bool z3 = true;

    void validate() const {
        if (!z1 && !z2 && !z3) throw ConfigError("block mask selects no latent block");
    }

    int width(const LatentLayout& l) const {
        return (z1 ? l.n1 : 0) + (z2 ? l.n2 : 0) + (z3 ? l.n3 : 0);
    }

    std::string str() const {
        std::string s;
        if (z1) s += "z1";
        if (z2) s += s.empty() ? "z2" : "+z2";
        if (z3) s += s.empty() ? "z3" : "+z3";
        return s;
    }

    static BlockMask parse(const std::string& s) {
        BlockMask m{false, false, false};
        std::string tok;
        auto flush = [&] {
            if (tok.empty()) return;
            if (tok == "z1")
                m.z1 = true;
            else if (tok == "z2")
                m.z2 = true;
            else if (tok == "z3")
                m.z3 = true;
            else
                throw ConfigError("unknown latent block '" + tok + "'");
            tok.clear();
        };
        for (char c : s) {
            if (c == '+' || c == ',' || c == ' ')
                flush();
            else
                tok += c;
        }
        flush();
        m.validate();
        return m;
    }
};

struct VaeConfig {
    int image_h = 64;
    int image_w = 64;
    std::vector<int> conv_channels{16, 32, 32, 32};
    int h_dim = 128;
    LatentLayout layout;
    double log_std_lo = -10.0;
    double log_std_hi = 2.0;

    void validate() const {
        layout.validate();
        if (conv_channels.empty()) throw ConfigError("encoder needs at least one conv layer");
        int side = image_h;
        for (std::size_t i = 0; i < conv_channels.size(); ++i) {
            if (side % 2 != 0)
                throw ConfigError("image side " + std::to_string(side) +
                                  " not divisible by stride at conv layer " + std::to_string(i));
            side /= 2;
        }
        if (side < 1) throw ConfigError("too many conv layers for image size");
        if (h_dim < 1) throw ConfigError("h_dim must be >= 1");
    }
};

struct EncoderOutput {
    Tensor h;        // pre-latent feature, [N, h_dim]
    Tensor mu;       // [N, n]
    Tensor log_std;  // [N, n], clamped
    Tensor z;        // mu + exp(log_std) * eps
    Tensor h_rec;    // bottleneck inverse of z
    std::vector<double> eps;
};

// Convolutional encoder with a variational bottleneck, its inverse, and a
// mirrored transposed-conv decoder. One instance serves the reconstruction,
// alignment and policy paths.
class Vae {
  public:
    Vae() = default;

    Vae(const VaeConfig& cfg, Rng& rng) : cfg_(cfg) {
        cfg_.validate();
        int ch = 1, side = cfg_.image_h;
        for (int out_ch : cfg_.conv_channels) {
            convs_.emplace_back(ch, out_ch, 3, 2, 1, rng);
            ch = out_ch;
            side /= 2;
        }
        feat_side_ = side;
        feat_ch_ = ch;
        const int flat = ch * side * side;
        fc_ = ad::Linear(flat, cfg_.h_dim, rng);
        const int n = cfg_.layout.total();
        mu_head_ = ad::Linear(cfg_.h_dim, n, rng);
        log_std_head_ = ad::Linear(cfg_.h_dim, n, rng);
        inverse_ = ad::Linear(n, cfg_.h_dim, rng);
        dec_fc_ = ad::Linear(n, flat, rng);
        int dch = ch;
        for (int i = static_cast<int>(cfg_.conv_channels.size()) - 1; i >= 1; --i) {
            deconvs_.emplace_back(dch, cfg_.conv_channels[static_cast<std::size_t>(i - 1)], 4, 2, 1, rng);
            dch = cfg_.conv_channels[static_cast<std::size_t>(i - 1)];
        }
        deconvs_.emplace_back(dch, 1, 4, 2, 1, rng);
    }

    const VaeConfig& config() const { return cfg_; }
    const LatentLayout& layout() const { return cfg_.layout; }

    // x: [N, 1, H, W] normalized to [0, 1].
    Tensor features(const Tensor& x) const {
        if (x.shape().size() != 4 || x.shape()[2] != cfg_.image_h || x.shape()[3] != cfg_.image_w)
            throw DimensionError("encoder input " + ad::shape_str(x.shape()) + " vs expected [N,1," +
                                 std::to_string(cfg_.image_h) + "," + std::to_string(cfg_.image_w) +
                                 "]");
        Tensor h = x;
        for (const auto& conv : convs_) h = ad::relu(conv(h));
        h = ad::reshape(h, {x.shape()[0], feat_ch_ * feat_side_ * feat_side_});
        h = ad::relu(fc_(h));
        check_finite(h, "encoder.fc");
        return h;
    }

    EncoderOutput encode_with_eps(const Tensor& x, std::vector<double> eps) const {
        EncoderOutput out;
        out.h = features(x);
        out.mu = mu_head_(out.h);
        out.log_std = ad::clamp(log_std_head_(out.h), cfg_.log_std_lo, cfg_.log_std_hi);
        check_finite(out.mu, "encoder.mu");
        const int n = cfg_.layout.total();
        const int N = x.shape()[0];
        if (eps.size() != static_cast<std::size_t>(N) * n)
            throw DimensionError("encode: eps length " + std::to_string(eps.size()) + " vs " +
                                 std::to_string(static_cast<std::size_t>(N) * n));
        Tensor eps_t = Tensor::from({N, n}, eps);
        out.z = ad::add(out.mu, ad::mul(ad::exp(out.log_std), eps_t));
        out.h_rec = inverse_(out.z);
        out.eps = std::move(eps);
        return out;
    }

    EncoderOutput encode(const Tensor& x, Rng& rng) const {
        const int n = cfg_.layout.total();
        std::vector<double> eps(static_cast<std::size_t>(x.shape()[0]) * n);
        for (auto& e : eps) e = rng.normal();
        return encode_with_eps(x, std::move(eps));
    }

    // Posterior mean only; the jitter-free path used at action-selection time.
    Tensor posterior_mean(const Tensor& x) const { return mu_head_(features(x)); }

    // z: [N, n] -> image in (0, 1), shaped like the encoder input.
    Tensor decode(const Tensor& z) const {
        if (z.shape().size() != 2 || z.shape()[1] != cfg_.layout.total())
            throw DimensionError("decode: z " + ad::shape_str(z.shape()) + " vs expected [N," +
                                 std::to_string(cfg_.layout.total()) + "]");
        Tensor h = ad::relu(dec_fc_(z));
        h = ad::reshape(h, {z.shape()[0], feat_ch_, feat_side_, feat_side_});
        for (std::size_t i = 0; i < deconvs_.size(); ++i) {
            h = deconvs_[i](h);
            if (i + 1 < deconvs_.size()) h = ad::relu(h);
        }
        return ad::sigmoid(h);
    }

    Tensor slice_block(const Tensor& z, int block) const {
        const auto& l = cfg_.layout;
        if (block == 1) return ad::slice(z, 1, 0, l.n1);
        if (block == 2) return ad::slice(z, 1, l.n1, l.n2);
        if (block == 3) return ad::slice(z, 1, l.n1 + l.n2, l.n3);
        throw ContractError("slice_block: block must be 1, 2 or 3");
    }

    NamedParams encoder_params(const std::string& prefix = "enc") const {
        NamedParams out;
        for (std::size_t i = 0; i < convs_.size(); ++i)
            convs_[i].collect(prefix + ".conv" + std::to_string(i), out);
        fc_.collect(prefix + ".fc", out);
        mu_head_.collect(prefix + ".mu", out);
        log_std_head_.collect(prefix + ".log_std", out);
        inverse_.collect(prefix + ".inv", out);
        return out;
    }

    NamedParams decoder_params(const std::string& prefix = "dec") const {
        NamedParams out;
        dec_fc_.collect(prefix + ".fc", out);
        for (std::size_t i = 0; i < deconvs_.size(); ++i)
            deconvs_[i].collect(prefix + ".tconv" + std::to_string(i), out);
        return out;
    }

  private:
    static void check_finite(const Tensor& t, const char* layer) {
        for (double v : t.values())
            if (!std::isfinite(v))
                throw NumericError(std::string("non-finite activation in layer ") + layer);
    }

    VaeConfig cfg_;
    std::vector<ad::Conv2dLayer> convs_;
    ad::Linear fc_;
    ad::Linear mu_head_, log_std_head_;
    ad::Linear inverse_;
    ad::Linear dec_fc_;
    std::vector<ad::ConvTranspose2dLayer> deconvs_;
    int feat_side_ = 0;
    int feat_ch_ = 0;
};

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

// Mean squared reconstruction error plus the closed-form KL divergence of the
// diagonal-normal posterior against the standard normal prior, averaged over
// the batch: KL = 1/2 * sum(mu^2 + sigma^2 - 1 - 2*log_std).
inline Tensor kl_to_standard_normal(const Tensor& mu, const Tensor& log_std) {
    Tensor sigma_sq = ad::exp(ad::scale(log_std, 2.0));
    Tensor terms = ad::sub(ad::sub(ad::add(ad::square(mu), sigma_sq), ad::scale(log_std, 2.0)),
                           Tensor::full(mu.shape(), 1.0));
    const int batch = mu.shape().size() == 2 ? mu.shape()[0] : 1;
    return ad::scale(ad::sum(terms), 0.5 / batch);
}

inline Tensor loss_vae(const Tensor& x, const Tensor& x_hat, const Tensor& mu,
                       const Tensor& log_std) {
    Tensor rec = ad::mean(ad::square(ad::sub(x_hat, x)));
    return ad::add(rec, kl_to_standard_normal(mu, log_std));
}

// Bottleneck information loss: mean squared error between the pre-latent
// feature and its reconstruction from z.
inline Tensor loss_rec(const Tensor& h, const Tensor& h_rec) {
    ad::check_same_shape("loss_rec", h.shape(), h_rec.shape());
    return ad::mean(ad::square(ad::sub(h, h_rec)));
}

// Mean over augmentations of the squared distance between the invariant
// block of the original and of each augmented encoding; gradients flow into
// both branches.
inline Tensor loss_align(const Tensor& z3, const std::vector<Tensor>& z3_aug) {
    if (z3_aug.empty()) throw ConfigError("loss_align: needs at least one augmented branch");
    const int batch = z3.shape().size() == 2 ? z3.shape()[0] : 1;
    Tensor acc;
    for (const auto& a : z3_aug) {
        ad::check_same_shape("loss_align", z3.shape(), a.shape());
        Tensor d = ad::scale(ad::sum(ad::square(ad::sub(z3, a))), 1.0 / batch);
        acc = acc.defined() ? ad::add(acc, d) : d;
    }
    return ad::scale(acc, 1.0 / static_cast<double>(z3_aug.size()));
}

struct LossWeights {
    double w_vae = 1.0;
    double w_rec = 0.1;
    double w_align = 1.0;
};

struct LossBundle {
    double l_vae = 0.0;
    double l_rec = 0.0;
    double l_align = 0.0;
    LossWeights weights;

    double total() const {
        return weights.w_vae * l_vae + weights.w_rec * l_rec + weights.w_align * l_align;
    }
};

// Policy observation: the masked latent blocks followed by the body-frame
// goal offset (3) and current velocity (3). z1 is excluded by default.
inline Tensor policy_view(const Vae& vae, const Tensor& z, const BlockMask& mask,
                          const Tensor& goal, const Tensor& vel) {
    mask.validate();
    std::vector<Tensor> parts;
    if (mask.z1) parts.push_back(vae.slice_block(z, 1));
    if (mask.z2) parts.push_back(vae.slice_block(z, 2));
    if (mask.z3) parts.push_back(vae.slice_block(z, 3));
    parts.push_back(goal);
    parts.push_back(vel);
    return ad::concat(parts, 1);
}

inline int policy_view_width(const LatentLayout& layout, const BlockMask& mask) {
    return mask.width(layout) + 6;
}

}  // namespace uavnav::latent
