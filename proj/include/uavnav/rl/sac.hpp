#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uavnav/core/adam.hpp"
#include "uavnav/latent/vae.hpp"
#include "uavnav/rl/actor_critic.hpp"

namespace uavnav::rl {

using latent::BlockMask;
using latent::Vae;

struct SacConfig {
    double gamma = 0.99;
    int batch_size = 128;
    double critic_lr = 1e-4;
    double actor_lr = 1e-4;
    double encoder_lr = 1e-4;
    double decoder_lr = 1e-4;
    double alpha_lr = 1e-4;
    double tau_q = 0.01;
    double tau_enc = 0.05;
    int critic_target_update_frequency = 2;
    int actor_update_frequency = 2;
    double init_alpha = 0.1;
    double target_entropy = -3.0;
    bool twin_critic = true;
    std::vector<int> hidden{128, 128};
    latent::LossWeights loss_weights;
    bool align_on_mu = false;  // alignment on sampled z by default

    void validate() const {
        if (gamma < 0 || gamma > 1) throw ConfigError("gamma must be in [0, 1]");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        for (double t : {tau_q, tau_enc})
            if (!(t > 0.0 && t <= 1.0)) throw ConfigError("soft-update rates must be in (0, 1]");
        if (critic_target_update_frequency < 1 || actor_update_frequency < 1)
            throw ConfigError("update frequencies must be >= 1");
        if (init_alpha <= 0) throw ConfigError("init_alpha must be positive");
    }
};

// Everything one gradient step consumes, already in tensor form. aug_x holds
// one batch per enabled intervention type (may be empty for ablations).
struct UpdateBatch {
    Tensor x;  // [N,1,H,W]
    Tensor x_next;
    Tensor goal, vel;            // [N,3]
    Tensor goal_next, vel_next;  // [N,3]
    Tensor action;               // [N,A]
    std::vector<double> reward;  // [N]
    std::vector<double> done;    // [N], 0/1
    std::vector<Tensor> aug_x;
};

struct UpdateStats {
    double l_q = 0.0;
    double l_pi = 0.0;
    double l_vae = 0.0;
    double l_rec = 0.0;
    double l_align = 0.0;
    double alpha = 0.0;
    bool actor_updated = false;
};

// Soft actor-critic over the masked latent view, with the reconstruction and
// alignment objectives sharing the encoder. Gradient routing:
//   critic loss    -> critics + encoder
//   actor loss     -> actor only (detached observations)
//   vae/rec/align  -> encoder + decoder
//   target nets    -> soft updates only
class SacAgent {
  public:
    SacAgent() = default;

    SacAgent(const latent::VaeConfig& vae_cfg, const SacConfig& cfg, BlockMask mask,
             std::vector<double> action_lo, std::vector<double> action_hi, Rng& rng)
        : cfg_(cfg), mask_(mask), vae_(vae_cfg, rng), target_vae_(vae_cfg, rng) {
        cfg_.validate();
        mask_.validate();
        const int obs_dim = latent::policy_view_width(vae_.layout(), mask_);
        const int act_dim = static_cast<int>(action_lo.size());
        actor_ = Actor(obs_dim, cfg_.hidden, std::move(action_lo), std::move(action_hi),
                       vae_cfg.log_std_lo, vae_cfg.log_std_hi, rng);
        critic1_ = Critic(obs_dim, act_dim, cfg_.hidden, rng);
        critic2_ = Critic(obs_dim, act_dim, cfg_.hidden, rng);
        target1_ = Critic(obs_dim, act_dim, cfg_.hidden, rng);
        target2_ = Critic(obs_dim, act_dim, cfg_.hidden, rng);
        log_alpha_ = Tensor::param({1}, {std::log(cfg_.init_alpha)});

        // targets start as exact copies
        auto t1 = ad::values_of(target1_.params("t1"));
        ad::copy_params(ad::values_of(critic1_.params("c1")), t1);
        auto t2 = ad::values_of(target2_.params("t2"));
        ad::copy_params(ad::values_of(critic2_.params("c2")), t2);
        auto te = ad::values_of(target_vae_.encoder_params());
        ad::copy_params(ad::values_of(vae_.encoder_params()), te);

        auto critic_group = ad::values_of(critic1_.params("c1"));
        for (auto& p : ad::values_of(critic2_.params("c2"))) critic_group.push_back(p);
        for (auto& p : ad::values_of(vae_.encoder_params())) critic_group.push_back(p);
        opt_critic_ = ad::Adam(critic_group, {.lr = cfg_.critic_lr});
        opt_actor_ = ad::Adam(ad::values_of(actor_.params()), {.lr = cfg_.actor_lr});
        opt_encoder_ = ad::Adam(ad::values_of(vae_.encoder_params()), {.lr = cfg_.encoder_lr});
        opt_decoder_ = ad::Adam(ad::values_of(vae_.decoder_params()), {.lr = cfg_.decoder_lr});
        opt_alpha_ = ad::Adam({log_alpha_}, {.lr = cfg_.alpha_lr});
    }

    const SacConfig& config() const { return cfg_; }
    const BlockMask& mask() const { return mask_; }
    Vae& vae() { return vae_; }
    const Vae& vae() const { return vae_; }
    Vae& target_vae() { return target_vae_; }
    Actor& actor() { return actor_; }
    const Actor& actor() const { return actor_; }
    Critic& critic1() { return critic1_; }
    Critic& critic2() { return critic2_; }
    Critic& target1() { return target1_; }
    Critic& target2() { return target2_; }
    double alpha() const { return std::exp(log_alpha_.values()[0]); }
    Tensor& log_alpha() { return log_alpha_; }
    std::int64_t update_count() const { return update_count_; }
    void set_update_count(std::int64_t c) { update_count_ = c; }

    // Action selection uses the posterior mean of the masked blocks; no
    // graph is recorded.
    std::array<double, 3> act(const std::vector<double>& image01, int H, int W,
                              const std::array<double, 3>& goal, const std::array<double, 3>& vel,
                              bool deterministic, Rng& rng) const {
        ad::NoGradGuard guard;
        Tensor x = Tensor::from({1, 1, H, W}, image01);
        Tensor mu = vae_.posterior_mean(x);
        Tensor obs = latent::policy_view(vae_, mu, mask_,
                                         Tensor::from({1, 3}, {goal[0], goal[1], goal[2]}),
                                         Tensor::from({1, 3}, {vel[0], vel[1], vel[2]}));
        Tensor a = deterministic ? actor_.deterministic(obs) : actor_.sample(obs, rng).action;
        return {a.values()[0], a.values()[1], a.values()[2]};
    }

    // One gradient step over a prepared batch.
    UpdateStats update(const UpdateBatch& batch, Rng& rng, bool representation = true) {
        UpdateStats stats;
        stats.alpha = alpha();
        ++update_count_;

        // --- critic ---
        std::vector<double> y = critic_targets(batch, rng);
        {
            latent::EncoderOutput enc = vae_.encode(batch.x, rng);
            Tensor obs = latent::policy_view(vae_, enc.z, mask_, batch.goal, batch.vel);
            Tensor q1 = critic1_(obs, batch.action);
            Tensor q2 = critic2_(obs, batch.action);
            Tensor target = Tensor::from({static_cast<int>(y.size())}, y);
            Tensor loss = ad::add(ad::mean(ad::square(ad::sub(q1, target))),
                                  ad::mean(ad::square(ad::sub(q2, target))));
            stats.l_q = loss.item();
            opt_critic_.zero_grad();
            opt_actor_.zero_grad();
            opt_decoder_.zero_grad();
            loss.backward();
            opt_critic_.step();

            // --- actor + temperature, on their own schedule ---
            if (update_count_ % cfg_.actor_update_frequency == 0) {
                stats.actor_updated = true;
                Tensor obs_detached = obs.detach();
                Actor::Sample s = actor_.sample(obs_detached, rng);
                Tensor qa = ad::minimum(critic1_(obs_detached, s.action),
                                        critic2_(obs_detached, s.action));
                Tensor pi_loss =
                    ad::mean(ad::sub(ad::scale(s.log_prob, alpha()), qa));
                stats.l_pi = pi_loss.item();
                opt_actor_.zero_grad();
                opt_critic_.zero_grad();
                pi_loss.backward();
                opt_actor_.step();

                const double mean_logp = mean_of(s.log_prob.values());
                Tensor alpha_loss = ad::scale(ad::exp(log_alpha_),
                                              -(mean_logp + cfg_.target_entropy));
                opt_alpha_.zero_grad();
                alpha_loss.backward();
                opt_alpha_.step();
            }
        }

        // --- representation: reconstruction + bottleneck + alignment ---
        if (representation) {
            latent::EncoderOutput enc = vae_.encode(batch.x, rng);
            Tensor x_hat = vae_.decode(enc.z);
            Tensor l_vae = latent::loss_vae(batch.x, x_hat, enc.mu, enc.log_std);
            Tensor l_rec = latent::loss_rec(enc.h, enc.h_rec);
            Tensor total = ad::add(ad::scale(l_vae, cfg_.loss_weights.w_vae),
                                   ad::scale(l_rec, cfg_.loss_weights.w_rec));
            stats.l_vae = l_vae.item();
            stats.l_rec = l_rec.item();

            if (!batch.aug_x.empty()) {
                Tensor z3 = cfg_.align_on_mu ? vae_.slice_block(enc.mu, 3)
                                             : vae_.slice_block(enc.z, 3);
                std::vector<Tensor> aug_blocks;
                aug_blocks.reserve(batch.aug_x.size());
                for (const auto& xa : batch.aug_x) {
                    // shared eps isolates the image difference from sampling noise
                    latent::EncoderOutput ea = vae_.encode_with_eps(xa, enc.eps);
                    aug_blocks.push_back(cfg_.align_on_mu ? vae_.slice_block(ea.mu, 3)
                                                          : vae_.slice_block(ea.z, 3));
                }
                Tensor l_align = latent::loss_align(z3, aug_blocks);
                stats.l_align = l_align.item();
                total = ad::add(total, ad::scale(l_align, cfg_.loss_weights.w_align));
            }

            opt_encoder_.zero_grad();
            opt_decoder_.zero_grad();
            opt_critic_.zero_grad();
            total.backward();
            opt_encoder_.step();
            opt_decoder_.step();
        }

        // --- targets ---
        if (update_count_ % cfg_.critic_target_update_frequency == 0) {
            auto t1 = ad::values_of(target1_.params("t1"));
            ad::soft_update(ad::values_of(critic1_.params("c1")), t1, cfg_.tau_q);
            auto t2 = ad::values_of(target2_.params("t2"));
            ad::soft_update(ad::values_of(critic2_.params("c2")), t2, cfg_.tau_q);
            auto te = ad::values_of(target_vae_.encoder_params());
            ad::soft_update(ad::values_of(vae_.encoder_params()), te, cfg_.tau_enc);
        }

        if (!std::isfinite(stats.l_q) || !std::isfinite(stats.l_vae))
            throw NumericError("non-finite loss in update " + std::to_string(update_count_));
        return stats;
    }

    ad::NamedParams named_params() const {
        ad::NamedParams out = vae_.encoder_params("enc");
        for (auto& p : vae_.decoder_params("dec")) out.push_back(p);
        for (auto& p : target_vae_.encoder_params("target_enc")) out.push_back(p);
        for (auto& p : actor_.params("actor")) out.push_back(p);
        for (auto& p : critic1_.params("critic1")) out.push_back(p);
        for (auto& p : critic2_.params("critic2")) out.push_back(p);
        for (auto& p : target1_.params("target_critic1")) out.push_back(p);
        for (auto& p : target2_.params("target_critic2")) out.push_back(p);
        out.emplace_back("log_alpha", log_alpha_);
        return out;
    }

    std::vector<std::pair<std::string, ad::Adam*>> optimizers() {
        return {{"critic", &opt_critic_},
                {"actor", &opt_actor_},
                {"encoder", &opt_encoder_},
                {"decoder", &opt_decoder_},
                {"alpha", &opt_alpha_}};
    }

  private:
    static double mean_of(const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    }

    // y = r + gamma * (1 - done) * (min(Q1bar, Q2bar)(o'_target, a') - alpha * log pi(a'|o'))
    std::vector<double> critic_targets(const UpdateBatch& batch, Rng& rng) {
        ad::NoGradGuard guard;
        latent::EncoderOutput next_online = vae_.encode(batch.x_next, rng);
        Tensor obs_next =
            latent::policy_view(vae_, next_online.z, mask_, batch.goal_next, batch.vel_next);
        Actor::Sample s = actor_.sample(obs_next, rng);

        latent::EncoderOutput next_target = target_vae_.encode(batch.x_next, rng);
        Tensor obs_next_target =
            latent::policy_view(target_vae_, next_target.z, mask_, batch.goal_next, batch.vel_next);
        Tensor qmin = cfg_.twin_critic
                          ? ad::minimum(target1_(obs_next_target, s.action),
                                        target2_(obs_next_target, s.action))
                          : target1_(obs_next_target, s.action);

        const double a = alpha();
        std::vector<double> y(batch.reward.size());
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] = batch.reward[i] +
                   cfg_.gamma * (1.0 - batch.done[i]) * (qmin.values()[i] - a * s.log_prob.values()[i]);
        return y;
    }

    SacConfig cfg_;
    BlockMask mask_;
    Vae vae_, target_vae_;
    Actor actor_;
    Critic critic1_, critic2_, target1_, target2_;
    Tensor log_alpha_;
    ad::Adam opt_critic_, opt_actor_, opt_encoder_, opt_decoder_, opt_alpha_;
    std::int64_t update_count_ = 0;
};

}  // namespace uavnav::rl
