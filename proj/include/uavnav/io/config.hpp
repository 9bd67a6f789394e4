#pragma once

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "uavnav/io/kv.hpp"
#include "uavnav/latent/vae.hpp"
#include "uavnav/rl/sac.hpp"
#include "uavnav/sim/world.hpp"
#include "uavnav/vision/augment.hpp"

namespace uavnav::io {

struct TrainSection {
    int max_episodes = 300;
    int updates_per_episode = 400;
    int warmup_transitions = 1000;
    int checkpoint_interval = 50;
    int eval_interval = 0;  // 0 = no periodic evaluation
    int buffer_capacity = 20000;
    bool interventions = true;  // augment batches and apply the alignment loss
    std::string mask = "z2+z3";
    std::string scenario = "playground";
    bool save_buffer = true;

    void validate() const {
        if (max_episodes < 1 || updates_per_episode < 0 || warmup_transitions < 0)
            throw ConfigError("train: counters must be positive");
        if (buffer_capacity < 1) throw ConfigError("train: buffer_capacity must be >= 1");
        latent::BlockMask::parse(mask);
    }
};

struct EvalSection {
    int episodes_random = 100;
    int episodes_circle = 20;
    int threads = 1;
};

// Union of every module's settings. An empty config file reproduces the
// default training setup; unknown keys are rejected with their full path.
struct RunConfig {
    std::uint64_t seed = 1;
    sim::EpisodeConfig world;
    sim::RewardConfig reward;
    latent::VaeConfig vae;
    rl::SacConfig sac;
    vision::InterventionConfig intervention;
    TrainSection train;
    EvalSection eval;
    std::string init_pattern = "random";

    RunConfig() {
        world.sensor.height = 64;
        world.sensor.width = 64;
    }

    void finalize() {
        world.init_pattern = sim::parse_init_pattern(init_pattern);
        vae.image_h = world.sensor.height;
        vae.image_w = world.sensor.width;
        vae.validate();
        sac.validate();
        intervention.validate();
        train.validate();
        world.validate();
    }

    latent::BlockMask mask() const { return latent::BlockMask::parse(train.mask); }

    void apply(const KvText& kv) {
        auto table = bindings();
        for (const auto& [key, value] : kv.entries()) {
            bool found = false;
            for (auto& b : table)
                if (b.key == key) {
                    b.set(value);
                    found = true;
                    break;
                }
            if (!found) throw ConfigError("unknown config key '" + key + "'");
        }
        finalize();
    }

    std::string echo() const {
        auto table = bindings();
        std::string out = "# uavnav run configuration\n";
        std::string section;
        for (const auto& b : table) {
            const auto dot = b.key.find('.');
            const std::string sec = dot == std::string::npos ? "" : b.key.substr(0, dot);
            if (sec != section) {
                out += "\n[" + sec + "]\n";
                section = sec;
            }
            out += (dot == std::string::npos ? b.key : b.key.substr(dot + 1)) + " = " + b.get() +
                   "\n";
        }
        return out;
    }

  private:
    struct Binding {
        std::string key;
        std::function<std::string()> get;
        std::function<void(const std::string&)> set;
    };

    static std::string fmt(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
    static std::string fmt(int v) { return std::to_string(v); }
    static std::string fmt(std::uint64_t v) { return std::to_string(v); }
    static std::string fmt(bool v) { return v ? "true" : "false"; }
    static std::string fmt(const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    }

    std::vector<Binding> bindings() {
        std::vector<Binding> t;
        auto num = [&t](const std::string& key, double& ref) {
            t.push_back({key, [&ref] { return fmt(ref); },
                         [key, &ref](const std::string& v) { ref = parse_double(key, v); }});
        };
        auto integer = [&t](const std::string& key, int& ref) {
            t.push_back({key, [&ref] { return fmt(ref); },
                         [key, &ref](const std::string& v) { ref = static_cast<int>(parse_int(key, v)); }});
        };
        auto boolean = [&t](const std::string& key, bool& ref) {
            t.push_back({key, [&ref] { return fmt(ref); },
                         [key, &ref](const std::string& v) { ref = parse_bool(key, v); }});
        };
        auto text = [&t](const std::string& key, std::string& ref) {
            t.push_back({key, [&ref] { return ref; },
                         [&ref](const std::string& v) { ref = v; }});
        };
        auto int_list = [&t](const std::string& key, std::vector<int>& ref) {
            t.push_back({key, [&ref] { return fmt(ref); },
                         [key, &ref](const std::string& v) { ref = parse_int_list(key, v); }});
        };
        auto u64 = [&t](const std::string& key, std::uint64_t& ref) {
            t.push_back({key, [&ref] { return fmt(ref); },
                         [key, &ref](const std::string& v) {
                             ref = static_cast<std::uint64_t>(parse_int(key, v));
                         }});
        };

        u64("seed", seed);

        text("world.scenario", train.scenario);
        text("world.init_pattern", init_pattern);
        integer("world.num_uavs", world.num_uavs);
        integer("world.max_steps", world.max_steps);
        num("world.dt", world.dt);
        num("world.uav_radius", world.uav_radius);
        num("world.spawn_extent_xy", world.spawn_extent_xy);
        num("world.spawn_extent_z", world.spawn_extent_z);
        num("world.spawn_z0", world.spawn_z0);
        num("world.min_start_goal_dist", world.min_start_goal_dist);
        num("world.circle_radius", world.circle_radius);
        num("world.circle_height", world.circle_height);

        integer("sensor.height", world.sensor.height);
        integer("sensor.width", world.sensor.width);
        num("sensor.hfov_deg", world.sensor.hfov_deg);
        num("sensor.max_range", world.sensor.max_range);

        num("reward.r_arrival", reward.r_arrival);
        num("reward.r_collision", reward.r_collision);
        num("reward.alpha_goal", reward.alpha_goal);
        num("reward.alpha_avoid", reward.alpha_avoid);
        num("reward.d_safe", reward.d_safe);
        num("reward.arrival_threshold", reward.arrival_threshold);

        integer("latent.n1", vae.layout.n1);
        integer("latent.n2", vae.layout.n2);
        integer("latent.n3", vae.layout.n3);
        int_list("latent.conv_channels", vae.conv_channels);
        integer("latent.h_dim", vae.h_dim);
        num("latent.log_std_lo", vae.log_std_lo);
        num("latent.log_std_hi", vae.log_std_hi);

        num("sac.gamma", sac.gamma);
        integer("sac.batch_size", sac.batch_size);
        num("sac.critic_lr", sac.critic_lr);
        num("sac.actor_lr", sac.actor_lr);
        num("sac.encoder_lr", sac.encoder_lr);
        num("sac.decoder_lr", sac.decoder_lr);
        num("sac.alpha_lr", sac.alpha_lr);
        num("sac.tau_q", sac.tau_q);
        num("sac.tau_enc", sac.tau_enc);
        integer("sac.critic_target_update_frequency", sac.critic_target_update_frequency);
        integer("sac.actor_update_frequency", sac.actor_update_frequency);
        num("sac.init_alpha", sac.init_alpha);
        num("sac.target_entropy", sac.target_entropy);
        boolean("sac.twin_critic", sac.twin_critic);
        int_list("sac.hidden", sac.hidden);
        num("sac.w_vae", sac.loss_weights.w_vae);
        num("sac.w_rec", sac.loss_weights.w_rec);
        num("sac.w_align", sac.loss_weights.w_align);
        boolean("sac.align_on_mu", sac.align_on_mu);

        boolean("intervention.enable_amplitude", intervention.enable_amplitude);
        boolean("intervention.enable_noise", intervention.enable_noise);
        boolean("intervention.enable_blur", intervention.enable_blur);
        boolean("intervention.enable_contrast", intervention.enable_contrast);
        num("intervention.lambda_low", intervention.lambda_low);
        num("intervention.lambda_high", intervention.lambda_high);
        num("intervention.noise_sigma", intervention.noise_sigma);
        integer("intervention.blur_kernel_length", intervention.blur_kernel_length);
        num("intervention.contrast_low", intervention.contrast_low);
        num("intervention.contrast_high", intervention.contrast_high);

        integer("train.max_episodes", train.max_episodes);
        integer("train.updates_per_episode", train.updates_per_episode);
        integer("train.warmup_transitions", train.warmup_transitions);
        integer("train.checkpoint_interval", train.checkpoint_interval);
        integer("train.eval_interval", train.eval_interval);
        integer("train.buffer_capacity", train.buffer_capacity);
        boolean("train.interventions", train.interventions);
        text("train.mask", train.mask);
        boolean("train.save_buffer", train.save_buffer);

        integer("eval.episodes_random", eval.episodes_random);
        integer("eval.episodes_circle", eval.episodes_circle);
        integer("eval.threads", eval.threads);
        return t;
    }

    // echo() needs the table too; const_cast is confined here.
    std::vector<Binding> bindings() const {
        return const_cast<RunConfig*>(this)->bindings();
    }
};

}  // namespace uavnav::io
