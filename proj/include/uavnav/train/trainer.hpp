#pragma once

#include <array>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "uavnav/io/checkpoint.hpp"
#include "uavnav/io/config.hpp"
#include "uavnav/rl/replay_buffer.hpp"
#include "uavnav/rl/sac.hpp"
#include "uavnav/sim/world.hpp"
#include "uavnav/vision/augment.hpp"

namespace uavnav::train {

using io::RunConfig;

struct EpisodeLog {
    int episode = 0;
    double return_mean = 0.0;
    double return_std = 0.0;
    int success = 0;
    int collision = 0;
    int steps = 0;
    std::size_t buffer_size = 0;
    int updates = 0;
    double l_vae = 0.0, l_rec = 0.0, l_align = 0.0, l_q = 0.0, l_pi = 0.0;
    double alpha = 0.0;
};

struct TrainLog {
    std::vector<EpisodeLog> episodes;

    std::string csv() const {
        std::string out =
            "episode,return_mean,return_std,success,collision,steps,buffer_size,updates,"
            "l_vae,l_rec,l_align,l_q,l_pi,alpha\n";
        char buf[512];
        for (const auto& e : episodes) {
            std::snprintf(buf, sizeof(buf),
                          "%d,%.17g,%.17g,%d,%d,%d,%zu,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          e.episode, e.return_mean, e.return_std, e.success, e.collision, e.steps,
                          e.buffer_size, e.updates, e.l_vae, e.l_rec, e.l_align, e.l_q, e.l_pi,
                          e.alpha);
            out += buf;
        }
        return out;
    }
};

// Raised after the diagnostic snapshot has been persisted.
struct TrainAbort : std::runtime_error {
    explicit TrainAbort(const std::string& msg) : std::runtime_error(msg) {}
};

// Centralized training over a single shared policy: every UAV acts on its own
// observation, all transitions land in one buffer, updates run between
// episodes. Single-threaded and reproducible from the seed alone.
class Trainer {
  public:
    explicit Trainer(RunConfig cfg, std::string out_dir = "")
        : cfg_(std::move(cfg)), out_dir_(std::move(out_dir)) {
        cfg_.finalize();
        Rng init_rng(derive_seed(cfg_.seed, 0x11));
        agent_ = rl::SacAgent(cfg_.vae, cfg_.sac, cfg_.mask(),
                              {sim::ActionCommand::vx_lo, sim::ActionCommand::vz_lo,
                               sim::ActionCommand::vyaw_lo},
                              {sim::ActionCommand::vx_hi, sim::ActionCommand::vz_hi,
                               sim::ActionCommand::vyaw_hi},
                              init_rng);
        buffer_ = rl::ReplayBuffer(static_cast<std::size_t>(cfg_.train.buffer_capacity));
        env_rng_ = Rng(derive_seed(cfg_.seed, 0x22));
        policy_rng_ = Rng(derive_seed(cfg_.seed, 0x33));
        update_rng_ = Rng(derive_seed(cfg_.seed, 0x44));
        aug_rng_ = Rng(derive_seed(cfg_.seed, 0x55));
    }

    const RunConfig& config() const { return cfg_; }
    rl::SacAgent& agent() { return agent_; }
    const rl::SacAgent& agent() const { return agent_; }
    rl::ReplayBuffer& buffer() { return buffer_; }
    int episodes_done() const { return episode_; }
    std::int64_t total_updates() const { return total_updates_; }
    int policy_width() const {
        return latent::policy_view_width(cfg_.vae.layout, cfg_.mask());
    }

    // Runs the remaining episodes; appends to the log. Callbacks fire after
    // each episode (e.g. periodic evaluation or checkpointing hooks).
    TrainLog& train(const std::function<void(const Trainer&, const EpisodeLog&)>& after_episode =
                        nullptr) {
        while (episode_ < cfg_.train.max_episodes) {
            EpisodeLog log = run_episode();
            log_.episodes.push_back(log);
            if (!out_dir_.empty() && cfg_.train.checkpoint_interval > 0 &&
                episode_ % cfg_.train.checkpoint_interval == 0)
                save_checkpoint(out_dir_ + "/checkpoint_ep" + std::to_string(episode_) + ".ck");
            if (after_episode) after_episode(*this, log);
        }
        return log_;
    }

    const TrainLog& log() const { return log_; }

    // One full collect-then-update episode.
    EpisodeLog run_episode() {
        const int ep = ++episode_;
        EpisodeLog log;
        log.episode = ep;

        sim::ScenarioSpec spec = sim::generate_scenario(cfg_.train.scenario, env_rng_.next_u64());
        sim::World world(std::move(spec), cfg_.world, cfg_.reward, env_rng_);
        const int n = cfg_.world.num_uavs;
        const int H = cfg_.world.sensor.height, W = cfg_.world.sensor.width;

        std::vector<sim::Observation> obs(n);
        for (int i = 0; i < n; ++i) obs[static_cast<std::size_t>(i)] = world.observe(i);
        std::vector<double> returns(n, 0.0);
        const bool warmup = buffer_.size() < static_cast<std::size_t>(cfg_.train.warmup_transitions);

        while (!world.episode_done()) {
            std::vector<bool> was_alive(n);
            std::vector<sim::ActionCommand> actions(n);
            for (int i = 0; i < n; ++i) {
                const auto& u = world.states()[static_cast<std::size_t>(i)];
                was_alive[static_cast<std::size_t>(i)] = u.alive;
                if (!u.alive) continue;
                actions[static_cast<std::size_t>(i)] =
                    warmup ? random_action(env_rng_)
                           : select_action(obs[static_cast<std::size_t>(i)], H, W, false);
            }
            sim::StepResult res = world.step(actions);
            log.steps = world.step_count();

            for (int i = 0; i < n; ++i) {
                const auto idx = static_cast<std::size_t>(i);
                if (!was_alive[idx]) continue;
                returns[idx] += res.rewards[idx];
                sim::Observation next = world.observe(i);

                rl::Transition t;
                t.x.assign(obs[idx].depth.data.begin(), obs[idx].depth.data.end());
                t.x_next.assign(next.depth.data.begin(), next.depth.data.end());
                t.goal = to3f(obs[idx].rel_goal);
                t.vel = {static_cast<float>(obs[idx].velocity.vx),
                         static_cast<float>(obs[idx].velocity.vz),
                         static_cast<float>(obs[idx].velocity.vyaw)};
                t.goal_next = to3f(next.rel_goal);
                t.vel_next = {static_cast<float>(next.velocity.vx),
                              static_cast<float>(next.velocity.vz),
                              static_cast<float>(next.velocity.vyaw)};
                t.action = {static_cast<float>(actions[idx].vx),
                            static_cast<float>(actions[idx].vz),
                            static_cast<float>(actions[idx].vyaw)};
                t.reward = static_cast<float>(res.rewards[idx]);
                // true terminals only; timeouts keep bootstrapping
                t.done = res.done[idx];
                buffer_.push(std::move(t));
                obs[idx] = std::move(next);

                if (res.info[idx].event == "arrival") ++log.success;
                if (res.info[idx].event == "collision") ++log.collision;
            }
        }

        log.return_mean = mean_of(returns);
        log.return_std = std_of(returns, log.return_mean);
        log.buffer_size = buffer_.size();

        // update phase
        if (buffer_.size() >= static_cast<std::size_t>(cfg_.train.warmup_transitions) &&
            buffer_.size() >= static_cast<std::size_t>(cfg_.sac.batch_size)) {
            for (int u = 0; u < cfg_.train.updates_per_episode; ++u) {
                rl::UpdateStats s = run_single_update();
                log.updates += 1;
                log.l_vae += s.l_vae;
                log.l_rec += s.l_rec;
                log.l_align += s.l_align;
                log.l_q += s.l_q;
                if (s.actor_updated) log.l_pi = s.l_pi;  // latest value on its schedule
                log.alpha = s.alpha;
            }
            if (log.updates > 0) {
                log.l_vae /= log.updates;
                log.l_rec /= log.updates;
                log.l_align /= log.updates;
                log.l_q /= log.updates;
            }
        }
        return log;
    }

    // Exposed at update granularity for resume and determinism checks.
    rl::UpdateStats run_single_update() {
        try {
            rl::UpdateBatch batch = make_batch();
            rl::UpdateStats s = agent_.update(batch, update_rng_);
            ++total_updates_;
            return s;
        } catch (const NumericError& e) {
            const std::string snap =
                (out_dir_.empty() ? std::string(".") : out_dir_) + "/abort_snapshot.ck";
            save_checkpoint(snap);
            throw TrainAbort(std::string(e.what()) + "; diagnostic snapshot written to " + snap);
        }
    }

    rl::UpdateBatch make_batch() {
        const int B = cfg_.sac.batch_size;
        const int H = cfg_.world.sensor.height, W = cfg_.world.sensor.width;
        auto picks = buffer_.sample(static_cast<std::size_t>(B), update_rng_);

        rl::UpdateBatch batch;
        const double inv_range = 1.0 / cfg_.world.sensor.max_range;
        std::vector<double> x(static_cast<std::size_t>(B) * H * W);
        std::vector<double> xn(x.size());
        std::vector<double> goal(static_cast<std::size_t>(B) * 3), vel(goal.size()),
            goal_n(goal.size()), vel_n(goal.size()), act(goal.size());
        batch.reward.resize(static_cast<std::size_t>(B));
        batch.done.resize(static_cast<std::size_t>(B));
        for (int b = 0; b < B; ++b) {
            const auto& t = *picks[static_cast<std::size_t>(b)];
            const std::size_t base = static_cast<std::size_t>(b) * H * W;
            for (std::size_t i = 0; i < t.x.size(); ++i) {
                x[base + i] = static_cast<double>(t.x[i]) * inv_range;
                xn[base + i] = static_cast<double>(t.x_next[i]) * inv_range;
            }
            for (int k = 0; k < 3; ++k) {
                goal[static_cast<std::size_t>(b) * 3 + k] = t.goal[static_cast<std::size_t>(k)];
                vel[static_cast<std::size_t>(b) * 3 + k] = t.vel[static_cast<std::size_t>(k)];
                goal_n[static_cast<std::size_t>(b) * 3 + k] =
                    t.goal_next[static_cast<std::size_t>(k)];
                vel_n[static_cast<std::size_t>(b) * 3 + k] = t.vel_next[static_cast<std::size_t>(k)];
                act[static_cast<std::size_t>(b) * 3 + k] = t.action[static_cast<std::size_t>(k)];
            }
            batch.reward[static_cast<std::size_t>(b)] = t.reward;
            batch.done[static_cast<std::size_t>(b)] = t.done ? 1.0 : 0.0;
        }
        batch.x = ad::Tensor::from({B, 1, H, W}, x);
        batch.x_next = ad::Tensor::from({B, 1, H, W}, xn);
        batch.goal = ad::Tensor::from({B, 3}, goal);
        batch.vel = ad::Tensor::from({B, 3}, vel);
        batch.goal_next = ad::Tensor::from({B, 3}, goal_n);
        batch.vel_next = ad::Tensor::from({B, 3}, vel_n);
        batch.action = ad::Tensor::from({B, 3}, act);

        if (cfg_.train.interventions) {
            const int C = cfg_.intervention.count();
            std::vector<std::vector<double>> aug(static_cast<std::size_t>(C));
            for (auto& a : aug) a.resize(x.size());
            const double max_range = cfg_.world.sensor.max_range;
            for (int b = 0; b < B; ++b) {
                const auto& t = *picks[static_cast<std::size_t>(b)];
                std::vector<double> meters(t.x.begin(), t.x.end());
                vision::DepthImage img(H, W, max_range, std::move(meters));
                auto variants = vision::intervene_set(img, cfg_.intervention, aug_rng_);
                for (int c = 0; c < C; ++c) {
                    const std::size_t base = static_cast<std::size_t>(b) * H * W;
                    for (std::size_t i = 0; i < variants[static_cast<std::size_t>(c)].data.size();
                         ++i)
                        aug[static_cast<std::size_t>(c)][base + i] =
                            variants[static_cast<std::size_t>(c)].data[i] * inv_range;
                }
            }
            for (auto& a : aug) batch.aug_x.push_back(ad::Tensor::from({B, 1, H, W}, std::move(a)));
        }
        return batch;
    }

    sim::ActionCommand select_action(const sim::Observation& o, int H, int W, bool deterministic) {
        auto a = agent_.act(vision::normalize(o.depth), H, W,
                            {o.rel_goal.x, o.rel_goal.y, o.rel_goal.z},
                            {o.velocity.vx, o.velocity.vz, o.velocity.vyaw}, deterministic,
                            policy_rng_);
        return sim::ActionCommand{a[0], a[1], a[2]};
    }

    static sim::ActionCommand random_action(Rng& rng) {
        return {rng.uniform(sim::ActionCommand::vx_lo, sim::ActionCommand::vx_hi),
                rng.uniform(sim::ActionCommand::vz_lo, sim::ActionCommand::vz_hi),
                rng.uniform(sim::ActionCommand::vyaw_lo, sim::ActionCommand::vyaw_hi)};
    }

    // --- checkpointing ---

    void save_checkpoint(const std::string& path) {
        io::CheckpointWriter w;
        w.add_text("config", cfg_.echo());
        w.add_u64("trainer/counters",
                  {static_cast<std::uint64_t>(episode_), static_cast<std::uint64_t>(total_updates_),
                   static_cast<std::uint64_t>(agent_.update_count())});
        add_rng(w, "rng/env", env_rng_);
        add_rng(w, "rng/policy", policy_rng_);
        add_rng(w, "rng/update", update_rng_);
        add_rng(w, "rng/aug", aug_rng_);

        for (const auto& [name, t] : agent_.named_params()) {
            std::vector<std::uint64_t> dims;
            for (int d : t.shape()) dims.push_back(static_cast<std::uint64_t>(d));
            w.add_f64("param/" + name, std::move(dims), t.values());
        }
        for (auto& [gname, opt] : agent_.optimizers()) {
            w.add_u64("adam/" + gname + "/t", {static_cast<std::uint64_t>(opt->t())});
            for (std::size_t i = 0; i < opt->moments1().size(); ++i) {
                w.add_f64("adam/" + gname + "/m" + std::to_string(i),
                          {opt->moments1()[i].size()}, opt->moments1()[i]);
                w.add_f64("adam/" + gname + "/v" + std::to_string(i),
                          {opt->moments2()[i].size()}, opt->moments2()[i]);
            }
        }

        if (cfg_.train.save_buffer) save_buffer_blocks(w);
        w.write(path);
    }

    void restore(const io::CheckpointReader& r) {
        RunConfig stored;
        stored.apply(io::KvText::parse_text(r.get("config").as_text(), "checkpoint config"));
        if (!(stored.vae.layout == cfg_.vae.layout))
            throw ConfigError(
                "checkpoint latent layout (" + std::to_string(stored.vae.layout.n1) + "," +
                std::to_string(stored.vae.layout.n2) + "," + std::to_string(stored.vae.layout.n3) +
                ") does not match configured layout (" + std::to_string(cfg_.vae.layout.n1) + "," +
                std::to_string(cfg_.vae.layout.n2) + "," + std::to_string(cfg_.vae.layout.n3) + ")");

        const auto counters = r.get("trainer/counters").as_u64();
        episode_ = static_cast<int>(counters[0]);
        total_updates_ = static_cast<std::int64_t>(counters[1]);
        agent_.set_update_count(static_cast<std::int64_t>(counters[2]));
        restore_rng(r, "rng/env", env_rng_);
        restore_rng(r, "rng/policy", policy_rng_);
        restore_rng(r, "rng/update", update_rng_);
        restore_rng(r, "rng/aug", aug_rng_);

        for (auto& [name, t] : agent_.named_params()) {
            const auto& blk = r.get("param/" + name);
            auto v = blk.as_f64();
            if (v.size() != t.values().size())
                throw ConfigError("checkpoint param '" + name + "' holds " +
                                  std::to_string(v.size()) + " values, expected " +
                                  std::to_string(t.values().size()));
            t.values() = std::move(v);
        }
        for (auto& [gname, opt] : agent_.optimizers()) {
            opt->set_t(static_cast<std::int64_t>(r.get("adam/" + gname + "/t").as_u64()[0]));
            for (std::size_t i = 0; i < opt->moments1().size(); ++i) {
                opt->moments1()[i] = r.get("adam/" + gname + "/m" + std::to_string(i)).as_f64();
                opt->moments2()[i] = r.get("adam/" + gname + "/v" + std::to_string(i)).as_f64();
            }
        }
        if (r.has("buffer/count")) restore_buffer_blocks(r);
    }

  private:
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
        Rng r(seed ^ (tag * 0x9e3779b97f4a7c15ull));
        return r.next_u64();
    }

    static std::array<float, 3> to3f(const sim::Vec3& v) {
        return {static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)};
    }

    static double mean_of(const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    }

    static double std_of(const std::vector<double>& v, double m) {
        if (v.empty()) return 0.0;
        double s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / static_cast<double>(v.size()));
    }

    static void add_rng(io::CheckpointWriter& w, const std::string& name, const Rng& rng) {
        const auto s = rng.serialize();
        w.add_u64(name, {s[0], s[1], s[2], s[3]});
    }

    static void restore_rng(const io::CheckpointReader& r, const std::string& name, Rng& rng) {
        const auto v = r.get(name).as_u64();
        rng.restore({v[0], v[1], v[2], v[3]});
    }

    void save_buffer_blocks(io::CheckpointWriter& w) const {
        const std::size_t count = buffer_.size();
        const std::size_t px = count == 0 ? 0 : buffer_.at(0).x.size();
        std::vector<float> xs(count * px), xns(count * px), vecs(count * 16);
        for (std::size_t i = 0; i < count; ++i) {
            const auto& t = buffer_.at(i);
            std::copy(t.x.begin(), t.x.end(), xs.begin() + static_cast<std::ptrdiff_t>(i * px));
            std::copy(t.x_next.begin(), t.x_next.end(),
                      xns.begin() + static_cast<std::ptrdiff_t>(i * px));
            float* v = vecs.data() + i * 16;
            for (int k = 0; k < 3; ++k) {
                v[k] = t.goal[static_cast<std::size_t>(k)];
                v[3 + k] = t.vel[static_cast<std::size_t>(k)];
                v[6 + k] = t.goal_next[static_cast<std::size_t>(k)];
                v[9 + k] = t.vel_next[static_cast<std::size_t>(k)];
                v[12 + k] = t.action[static_cast<std::size_t>(k)];
            }
            v[15] = t.reward;
        }
        std::vector<std::uint64_t> done_bits(count);
        for (std::size_t i = 0; i < count; ++i) done_bits[i] = buffer_.at(i).done ? 1 : 0;
        w.add_u64("buffer/count", {count});
        w.add_u64("buffer/cursor", {buffer_.cursor()});
        w.add_u64("buffer/pixels", {px});
        w.add_f32("buffer/x", {count, px}, xs);
        w.add_f32("buffer/x_next", {count, px}, xns);
        w.add_f32("buffer/vec", {count, 16}, vecs);
        w.add_u64("buffer/done", done_bits);
    }

    void restore_buffer_blocks(const io::CheckpointReader& r) {
        const std::size_t count = r.get("buffer/count").as_u64()[0];
        const std::size_t px = r.get("buffer/pixels").as_u64()[0];
        const auto xs = r.get("buffer/x").as_f32();
        const auto xns = r.get("buffer/x_next").as_f32();
        const auto vecs = r.get("buffer/vec").as_f32();
        const auto done_bits = r.get("buffer/done").as_u64();
        buffer_ = rl::ReplayBuffer(static_cast<std::size_t>(cfg_.train.buffer_capacity));
        for (std::size_t i = 0; i < count; ++i) {
            rl::Transition t;
            t.x.assign(xs.begin() + static_cast<std::ptrdiff_t>(i * px),
                       xs.begin() + static_cast<std::ptrdiff_t>((i + 1) * px));
            t.x_next.assign(xns.begin() + static_cast<std::ptrdiff_t>(i * px),
                            xns.begin() + static_cast<std::ptrdiff_t>((i + 1) * px));
            const float* v = vecs.data() + i * 16;
            for (int k = 0; k < 3; ++k) {
                t.goal[static_cast<std::size_t>(k)] = v[k];
                t.vel[static_cast<std::size_t>(k)] = v[3 + k];
                t.goal_next[static_cast<std::size_t>(k)] = v[6 + k];
                t.vel_next[static_cast<std::size_t>(k)] = v[9 + k];
                t.action[static_cast<std::size_t>(k)] = v[12 + k];
            }
            t.reward = v[15];
            t.done = done_bits[i] != 0;
            buffer_.push(std::move(t));
        }
        buffer_.set_cursor(r.get("buffer/cursor").as_u64()[0]);
    }

    RunConfig cfg_;
    std::string out_dir_;
    rl::SacAgent agent_;
    rl::ReplayBuffer buffer_{20000};
    Rng env_rng_, policy_rng_, update_rng_, aug_rng_;
    int episode_ = 0;
    std::int64_t total_updates_ = 0;
    TrainLog log_;
};

inline Trainer load_trainer(const std::string& checkpoint_path, std::string out_dir = "") {
    io::CheckpointReader r(checkpoint_path);
    RunConfig cfg;
    cfg.apply(io::KvText::parse_text(r.get("config").as_text(), "checkpoint config"));
    Trainer t(std::move(cfg), std::move(out_dir));
    t.restore(r);
    return t;
}

}  // namespace uavnav::train
