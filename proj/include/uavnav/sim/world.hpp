#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "uavnav/core/rng.hpp"
#include "uavnav/sim/scenario.hpp"
#include "uavnav/vision/depth_image.hpp"

namespace uavnav::sim {

struct SensorConfig {
    int height = 64;
    int width = 64;
    double hfov_deg = 90.0;
    double max_range = 20.0;
};

struct RewardConfig {
    double r_arrival = 50.0;
    double r_collision = -10.0;
    double alpha_goal = 3.0;
    double alpha_avoid = -0.05;
    double d_safe = 5.0;
    double arrival_threshold = 0.5;
};

enum class InitPattern { Random, Circle };

inline InitPattern parse_init_pattern(const std::string& s) {
    if (s == "random" || s == "Random") return InitPattern::Random;
    if (s == "circle" || s == "Circle") return InitPattern::Circle;
    throw ConfigError("unknown init pattern '" + s + "'");
}

inline std::string to_string(InitPattern p) {
    return p == InitPattern::Random ? "random" : "circle";
}

struct EpisodeConfig {
    int num_uavs = 8;
    InitPattern init_pattern = InitPattern::Random;
    int max_steps = 400;
    double dt = 0.1;
    double uav_radius = 0.3;
    SensorConfig sensor;
    // random pattern: starts and goals inside a centered box
    double spawn_extent_xy = 16.0;
    double spawn_extent_z = 4.0;
    double spawn_z0 = 0.5;
    double min_start_goal_dist = 2.0;
    // circle pattern
    double circle_radius = 12.0;
    double circle_height = 2.0;

    void validate() const {
        if (num_uavs < 1) throw ConfigError("num_uavs must be >= 1");
        if (dt <= 0) throw ConfigError("dt must be positive");
        if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
        if (uav_radius <= 0) throw ConfigError("uav_radius must be positive");
    }
};

// Velocity command in the body frame: forward, climb, yaw rate.
struct ActionCommand {
    double vx = 0.0;
    double vz = 0.0;
    double vyaw = 0.0;

    static constexpr double vx_lo = 0.0, vx_hi = 2.0;
    static constexpr double vz_lo = -1.0, vz_hi = 1.0;
    static constexpr double vyaw_lo = -1.0, vyaw_hi = 1.0;

    ActionCommand clamped() const {
        return {std::clamp(vx, vx_lo, vx_hi), std::clamp(vz, vz_lo, vz_hi),
                std::clamp(vyaw, vyaw_lo, vyaw_hi)};
    }

    bool within_bounds(double eps = 1e-9) const {
        return vx >= vx_lo - eps && vx <= vx_hi + eps && vz >= vz_lo - eps && vz <= vz_hi + eps &&
               vyaw >= vyaw_lo - eps && vyaw <= vyaw_hi + eps;
    }
};

struct UavState {
    Vec3 position;
    double yaw = 0.0;
    ActionCommand velocity;  // last applied command
    Vec3 goal;
    bool alive = true;
    bool arrived = false;
    bool crashed = false;
    double path_length = 0.0;
};

// World-frame goal offset rotated into the body frame: (forward, left, up).
inline Vec3 relative_goal_body(const Vec3& position, double yaw, const Vec3& goal) {
    const Vec3 d = goal - position;
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {c * d.x + s * d.y, -s * d.x + c * d.y, d.z};
}

// r = r_g + r_c. The arrival bonus keys on distance-to-goal; otherwise the
// goal term pays alpha_goal * (d_prev - d_t) for approach. The avoidance term
// is the crash penalty or alpha_avoid * max(d_safe - d_min, 0).
inline double reward_goal_term(double d_t, double d_prev, const RewardConfig& cfg) {
    if (d_t < cfg.arrival_threshold) return cfg.r_arrival;
    return cfg.alpha_goal * (d_prev - d_t);
}

inline double reward_avoid_term(double d_min, bool crashed, const RewardConfig& cfg) {
    if (crashed) return cfg.r_collision;
    if (std::isinf(d_min)) return 0.0;
    return cfg.alpha_avoid * std::max(cfg.d_safe - d_min, 0.0);
}

inline double reward(double d_t, double d_prev, double d_min, bool crashed, bool arrived,
                     const RewardConfig& cfg) {
    (void)arrived;  // the arrival branch keys on d_t directly
    if (d_t < 0 || d_prev < 0) throw ParameterError("reward: distances must be >= 0");
    return reward_goal_term(d_t, d_prev, cfg) + reward_avoid_term(d_min, crashed, cfg);
}

// Pinhole depth camera at `position`, yawed, level pitch: one ray per pixel
// against cylinders, boxes, terrain and other vehicles, clipped to max_range.
// Structured texture noise is added on hits only, so a clear ray reads
// exactly max_range.
inline vision::DepthImage render_depth(const ScenarioSpec& spec, const SensorConfig& sensor,
                                       const Vec3& position, double yaw,
                                       const std::vector<Vec3>& other_uavs = {},
                                       double uav_radius = 0.3) {
    const int W = sensor.width, H = sensor.height;
    const double f = (W / 2.0) / std::tan(sensor.hfov_deg * M_PI / 180.0 / 2.0);
    const double cy_ = std::cos(yaw), sy_ = std::sin(yaw);
    std::vector<double> data(static_cast<std::size_t>(W) * H);

    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            // body frame: x forward, y left, z up
            const double py = (W - 1) / 2.0 - c;
            const double pz = (H - 1) / 2.0 - r;
            Vec3 db{f, py, pz};
            db = db.normalized();
            const Vec3 d{cy_ * db.x - sy_ * db.y, sy_ * db.x + cy_ * db.y, db.z};

            double t_hit = sensor.max_range;
            bool hit = false;
            for (const auto& cyl : spec.cylinders)
                if (auto t = ray_cylinder(position, d, cyl); t && *t < t_hit) {
                    t_hit = *t;
                    hit = true;
                }
            for (const auto& box : spec.boxes)
                if (auto t = ray_box(position, d, box); t && *t < t_hit) {
                    t_hit = *t;
                    hit = true;
                }
            if (auto t = ray_heightfield(position, d, spec.terrain, t_hit); t && *t < t_hit) {
                t_hit = *t;
                hit = true;
            }
            for (const auto& other : other_uavs)
                if (auto t = ray_sphere(position, d, other, uav_radius); t && *t < t_hit) {
                    t_hit = *t;
                    hit = true;
                }

            double depth = t_hit;
            if (hit)
                depth = std::clamp(depth + spec.texture.sample(position + d * t_hit), 0.0,
                                   sensor.max_range);
            data[static_cast<std::size_t>(r) * W + c] = depth;
        }
    }
    return vision::DepthImage(H, W, sensor.max_range, std::move(data));
}

struct Observation {
    vision::DepthImage depth;
    Vec3 rel_goal;
    ActionCommand velocity;
};

struct StepInfo {
    double d_goal = 0.0;
    double d_prev = 0.0;
    double d_min = kInf;
    double r_g = 0.0;
    double r_c = 0.0;
    double path_increment = 0.0;
    std::string event;  // "", "arrival", "collision"
};

struct StepResult {
    std::vector<double> rewards;
    std::vector<bool> done;  // per-UAV terminal flag (crash or arrival)
    std::vector<StepInfo> info;
    bool episode_done = false;
};

class World {
  public:
    World(ScenarioSpec spec, EpisodeConfig cfg, RewardConfig reward_cfg, Rng& rng)
        : spec_(std::move(spec)), cfg_(cfg), reward_cfg_(reward_cfg) {
        cfg_.validate();
        reset(rng);
    }

    const ScenarioSpec& spec() const { return spec_; }
    const EpisodeConfig& config() const { return cfg_; }
    const RewardConfig& reward_config() const { return reward_cfg_; }
    const std::vector<UavState>& states() const { return states_; }
    std::vector<UavState>& mutable_states() { return states_; }
    int step_count() const { return step_count_; }
    bool episode_done() const { return episode_done_; }

    Observation observe(int i) const {
        const auto& u = states_[static_cast<std::size_t>(i)];
        std::vector<Vec3> others;
        for (int j = 0; j < cfg_.num_uavs; ++j)
            if (j != i && states_[static_cast<std::size_t>(j)].alive)
                others.push_back(states_[static_cast<std::size_t>(j)].position);
        Observation o;
        o.depth = render_depth(spec_, cfg_.sensor, u.position, u.yaw, others, cfg_.uav_radius);
        o.rel_goal = relative_goal_body(u.position, u.yaw, u.goal);
        o.velocity = u.velocity;
        return o;
    }

    // Ground-truth clearance of UAV i: obstacles, terrain, arena walls and
    // the other airborne UAVs (surface distance, i.e. center minus radius).
    double min_obstacle_distance(int i) const {
        const auto& u = states_[static_cast<std::size_t>(i)];
        double best = static_distance(u.position);
        for (int j = 0; j < cfg_.num_uavs; ++j) {
            if (j == i) continue;
            const auto& v = states_[static_cast<std::size_t>(j)];
            if (!v.alive) continue;
            best = std::min(best, std::max(0.0, (v.position - u.position).norm() - cfg_.uav_radius));
        }
        return best;
    }

    StepResult step(const std::vector<ActionCommand>& actions) {
        if (episode_done_) throw LifecycleError("step called on a finished episode");
        if (actions.size() != static_cast<std::size_t>(cfg_.num_uavs))
            throw DimensionError("step: expected " + std::to_string(cfg_.num_uavs) +
                                 " actions, got " + std::to_string(actions.size()));

        const std::size_t n = actions.size();
        StepResult res;
        res.rewards.assign(n, 0.0);
        res.done.assign(n, false);
        res.info.resize(n);

        std::vector<double> d_prev(n);
        std::vector<bool> was_alive(n);
        for (std::size_t i = 0; i < n; ++i) {
            d_prev[i] = (states_[i].goal - states_[i].position).norm();
            was_alive[i] = states_[i].alive;
        }

        // pass 1: simultaneous first-order integration; terminal UAVs freeze
        for (std::size_t i = 0; i < n; ++i) {
            auto& u = states_[i];
            if (!was_alive[i]) continue;
            const ActionCommand a = actions[i].clamped();
            const Vec3 before = u.position;
            u.yaw = wrap_angle(u.yaw + a.vyaw * cfg_.dt);
            u.position.x += a.vx * std::cos(u.yaw) * cfg_.dt;
            u.position.y += a.vx * std::sin(u.yaw) * cfg_.dt;
            u.position.z += a.vz * cfg_.dt;
            u.velocity = a;
            const double inc = (u.position - before).norm();
            u.path_length += inc;
            res.info[i].path_increment = inc;
        }

        ++step_count_;

        // pass 2: evaluate every UAV on the same post-motion snapshot so a
        // head-on pair crashes symmetrically
        std::vector<bool> crash_flag(n, false), arrive_flag(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            if (!was_alive[i]) continue;
            auto& u = states_[i];
            auto& info = res.info[i];
            info.d_prev = d_prev[i];
            info.d_goal = (u.goal - u.position).norm();

            double d_min = static_distance(u.position);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || !was_alive[j]) continue;
                d_min = std::min(d_min,
                                 std::max(0.0, (states_[j].position - u.position).norm() -
                                                   cfg_.uav_radius));
            }
            info.d_min = d_min;

            const bool outside =
                u.position.x < spec_.bounds_min.x || u.position.x > spec_.bounds_max.x ||
                u.position.y < spec_.bounds_min.y || u.position.y > spec_.bounds_max.y ||
                u.position.z < spec_.bounds_min.z || u.position.z > spec_.bounds_max.z;
            crash_flag[i] = outside || d_min < cfg_.uav_radius;
            arrive_flag[i] = !crash_flag[i] && info.d_goal < reward_cfg_.arrival_threshold;

            info.r_g = reward_goal_term(info.d_goal, info.d_prev, reward_cfg_);
            info.r_c = reward_avoid_term(info.d_min, crash_flag[i], reward_cfg_);
            res.rewards[i] = info.r_g + info.r_c;
        }

        // pass 3: apply terminal flags
        for (std::size_t i = 0; i < n; ++i) {
            auto& u = states_[i];
            if (!was_alive[i]) {
                res.done[i] = true;
                continue;
            }
            if (crash_flag[i]) {
                u.crashed = true;
                u.alive = false;
                res.info[i].event = "collision";
            } else if (arrive_flag[i]) {
                u.arrived = true;
                u.alive = false;
                res.info[i].event = "arrival";
            }
            res.done[i] = !u.alive;
        }

        bool all_terminal = true;
        for (const auto& u : states_) all_terminal = all_terminal && !u.alive;
        episode_done_ = all_terminal || step_count_ >= cfg_.max_steps;
        res.episode_done = episode_done_;
        return res;
    }

  private:
    // Distance to everything that is not another UAV.
    double static_distance(const Vec3& p) const {
        double best = kInf;
        for (const auto& c : spec_.cylinders) best = std::min(best, dist_cylinder(p, c));
        for (const auto& b : spec_.boxes) best = std::min(best, dist_box(p, b));
        const double z_over = std::max(0.0, p.z - spec_.terrain.height_at(p.x, p.y));
        const double radius = std::min(z_over, reward_cfg_.d_safe) + 2.0;
        best = std::min(best, dist_heightfield(p, spec_.terrain, radius));
        best = std::min(best, bounds_distance(p));
        return best;
    }

    double bounds_distance(const Vec3& p) const {
        double best = kInf;
        best = std::min(best, p.x - spec_.bounds_min.x);
        best = std::min(best, spec_.bounds_max.x - p.x);
        best = std::min(best, p.y - spec_.bounds_min.y);
        best = std::min(best, spec_.bounds_max.y - p.y);
        best = std::min(best, spec_.bounds_max.z - p.z);
        // the floor is the terrain's job
        return std::max(best, 0.0);
    }

    double spawn_clearance(const Vec3& p) const {
        double best = kInf;
        for (const auto& c : spec_.cylinders) best = std::min(best, dist_cylinder(p, c));
        for (const auto& b : spec_.boxes) best = std::min(best, dist_box(p, b));
        best = std::min(best, std::max(0.0, p.z - spec_.terrain.height_at(p.x, p.y)));
        return best;
    }

    void reset(Rng& rng) {
        states_.assign(static_cast<std::size_t>(cfg_.num_uavs), UavState{});
        if (cfg_.init_pattern == InitPattern::Circle) {
            for (int i = 0; i < cfg_.num_uavs; ++i) {
                const double ang = 2.0 * M_PI * i / cfg_.num_uavs;
                auto& u = states_[static_cast<std::size_t>(i)];
                u.position = {cfg_.circle_radius * std::cos(ang),
                              cfg_.circle_radius * std::sin(ang), cfg_.circle_height};
                u.goal = {cfg_.circle_radius * std::cos(ang + M_PI),
                          cfg_.circle_radius * std::sin(ang + M_PI), cfg_.circle_height};
                u.yaw = wrap_angle(std::atan2(u.goal.y - u.position.y, u.goal.x - u.position.x));
            }
            return;
        }
        const double hx = cfg_.spawn_extent_xy / 2.0;
        auto sample_point = [&]() -> Vec3 {
            return {rng.uniform(-hx, hx), rng.uniform(-hx, hx),
                    rng.uniform(cfg_.spawn_z0, cfg_.spawn_z0 + cfg_.spawn_extent_z)};
        };
        int attempts = 0;
        for (int i = 0; i < cfg_.num_uavs; ++i) {
            auto& u = states_[static_cast<std::size_t>(i)];
            for (;;) {
                if (++attempts > 10000)
                    throw ConfigError("reset: scenario too dense to place " +
                                      std::to_string(cfg_.num_uavs) + " starts and goals");
                const Vec3 start = sample_point();
                if (spawn_clearance(start) <= cfg_.uav_radius) continue;
                bool ok = true;
                for (int j = 0; j < i && ok; ++j)
                    if ((states_[static_cast<std::size_t>(j)].position - start).norm() <
                        2.0 * cfg_.uav_radius)
                        ok = false;
                if (!ok) continue;
                const Vec3 goal = sample_point();
                if (spawn_clearance(goal) <= cfg_.uav_radius) continue;
                if ((goal - start).norm() < cfg_.min_start_goal_dist) continue;
                u.position = start;
                u.goal = goal;
                u.yaw = wrap_angle(std::atan2(goal.y - start.y, goal.x - start.x));
                break;
            }
        }
    }

    ScenarioSpec spec_;
    EpisodeConfig cfg_;
    RewardConfig reward_cfg_;
    std::vector<UavState> states_;
    int step_count_ = 0;
    bool episode_done_ = false;
};

// Trajectory stream: one row per (step, uav).
inline std::string trajectory_csv_header() {
    return "episode,step,uav,x,y,z,yaw,vx,vz,vyaw,reward,d_min,d_goal,event";
}

inline void append_trajectory_rows(std::string& out, int episode, int step, const World& world,
                                   const StepResult& res) {
    char buf[320];
    const auto& states = world.states();
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto& u = states[i];
        const auto& info = res.info[i];
        std::snprintf(buf, sizeof(buf),
                      "%d,%d,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n",
                      episode, step, i, u.position.x, u.position.y, u.position.z, u.yaw,
                      u.velocity.vx, u.velocity.vz, u.velocity.vyaw, res.rewards[i],
                      std::isinf(info.d_min) ? -1.0 : info.d_min, info.d_goal, info.event.c_str());
        out += buf;
    }
}

}  // namespace uavnav::sim
