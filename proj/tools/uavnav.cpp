// Command-line front end: train / eval / intervene / render / inspect.
// Exit codes: 0 success, 1 runtime abort, 2 usage or config error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "uavnav/eval/suite.hpp"
#include "uavnav/io/checkpoint.hpp"
#include "uavnav/io/config.hpp"
#include "uavnav/train/ablation.hpp"
#include "uavnav/train/trainer.hpp"
#include "uavnav/vision/pgm.hpp"

namespace fs = std::filesystem;
using namespace uavnav;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IntegrityError("cannot open for writing: " + path);
    f << content;
}

io::RunConfig load_config(const std::string& config_path,
                          const std::vector<std::string>& overrides, std::uint64_t* seed) {
    io::RunConfig cfg;
    io::KvText kv;
    if (!config_path.empty()) kv = io::KvText::parse_file(config_path);
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + ov + "'");
        kv.set(ov.substr(0, eq), ov.substr(eq + 1));
    }
    if (seed) kv.set("seed", std::to_string(*seed));
    cfg.apply(kv);
    return cfg;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string tok;
    std::istringstream in(s);
    while (std::getline(in, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              std::optional<std::uint64_t> seed, const std::string& out,
              const std::string& resume, const std::string& ablation_masks,
              const std::string& ablation_scenario, int ablation_episodes) {
    fs::create_directories(out);
    std::uint64_t seed_v = seed.value_or(0);
    io::RunConfig cfg = load_config(config_path, overrides, seed ? &seed_v : nullptr);
    write_file(out + "/config_echo.txt", cfg.echo());

    if (!ablation_masks.empty()) {
        auto rows = train::run_ablation(cfg, split_csv(ablation_masks), ablation_scenario,
                                        ablation_episodes, out);
        std::string csv = "mask,policy_width,success_rate,spl\n";
        for (const auto& r : rows) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%.17g\n", r.mask.c_str(), r.policy_width,
                          r.success_rate, r.spl);
            csv += buf;
            std::cout << "mask " << r.mask << "  width " << r.policy_width << "  success "
                      << r.success_rate << "%  spl " << r.spl << "%\n";
        }
        write_file(out + "/ablation.csv", csv);
        return 0;
    }

    train::Trainer trainer = resume.empty() ? train::Trainer(cfg, out)
                                            : train::load_trainer(resume, out);
    trainer.train([](const train::Trainer& t, const train::EpisodeLog& log) {
        std::cout << "episode " << log.episode << "  return " << log.return_mean << "  success "
                  << log.success << "/" << t.config().world.num_uavs << "  buffer "
                  << log.buffer_size << "  l_q " << log.l_q << "\n";
    });
    write_file(out + "/trainlog.csv", trainer.log().csv());
    trainer.save_checkpoint(out + "/checkpoint_final.ck");
    std::cout << "wrote " << out << "/trainlog.csv and checkpoint_final.ck\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& out, const std::string& scenarios,
             const std::string& inits, const std::string& uavs, int episodes, int threads,
             std::uint64_t seed, bool trajectories) {
    fs::create_directories(out);
    train::Trainer trainer = train::load_trainer(checkpoint);
    const io::RunConfig& cfg = trainer.config();

    eval::SuiteSpec suite;
    suite.scenarios = split_csv(scenarios);
    suite.inits.clear();
    for (const auto& s : split_csv(inits)) suite.inits.push_back(sim::parse_init_pattern(s));
    suite.uav_counts.clear();
    for (const auto& s : split_csv(uavs)) suite.uav_counts.push_back(std::stoi(s));
    if (episodes > 0) {
        suite.episodes_random = episodes;
        suite.episodes_circle = episodes;
    } else {
        suite.episodes_random = cfg.eval.episodes_random;
        suite.episodes_circle = cfg.eval.episodes_circle;
    }
    suite.threads = threads;
    suite.seed = seed;

    eval::SacPolicy policy(&trainer.agent());
    auto cells = eval::run_suite(policy, cfg, suite);

    nlohmann::json report;
    report["format"] = "uavnav-eval-report";
    report["version"] = 1;
    report["seed"] = seed;
    report["checkpoint"] = checkpoint;
    report["cells"] = nlohmann::json::array();
    std::string csv = "scenario,init,uavs,episodes,success_rate,spl,extra_mean,extra_std,"
                      "speed_mean,speed_std\n";
    std::string episodes_csv = "scenario,init,uavs,record,success,collided,shortest,actual,steps,"
                               "mean_speed\n";
    for (const auto& c : cells) {
        nlohmann::json jc;
        jc["scenario"] = c.scenario;
        jc["init"] = sim::to_string(c.init);
        jc["uavs"] = c.num_uavs;
        jc["episodes"] = c.episodes;
        jc["success_rate"] = c.success_rate;
        jc["spl"] = c.spl;
        jc["extra_distance_mean"] = c.extra.mean;
        jc["extra_distance_std"] = c.extra.std;
        jc["average_speed_mean"] = c.speed.mean;
        jc["average_speed_std"] = c.speed.std;
        report["cells"].push_back(jc);

        char buf[320];
        std::snprintf(buf, sizeof(buf), "%s,%s,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      c.scenario.c_str(), sim::to_string(c.init).c_str(), c.num_uavs, c.episodes,
                      c.success_rate, c.spl, c.extra.mean, c.extra.std, c.speed.mean, c.speed.std);
        csv += buf;
        for (std::size_t ri = 0; ri < c.records.size(); ++ri) {
            const auto& r = c.records[ri];
            std::snprintf(buf, sizeof(buf), "%s,%s,%d,%zu,%d,%d,%.17g,%.17g,%d,%.17g\n",
                          c.scenario.c_str(), sim::to_string(c.init).c_str(), c.num_uavs, ri,
                          r.success ? 1 : 0, r.collided ? 1 : 0, r.shortest, r.actual, r.steps,
                          r.mean_speed);
            episodes_csv += buf;
        }
        std::cout << c.scenario << " / " << sim::to_string(c.init) << " / " << c.num_uavs
                  << " uavs:  success " << c.success_rate << "%  spl " << c.spl << "%  extra "
                  << c.extra.mean << "/" << c.extra.std << "  speed " << c.speed.mean << "/"
                  << c.speed.std << "\n";
    }
    write_file(out + "/report.json", report.dump(2) + "\n");
    write_file(out + "/report.csv", csv);
    write_file(out + "/episodes.csv", episodes_csv);

    if (trajectories) {
        std::string traj = sim::trajectory_csv_header() + "\n";
        int episode_id = 0;
        for (const auto& c : cells) {
            sim::EpisodeConfig ec = cfg.world;
            ec.num_uavs = c.num_uavs;
            ec.init_pattern = c.init;
            Rng rng(eval::derive(seed, static_cast<std::size_t>(episode_id), 0));
            sim::ScenarioSpec spec = sim::generate_scenario(c.scenario, rng.next_u64());
            sim::World world(spec, ec, cfg.reward, rng);
            while (!world.episode_done()) {
                std::vector<sim::ActionCommand> actions(static_cast<std::size_t>(ec.num_uavs));
                for (int i = 0; i < ec.num_uavs; ++i)
                    if (world.states()[static_cast<std::size_t>(i)].alive)
                        actions[static_cast<std::size_t>(i)] = policy.act(
                            world.observe(i), ec.sensor.height, ec.sensor.width, rng);
                auto res = world.step(actions);
                sim::append_trajectory_rows(traj, episode_id, world.step_count(), world, res);
            }
            ++episode_id;
        }
        write_file(out + "/trajectories.csv", traj);
    }
    std::cout << "wrote " << out << "/report.json\n";
    return 0;
}

int cmd_intervene(const std::string& in, const std::string& aug, const std::string& out,
                  std::uint64_t seed, double lambda, double sigma, int kernel, double angle,
                  double factor) {
    vision::DepthImage img = vision::read_pgm16(in);
    Rng rng(seed);
    vision::DepthImage result;
    if (aug == "amplitude") {
        const double l = lambda > 0 ? lambda : rng.uniform(0.5, 1.5);
        auto res = vision::amplitude_perturb_detailed(img, l);
        result = res.image;
        // phase drift of the unclamped spectrum against the source
        vision::Spectrum before = vision::fft2(img);
        vision::Spectrum after =
            vision::fft2(vision::DepthImage(img.height, img.width, 1e18, res.pre_clamp));
        double drift = 0.0;
        for (std::size_t i = 0; i < before.amplitude.size(); ++i)
            if (before.amplitude[i] > 1e-9) {
                double d = std::abs(after.phase[i] - before.phase[i]);
                d = std::min(d, 2.0 * M_PI - d);
                drift = std::max(drift, d);
            }
        std::cout << "lambda " << l << "  max phase drift " << drift << "  max imag residue "
                  << res.max_imag << "\n";
    } else if (aug == "noise") {
        result = vision::random_noise(img, sigma >= 0 ? sigma : 0.02 * img.max_range, rng);
    } else if (aug == "blur") {
        const double a = angle >= 0 ? angle : rng.uniform(0.0, M_PI);
        result = vision::motion_blur(img, kernel, a);
    } else if (aug == "contrast") {
        const double f = factor > 0 ? factor : rng.uniform(0.7, 1.3);
        result = vision::contrast_stretch(img, f);
    } else {
        throw ConfigError("unknown augmentation '" + aug +
                          "' (expected amplitude|noise|blur|contrast)");
    }
    vision::write_pgm16(out, result);
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_render(const std::string& scenario, std::uint64_t seed, const std::vector<double>& pose,
               const std::string& out, int width, int height, double hfov, double max_range,
               const std::string& save_scene) {
    sim::ScenarioSpec spec =
        scenario == "empty" ? sim::empty_scenario() : sim::generate_scenario(scenario, seed);
    sim::SensorConfig sensor;
    sensor.width = width;
    sensor.height = height;
    sensor.hfov_deg = hfov;
    sensor.max_range = max_range;
    const sim::Vec3 pos{pose[0], pose[1], pose[2]};
    vision::DepthImage img = sim::render_depth(spec, sensor, pos, pose[3]);
    vision::write_pgm16(out, img);
    if (!save_scene.empty()) sim::save_scenario(spec, save_scene);
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_inspect(const std::string& checkpoint) {
    io::CheckpointReader r(checkpoint);
    std::cout << "version: " << r.version() << "\nchecksum: ok\nblocks: " << r.names().size()
              << "\n";
    for (const auto& name : r.names()) {
        const auto& b = r.get(name);
        std::cout << "  " << name << "  [";
        for (std::size_t i = 0; i < b.dims.size(); ++i)
            std::cout << (i ? "x" : "") << b.dims[i];
        const char* ty = b.type == io::BlockType::F64   ? "f64"
                         : b.type == io::BlockType::F32 ? "f32"
                         : b.type == io::BlockType::U64 ? "u64"
                                                        : "bytes";
        std::cout << "] " << ty << "\n";
    }
    if (r.has("config")) std::cout << "\n--- config echo ---\n" << r.get("config").as_text();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-UAV collision-avoidance RL with disentangled latent representations"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a policy");
    std::string config_path, out_dir = "run", resume, ablation_masks, ablation_scenario = "forest";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed_opt;
    int ablation_episodes = 20;
    train_cmd->add_option("--config", config_path, "config file (key = value)");
    train_cmd->add_option("--set", overrides, "override, key=value (repeatable)");
    train_cmd->add_option("--seed", seed_opt, "seed override");
    train_cmd->add_option("--out", out_dir, "output directory");
    train_cmd->add_option("--resume", resume, "checkpoint to resume from");
    train_cmd->add_option("--ablation", ablation_masks,
                          "comma-separated block masks, e.g. z2+z3,z2,z3,z1+z2+z3");
    train_cmd->add_option("--ablation-scenario", ablation_scenario, "held-out eval scenario");
    train_cmd->add_option("--ablation-episodes", ablation_episodes, "eval episodes per mask");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint over a scenario grid");
    std::string checkpoint, eval_out = "eval", scenarios = "grassland,snow_mountain,forest",
                inits = "random,circle", uavs = "8";
    int episodes = 0, threads = 1;
    std::uint64_t eval_seed = 1;
    bool trajectories = false;
    eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--out", eval_out, "output directory");
    eval_cmd->add_option("--scenarios", scenarios, "comma-separated scenario names");
    eval_cmd->add_option("--init", inits, "comma-separated init patterns (random,circle)");
    eval_cmd->add_option("--uavs", uavs, "comma-separated swarm sizes, e.g. 6,8,10,12");
    eval_cmd->add_option("--episodes", episodes, "episodes per cell (0 = config default)");
    eval_cmd->add_option("--threads", threads, "episode fan-out threads");
    eval_cmd->add_option("--seed", eval_seed, "evaluation seed");
    eval_cmd->add_flag("--trajectories", trajectories, "write one traced episode per cell");

    // intervene
    auto* int_cmd = app.add_subcommand("intervene", "apply one augmentation to a depth PGM");
    std::string in_pgm, out_pgm = "out.pgm", aug = "amplitude";
    std::uint64_t int_seed = 1;
    double lambda = -1, sigma = -1, angle = -1, factor = -1;
    int kernel = 5;
    int_cmd->add_option("--in", in_pgm, "input 16-bit PGM")->required();
    int_cmd->add_option("--aug", aug, "amplitude|noise|blur|contrast")->required();
    int_cmd->add_option("--out", out_pgm, "output PGM");
    int_cmd->add_option("--seed", int_seed, "seed for drawn parameters");
    int_cmd->add_option("--lambda", lambda, "amplitude scale (default: drawn)");
    int_cmd->add_option("--sigma", sigma, "noise sigma in meters (default: 2% of range)");
    int_cmd->add_option("--kernel", kernel, "blur kernel length (odd)");
    int_cmd->add_option("--angle", angle, "blur angle in radians (default: drawn)");
    int_cmd->add_option("--factor", factor, "contrast factor (default: drawn)");

    // render
    auto* render_cmd = app.add_subcommand("render", "render a depth image from a scenario");
    std::string scenario = "playground", render_out = "depth.pgm", save_scene;
    std::uint64_t render_seed = 1;
    std::vector<double> pose{0, 0, 2, 0};
    int width = 64, height = 64;
    double hfov = 90, max_range = 20;
    render_cmd->add_option("--scenario", scenario, "playground|grassland|snow_mountain|forest|empty");
    render_cmd->add_option("--seed", render_seed, "scenario seed");
    render_cmd->add_option("--pose", pose, "x y z yaw")->expected(4);
    render_cmd->add_option("--out", render_out, "output PGM");
    render_cmd->add_option("--width", width, "image width");
    render_cmd->add_option("--height", height, "image height");
    render_cmd->add_option("--hfov", hfov, "horizontal field of view, degrees");
    render_cmd->add_option("--max-range", max_range, "sensor range, meters");
    render_cmd->add_option("--save-scenario", save_scene, "also write the scenario text file");

    // inspect
    auto* inspect_cmd = app.add_subcommand("inspect", "describe a checkpoint");
    std::string inspect_ck;
    inspect_cmd->add_option("--checkpoint", inspect_ck, "checkpoint file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (train_cmd->parsed())
            return cmd_train(config_path, overrides, seed_opt, out_dir, resume, ablation_masks,
                             ablation_scenario, ablation_episodes);
        if (eval_cmd->parsed())
            return cmd_eval(checkpoint, eval_out, scenarios, inits, uavs, episodes, threads,
                            eval_seed, trajectories);
        if (int_cmd->parsed())
            return cmd_intervene(in_pgm, aug, out_pgm, int_seed, lambda, sigma, kernel, angle,
                                 factor);
        if (render_cmd->parsed())
            return cmd_render(scenario, render_seed, pose, render_out, width, height, hfov,
                              max_range, save_scene);
        if (inspect_cmd->parsed()) return cmd_inspect(inspect_ck);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
