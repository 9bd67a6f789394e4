#pragma once

#include <string>
#include <vector>

#include "uavnav/eval/suite.hpp"
#include "uavnav/train/trainer.hpp"

namespace uavnav::train {

struct AblationRow {
    std::string mask;
    int policy_width = 0;
    double success_rate = 0.0;
    double spl = 0.0;
    TrainLog log;
};

// Trains one model per block mask from the same seed and scores each in a
// held-out scenario. Rows come back in mask order.
inline std::vector<AblationRow> run_ablation(const RunConfig& base,
                                             const std::vector<std::string>& masks,
                                             const std::string& eval_scenario, int eval_episodes,
                                             const std::string& out_dir = "") {
    std::vector<AblationRow> rows;
    for (const auto& mask : masks) {
        RunConfig cfg = base;
        cfg.train.mask = mask;
        cfg.finalize();

        Trainer trainer(cfg, out_dir);
        trainer.train();

        eval::SuiteSpec suite;
        suite.scenarios = {eval_scenario};
        suite.inits = {sim::InitPattern::Random};
        suite.uav_counts = {cfg.world.num_uavs};
        suite.episodes_random = eval_episodes;
        suite.seed = cfg.seed;
        eval::SacPolicy policy(&trainer.agent());
        auto cells = eval::run_suite(policy, cfg, suite);

        AblationRow row;
        row.mask = mask;
        row.policy_width = trainer.policy_width();
        row.success_rate = cells[0].success_rate;
        row.spl = cells[0].spl;
        row.log = trainer.log();
        rows.push_back(std::move(row));

        if (!out_dir.empty())
            trainer.save_checkpoint(out_dir + "/ablation_" + latent::BlockMask::parse(mask).str() +
                                    ".ck");
    }
    return rows;
}

}  // namespace uavnav::train
