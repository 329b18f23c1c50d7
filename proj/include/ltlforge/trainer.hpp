// ltlforge/trainer.hpp — A2C training over formula datasets.
//
// Each update runs `rollouts_per_update` episodes of one curriculum-ordered
// formula, accumulates exact gradients of the batch-mean A2C loss and takes
// one RMSprop step.  Evaluation is deterministic (argmax policy, fixed
// seeds); a formula counts as a success only when its episode ends accepting
// with no violation.

#pragma once

#include <functional>
#include <memory>

#include "ltlforge/baselines.hpp"
#include "ltlforge/craft_env.hpp"
#include "ltlforge/formula_gen.hpp"
#include "ltlforge/symbol_env.hpp"

namespace ltlforge {

struct TrainConfig {
    GenConfig::Domain domain = GenConfig::Domain::Symbol;
    BaselineKind baseline = BaselineKind::Full;
    std::string dataset_dir;
    std::string out_dir;

    int updates = 30000;
    int rollouts_per_update = 15;
    int eval_cadence = 500;  // 200 for Craft (the paper's plotting unit)
    int eval_probe = 50;     // probe formulas per split on the learning curve
    int checkpoint_every = 5000;

    double lr = 7e-4;
    double rms_decay = 0.99;
    double rms_eps = 1e-5;
    double gamma = 0.9;
    double entropy_weight = 0.1;
    int bootstrap_n = 0;  // 0 = Monte-Carlo returns; Craft default 15

    bool curriculum = true;
    int hidden = 64;
    int msg = 32;

    int symbol_horizon = 15;
    int craft_horizon = 100;
    int craft_map_size = 7;
    bool craft_use_closer = true;

    std::uint64_t seed = 0;

    static TrainConfig defaults_for(GenConfig::Domain domain);
    KeyValueMap to_key_values() const;
    static TrainConfig from_key_values(const KeyValueMap& kv);
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    EpisodeStatus outcome = EpisodeStatus::Running;
    size_t formula_index = 0;
    double total_reward = 0.0;
};

struct EvalRow {
    std::string split;
    int episodes = 0;
    int successes = 0;
    int violations = 0;
    int timeouts = 0;
    double success_rate = 0.0;
    double mean_length = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
};

std::string eval_report_tsv(const EvalReport& report);

// ── model construction ──────────────────────────────────────────────────────

struct ModelBundle {
    std::unique_ptr<Registry> registry;
    std::unique_ptr<PolicyModel> model;
    Alphabet exec_alphabet;  // with closer predicates for Craft

    ModelBundle() : exec_alphabet(Alphabet::symbols(1)) {}
};

ModelBundle build_baseline(BaselineKind kind, const TrainConfig& cfg, const GenConfig& gen);
ModelBundle bundle_from_checkpoint(BaselineKind kind, const TrainConfig& cfg,
                                   const GenConfig& gen, const std::string& model_path);

// ── optimizer ───────────────────────────────────────────────────────────────

class RmsProp {
public:
    RmsProp(double lr, double decay, double eps, Registry acc)
        : lr_(lr), decay_(decay), eps_(eps), acc_(std::move(acc)) {}

    void step(Registry& params, Registry& grads);
    Registry& state() { return acc_; }

private:
    double lr_, decay_, eps_;
    Registry acc_;
};

// ── rollouts and evaluation ─────────────────────────────────────────────────

// One episode of `entry`'s formula; stochastic=true samples from the softmax
// (training), false takes the argmax with lowest-index tie-break (testing).
Trajectory run_symbol_episode(PolicyModel& model, const DatasetEntry& entry,
                              const TrainConfig& cfg, Rng& rng, bool stochastic);
Trajectory run_craft_episode(PolicyModel& model, const Formula& base_formula,
                             const CraftTask& task, const TrainConfig& cfg, Rng& action_rng,
                             Rng& map_rng, bool stochastic);

class Trainer {
public:
    Trainer(TrainConfig cfg, const Dataset& dataset);

    // Full training run: learning-curve TSV plus periodic checkpoints under
    // cfg.out_dir.  Resumable: pass the update index of a saved checkpoint.
    void train(int resume_from_update = 0);

    // Restores model parameters and optimizer state saved by train();
    // returns the update count recorded in the checkpoint.
    int load_checkpoint(const std::string& dir);

    // Deterministic evaluation of a whole split (subset when limit > 0).
    EvalRow evaluate_split(const DatasetSplit& split, int limit = 0);
    EvalReport evaluate_all();

    PolicyModel& model() { return *bundle_.model; }
    Registry& registry() { return *bundle_.registry; }
    const std::vector<size_t>& curriculum() const { return order_; }

    // Test hook: called once per update with (update, formula_index).
    std::function<void(int, size_t)> on_update;

    // A2C update over the given trajectories; returns batch-mean loss parts.
    LossParts a2c_update(const std::vector<Trajectory>& batch);

    Trajectory collect_episode(size_t formula_index, std::uint64_t stream, bool stochastic);

private:
    const CraftTask& craft_task(size_t formula_index);

    TrainConfig cfg_;
    const Dataset& ds_;
    const DatasetSplit* train_split_;
    std::vector<size_t> order_;
    ModelBundle bundle_;
    std::unique_ptr<RmsProp> opt_;
    std::map<size_t, CraftTask> craft_tasks_;
    A2cHyper hyper_;
};

}  // namespace ltlforge
