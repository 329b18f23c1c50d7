// ltlforge/symbol_env.hpp — the Symbol domain.
//
// The agent emits one symbol per step for a fixed horizon; the emitted
// sequence must be accepted by the task formula.  Under the default one-hot
// model an action is one of k symbols; a config flag switches to the free
// model where an action is an arbitrary truth assignment (2^k actions).

#pragma once

#include <Eigen/Core>

#include "ltlforge/reward_machine.hpp"

namespace ltlforge {

using Vec = Eigen::VectorXd;

struct SymbolEnvConfig {
    int symbols = 5;
    int horizon = 15;
    bool free_assignments = false;  // actions are letters over the free model
    RewardSpec rewards;
};

struct SymbolStepResult {
    Vec observation;
    double reward = 0.0;
    bool done = false;
    EpisodeStatus status = EpisodeStatus::Running;
    Letter letter;
};

class SymbolEnv {
public:
    SymbolEnv(const SymbolEnvConfig& cfg, const Formula& formula, const Dfa* dfa);

    int action_count() const;
    int observation_dim() const { return action_count() + 1; }

    // Observation before any action: zero action one-hot + time 0.
    Vec reset();
    SymbolStepResult step(int action);

    int t() const { return t_; }
    const std::vector<Letter>& emitted() const { return emitted_; }
    const MonitorState& monitor() const { return machine_.monitor(); }
    EpisodeStatus status() const { return status_; }

private:
    Vec observe(int prev_action) const;

    SymbolEnvConfig cfg_;
    const Dfa* dfa_;
    RewardMachine machine_;
    std::vector<Letter> emitted_;
    int t_ = 0;
    EpisodeStatus status_ = EpisodeStatus::Running;
};

}  // namespace ltlforge
