// ltlforge/reward_machine.hpp — converts monitor transitions into rewards.
//
// Protocol per step: a violation ends the episode with -1; an acceptance ends
// it with +1 (for formulas containing Always only at the horizon, since their
// obligations are only meaningfully discharged when time runs out); otherwise
// the step earns 0.1 decayed by 0.8 per consecutive step spent in an
// unchanged monitor state; running out of time unaccepted ends the episode
// with 0.

#pragma once

#include <cmath>

#include "ltlforge/automaton.hpp"

namespace ltlforge {

struct RewardSpec {
    double step_reward = 0.1;
    double violation_reward = -1.0;
    double accept_reward = 1.0;
    double stay_decay = 0.8;
};

enum class EpisodeStatus { Running, Success, Violation, Timeout };

const char* episode_status_name(EpisodeStatus s);

struct RewardStep {
    double reward = 0.0;
    bool done = false;
    EpisodeStatus status = EpisodeStatus::Running;
    MonitorState monitor;
};

class RewardMachine {
public:
    RewardMachine() = default;
    RewardMachine(const Dfa* dfa, bool accept_only_at_horizon, RewardSpec spec = {})
        : dfa_(dfa), horizon_only_(accept_only_at_horizon), spec_(spec),
          monitor_(MonitorState::initial(*dfa)) {}

    // Applies one letter at step index t (1-based after the action); `last`
    // marks the horizon boundary.
    RewardStep step(const Letter& l, bool last);

    const MonitorState& monitor() const { return monitor_; }
    bool accept_only_at_horizon() const { return horizon_only_; }

private:
    const Dfa* dfa_ = nullptr;
    bool horizon_only_ = false;
    RewardSpec spec_;
    MonitorState monitor_;
};

// Formulas containing Always succeed only at the horizon.
inline bool accepts_only_at_horizon(const Formula& f) {
    return f.contains_kind(NodeKind::Always);
}

}  // namespace ltlforge
