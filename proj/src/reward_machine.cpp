#include "ltlforge/reward_machine.hpp"

namespace ltlforge {

const char* episode_status_name(EpisodeStatus s) {
    switch (s) {
        case EpisodeStatus::Running: return "running";
        case EpisodeStatus::Success: return "success";
        case EpisodeStatus::Violation: return "violation";
        case EpisodeStatus::Timeout: return "timeout";
    }
    return "?";
}

RewardStep RewardMachine::step(const Letter& l, bool last) {
    monitor_ = monitor_step(monitor_, *dfa_, l);
    RewardStep out;
    out.monitor = monitor_;
    if (monitor_.status == MonitorStatus::Violated) {
        out.reward = spec_.violation_reward;
        out.done = true;
        out.status = EpisodeStatus::Violation;
        return out;
    }
    if (monitor_.status == MonitorStatus::Accepting && (!horizon_only_ || last)) {
        out.reward = spec_.accept_reward;
        out.done = true;
        out.status = EpisodeStatus::Success;
        return out;
    }
    if (last) {
        out.reward = 0.0;
        out.done = true;
        out.status = EpisodeStatus::Timeout;
        return out;
    }
    out.reward =
        spec_.step_reward * std::pow(spec_.stay_decay, monitor_.steps_in_state - 1);
    out.done = false;
    out.status = EpisodeStatus::Running;
    return out;
}

}  // namespace ltlforge
