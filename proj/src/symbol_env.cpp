#include "ltlforge/symbol_env.hpp"

namespace ltlforge {

SymbolEnv::SymbolEnv(const SymbolEnvConfig& cfg, const Formula& formula, const Dfa* dfa)
    : cfg_(cfg), dfa_(dfa),
      machine_(dfa, accepts_only_at_horizon(formula), cfg.rewards) {}

int SymbolEnv::action_count() const {
    return cfg_.free_assignments ? 1 << cfg_.symbols : cfg_.symbols;
}

Vec SymbolEnv::observe(int prev_action) const {
    Vec obs = Vec::Zero(observation_dim());
    if (prev_action >= 0) obs[prev_action] = 1.0;
    obs[observation_dim() - 1] = static_cast<double>(t_) / cfg_.horizon;
    return obs;
}

Vec SymbolEnv::reset() {
    emitted_.clear();
    t_ = 0;
    status_ = EpisodeStatus::Running;
    return observe(-1);
}

SymbolStepResult SymbolEnv::step(int action) {
    if (status_ != EpisodeStatus::Running)
        throw std::logic_error("step on a finished Symbol episode");
    if (action < 0 || action >= action_count())
        throw std::out_of_range("action out of range");

    Letter l;
    l.bits = cfg_.free_assignments ? static_cast<std::uint32_t>(action) : 1u << action;
    ++t_;
    emitted_.push_back(l);

    RewardStep rs = machine_.step(l, t_ >= cfg_.horizon);
    status_ = rs.done ? rs.status : EpisodeStatus::Running;

    SymbolStepResult out;
    out.observation = observe(action);
    out.reward = rs.reward;
    out.done = rs.done;
    out.status = rs.done ? rs.status : EpisodeStatus::Running;
    out.letter = l;
    return out;
}

}  // namespace ltlforge
