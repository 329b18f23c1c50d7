// ltlforge/automaton.hpp — LTLf formulas as deterministic finite automata.
//
// The construction is formula progression: a state is the normalized residual
// obligation after reading a prefix, the initial state is a fresh copy of the
// whole formula, and a state accepts when its obligation evaluates true on an
// empty remainder.  The initial state is kept distinct and never accepting,
// which makes every automaton reject the empty trace (episodes always emit at
// least one letter).
//
// Transitions are total and deterministic by construction: each state reads
// only the propositions occurring in its own residual (its "support") and
// stores one target per support assignment.  A guard is therefore a set of
// support assignments, and its concrete-letter size is a closed-form count.

#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ltlforge/formula.hpp"
#include "ltlforge/util.hpp"

namespace ltlforge {

using BigInt = boost::multiprecision::cpp_int;

// ── Letters and alphabet models ─────────────────────────────────────────────

// One time step's truth assignment; bit i is proposition i.
struct Letter {
    std::uint32_t bits = 0;

    bool holds(int prop) const { return (bits >> prop) & 1u; }
    bool operator==(const Letter& o) const { return bits == o.bits; }
};

// How letters range over an alphabet:
//   OneHot — exactly one proposition true per step (Symbol actions);
//   Free   — any subset may be true (Craft predicate evaluations).
class AlphabetModel {
public:
    enum class Kind { OneHot, Free };

    static AlphabetModel one_hot(const Alphabet& a) { return {Kind::OneHot, a.size()}; }
    static AlphabetModel free(const Alphabet& a) { return {Kind::Free, a.size()}; }

    Kind kind() const { return kind_; }
    int prop_count() const { return props_; }

    // Total number of concrete letters per step.
    BigInt letter_count() const;
    // All concrete letters; only sensible for small alphabets (oracle use).
    std::vector<Letter> all_letters() const;

    bool valid(const Letter& l) const;

private:
    AlphabetModel(Kind k, int props) : kind_(k), props_(props) {}
    Kind kind_;
    int props_;
};

// ── Dfa ─────────────────────────────────────────────────────────────────────

class StateCapError : public std::runtime_error {
public:
    explicit StateCapError(int cap)
        : std::runtime_error("automaton exceeds state cap of " + std::to_string(cap)) {}
};

class Dfa {
public:
    struct State {
        Formula residual;              // normalized obligation (debug + dedup)
        std::uint32_t support = 0;     // propositions this state's row reads
        std::vector<int> support_props;// set bits of support, ascending
        std::vector<int> target;       // one entry per transition class
        bool accepting = false;
    };

    int num_states() const { return static_cast<int>(states_.size()); }
    int initial() const { return 0; }
    std::optional<int> dead() const { return dead_; }
    bool is_accepting(int q) const { return states_[static_cast<size_t>(q)].accepting; }
    const State& state(int q) const { return states_[static_cast<size_t>(q)]; }
    const AlphabetModel& model() const { return model_; }

    // Number of transition classes out of state q, and the concrete-letter
    // count of each class.  OneHot: classes are the k letters themselves.
    // Free: classes are assignments of the state's support, each standing for
    // 2^(props - |support|) concrete letters.
    int class_count(int q) const;
    BigInt class_letter_count(int q) const;
    int class_of(int q, const Letter& l) const;
    // A concrete letter drawn uniformly from a class.
    Letter sample_letter_in_class(int q, int cls, Rng& rng) const;

    int step(int q, const Letter& l) const;
    bool accepts(std::span<const Letter> trace) const;

    // Text dump (states, accepting set, guard-labelled edges) for golden tests.
    std::string dump(const Alphabet& alphabet) const;

private:
    friend Dfa compile(const Formula&, const AlphabetModel&, int);
    std::vector<State> states_;
    std::optional<int> dead_;
    AlphabetModel model_ = AlphabetModel::one_hot(Alphabet::symbols(1));
};

// Compiles under finite-trace semantics with strong Next.  Throws
// StateCapError when the construction exceeds `state_cap` states.
Dfa compile(const Formula& f, const AlphabetModel& model, int state_cap = 10000);

// Building blocks of the construction, exposed for property tests.
Formula normalize_formula(const Formula& f);
Formula progress_formula(const Formula& f, const Letter& l);
bool eval_at_end(const Formula& f);

// Textbook LTLf semantics by structural recursion over (formula, position).
// Independent of the progression construction; the empty trace is rejected.
bool brute_force_accepts(const Formula& f, std::span<const Letter> trace);

// ── Monitoring ──────────────────────────────────────────────────────────────

enum class MonitorStatus { Progressing, Accepting, Violated };

struct MonitorState {
    int current = 0;
    int steps_in_state = 0;  // >= 1 once stepped
    MonitorStatus status = MonitorStatus::Progressing;

    static MonitorState initial(const Dfa& d);
};

MonitorState monitor_step(const MonitorState& m, const Dfa& d, const Letter& l);

// ── Counting and sampling ───────────────────────────────────────────────────

struct CountTable {
    // counts[t][q]: strings of length t driving the Dfa from initial to q.
    std::vector<std::vector<BigInt>> counts;
};

struct CountResult {
    CountTable table;
    BigInt accepted;  // accepted strings of length exactly n
    BigInt total;     // letter_count^n
};

CountResult count_accepted(const Dfa& d, int n);

// ratio <= num/den, compared exactly.
bool ratio_at_most(const CountResult& r, std::int64_t num, std::int64_t den);

// k length-n traces accepted by d, each drawn uniformly from the accepted
// set (backward DP weights).  Throws std::runtime_error when no length-n
// string is accepted.
std::vector<std::vector<Letter>> sample_accepted(Rng& rng, const Dfa& d, int n, int k);

// Uniform BigInt in [0, bound), bound >= 1; rejection sampling over bits.
BigInt uniform_bigint(Rng& rng, const BigInt& bound);

}  // namespace ltlforge
