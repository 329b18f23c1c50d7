#include "ltlforge/automaton.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <unordered_map>

namespace ltlforge {

// ── AlphabetModel ───────────────────────────────────────────────────────────

BigInt AlphabetModel::letter_count() const {
    if (kind_ == Kind::OneHot) return props_;
    return BigInt(1) << props_;
}

std::vector<Letter> AlphabetModel::all_letters() const {
    std::vector<Letter> out;
    if (kind_ == Kind::OneHot) {
        for (int i = 0; i < props_; ++i) out.push_back({1u << i});
    } else {
        if (props_ > 20) throw std::runtime_error("free alphabet too large to enumerate");
        for (std::uint32_t b = 0; b < (1u << props_); ++b) out.push_back({b});
    }
    return out;
}

bool AlphabetModel::valid(const Letter& l) const {
    std::uint32_t mask = props_ >= 32 ? ~0u : ((1u << props_) - 1u);
    if (l.bits & ~mask) return false;
    if (kind_ == Kind::OneHot) return l.bits != 0 && (l.bits & (l.bits - 1)) == 0;
    return true;
}

// ── Normalization ───────────────────────────────────────────────────────────
//
// States are residual formulas up to: flattened and sorted And/Or argument
// lists, constant folding, double-negation elimination, and complement-pair
// collapse.  All constructors below assume already-normalized inputs and
// return normalized results.

namespace {

Formula norm_not(const Formula& a);

Formula build_chain(NodeKind k, std::vector<Formula>& items) {
    Formula acc = items.back();
    for (size_t i = items.size() - 1; i-- > 0;) acc = Formula::make(k, {items[i], acc});
    return acc;
}

// Flatten nested k-nodes, fold the absorbing/neutral constants, sort, dedup,
// collapse complement pairs.  k is And or Or.
Formula norm_nary(NodeKind k, const Formula& a, const Formula& b) {
    const bool is_and = k == NodeKind::And;
    const Formula absorbing = is_and ? Formula::f() : Formula::t();
    const Formula neutral = is_and ? Formula::t() : Formula::f();

    std::vector<Formula> items;
    std::vector<Formula> stack = {a, b};
    while (!stack.empty()) {
        Formula cur = stack.back();
        stack.pop_back();
        if (cur.kind() == k) {
            stack.push_back(cur.child(0));
            stack.push_back(cur.child(1));
            continue;
        }
        if (cur == absorbing) return absorbing;
        if (cur == neutral) continue;
        items.push_back(std::move(cur));
    }
    if (items.empty()) return neutral;
    std::sort(items.begin(), items.end(),
              [](const Formula& x, const Formula& y) { return Formula::compare(x, y) < 0; });
    items.erase(std::unique(items.begin(), items.end()), items.end());
    for (const auto& it : items) {
        if (it.kind() == NodeKind::Not) {
            if (std::binary_search(items.begin(), items.end(), it.child(0),
                                   [](const Formula& x, const Formula& y) {
                                       return Formula::compare(x, y) < 0;
                                   }))
                return absorbing;
        }
    }
    if (items.size() == 1) return items[0];
    return build_chain(k, items);
}

Formula norm_not(const Formula& a) {
    switch (a.kind()) {
        case NodeKind::True: return Formula::f();
        case NodeKind::False: return Formula::t();
        case NodeKind::Not: return a.child(0);
        default: return Formula::not_(a);
    }
}

Formula norm_next(const Formula& a) {
    if (a.kind() == NodeKind::False) return Formula::f();
    return Formula::next(a);
}

Formula norm_eventually(const Formula& a) {
    if (a.kind() == NodeKind::False) return Formula::f();
    // F true holds exactly when at least one letter remains.
    if (a.kind() == NodeKind::True) return Formula::more_steps();
    return Formula::eventually(a);
}

Formula norm_always(const Formula& a) {
    if (a.kind() == NodeKind::True) return Formula::t();
    // G false holds exactly when no letter remains.
    if (a.kind() == NodeKind::False) return norm_not(Formula::more_steps());
    return Formula::always(a);
}

Formula norm_until(const Formula& a, const Formula& b) {
    if (b.kind() == NodeKind::False) return Formula::f();
    // x U true holds exactly when at least one letter remains.
    if (b.kind() == NodeKind::True) return Formula::more_steps();
    if (a.kind() == NodeKind::False) return b;
    if (a.kind() == NodeKind::True) return norm_eventually(b);
    return Formula::until(a, b);
}

}  // namespace

Formula normalize_formula(const Formula& f) {
    switch (f.kind()) {
        case NodeKind::True:
        case NodeKind::False:
        case NodeKind::MoreSteps:
        case NodeKind::Atom:
            return f;
        case NodeKind::Not: return norm_not(normalize_formula(f.child(0)));
        case NodeKind::Next: return norm_next(normalize_formula(f.child(0)));
        case NodeKind::Eventually: return norm_eventually(normalize_formula(f.child(0)));
        case NodeKind::Always: return norm_always(normalize_formula(f.child(0)));
        case NodeKind::And:
            return norm_nary(NodeKind::And, normalize_formula(f.child(0)),
                             normalize_formula(f.child(1)));
        case NodeKind::Or:
            return norm_nary(NodeKind::Or, normalize_formula(f.child(0)),
                             normalize_formula(f.child(1)));
        case NodeKind::Until:
            return norm_until(normalize_formula(f.child(0)), normalize_formula(f.child(1)));
    }
    return f;
}

// ── Progression ─────────────────────────────────────────────────────────────

Formula progress_formula(const Formula& f, const Letter& l) {
    switch (f.kind()) {
        case NodeKind::True: return Formula::t();
        case NodeKind::False: return Formula::f();
        case NodeKind::MoreSteps: return Formula::t();
        case NodeKind::Atom: return l.holds(f.prop()) ? Formula::t() : Formula::f();
        case NodeKind::Not: return norm_not(progress_formula(f.child(0), l));
        case NodeKind::And:
            return norm_nary(NodeKind::And, progress_formula(f.child(0), l),
                             progress_formula(f.child(1), l));
        case NodeKind::Or:
            return norm_nary(NodeKind::Or, progress_formula(f.child(0), l),
                             progress_formula(f.child(1), l));
        case NodeKind::Next:
            // Strong next: the residual additionally requires a further letter.
            return norm_nary(NodeKind::And, Formula::more_steps(), f.child(0));
        case NodeKind::Eventually:
            return norm_nary(NodeKind::Or, progress_formula(f.child(0), l), f);
        case NodeKind::Always:
            return norm_nary(NodeKind::And, progress_formula(f.child(0), l), f);
        case NodeKind::Until:
            return norm_nary(NodeKind::Or, progress_formula(f.child(1), l),
                             norm_nary(NodeKind::And, progress_formula(f.child(0), l), f));
    }
    return Formula::f();
}

// Truth of a residual obligation when the trace ends here.
bool eval_at_end(const Formula& f) {
    switch (f.kind()) {
        case NodeKind::True: return true;
        case NodeKind::False: return false;
        case NodeKind::MoreSteps: return false;
        case NodeKind::Atom: return false;
        case NodeKind::Not: return !eval_at_end(f.child(0));
        case NodeKind::And: return eval_at_end(f.child(0)) && eval_at_end(f.child(1));
        case NodeKind::Or: return eval_at_end(f.child(0)) || eval_at_end(f.child(1));
        case NodeKind::Next: return false;
        case NodeKind::Eventually: return false;
        case NodeKind::Always: return true;
        case NodeKind::Until: return false;
    }
    return false;
}

// ── Residual canonicalization ───────────────────────────────────────────────
//
// Syntactic normalization alone does not bound the residual closure: nested
// Until/Or/And alternations can keep producing new spellings of the same
// obligation.  States are therefore keyed by a propositional signature: the
// residual's truth table over the base elements occurring in it (atoms,
// MoreSteps, and temporal nodes, treated as opaque variables).  Progression
// and end-of-trace evaluation both factor through this equivalence, and the
// base elements range over the subformulas of the original formula, so the
// state space is finite.

namespace {

bool is_base_element(const Formula& f) {
    switch (f.kind()) {
        case NodeKind::Not:
        case NodeKind::And:
        case NodeKind::Or:
        case NodeKind::True:
        case NodeKind::False:
            return false;
        default:
            return true;
    }
}

void collect_base(const Formula& f, std::vector<Formula>& out) {
    if (f.kind() == NodeKind::True || f.kind() == NodeKind::False) return;
    if (is_base_element(f)) {
        out.push_back(f);
        return;
    }
    for (const auto& c : f.children()) collect_base(c, out);
}

struct Signature {
    std::vector<Formula> vars;        // sorted base elements
    std::vector<std::uint64_t> bits;  // truth table, one bit per assignment

    bool operator==(const Signature& o) const {
        if (bits != o.bits || vars.size() != o.vars.size()) return false;
        for (size_t i = 0; i < vars.size(); ++i)
            if (!(vars[i] == o.vars[i])) return false;
        return true;
    }

    bool constant_false() const {
        for (auto w : bits)
            if (w) return false;
        return true;
    }
    bool constant_true(int var_count) const {
        const std::uint64_t assignments = 1ULL << var_count;
        for (size_t w = 0; w < bits.size(); ++w) {
            std::uint64_t expect = ~0ULL;
            if ((w + 1) * 64 > assignments) {
                const unsigned rem = static_cast<unsigned>(assignments - w * 64);
                expect = rem >= 64 ? ~0ULL : ((1ULL << rem) - 1ULL);
            }
            if (bits[w] != expect) return false;
        }
        return true;
    }
};

struct SignatureHash {
    std::size_t operator()(const Signature& s) const noexcept {
        std::size_t h = 0x9e3779b97f4a7c15ULL;
        for (const auto& v : s.vars) h = h * 31 + v.hash();
        for (auto w : s.bits) h = h * 31 + static_cast<std::size_t>(w);
        return h;
    }
};

// Alternating masks for the first six variables within a 64-assignment word.
constexpr std::uint64_t kVarMask[6] = {
    0xaaaaaaaaaaaaaaaaULL, 0xccccccccccccccccULL, 0xf0f0f0f0f0f0f0f0ULL,
    0xff00ff00ff00ff00ULL, 0xffff0000ffff0000ULL, 0xffffffff00000000ULL,
};

// Truth table of `f` over `vars`, one bit per assignment, memoized per node.
std::vector<std::uint64_t> eval_table(const Formula& f, const std::vector<Formula>& vars,
                                      size_t words,
                                      std::unordered_map<const void*, std::vector<std::uint64_t>>& memo) {
    auto it = memo.find(f.identity());
    if (it != memo.end()) return it->second;
    std::vector<std::uint64_t> t(words, 0);
    switch (f.kind()) {
        case NodeKind::True:
            for (auto& w : t) w = ~0ULL;
            break;
        case NodeKind::False:
            break;
        case NodeKind::Not: {
            auto c = eval_table(f.child(0), vars, words, memo);
            for (size_t w = 0; w < words; ++w) t[w] = ~c[w];
            break;
        }
        case NodeKind::And: {
            auto a = eval_table(f.child(0), vars, words, memo);
            auto b = eval_table(f.child(1), vars, words, memo);
            for (size_t w = 0; w < words; ++w) t[w] = a[w] & b[w];
            break;
        }
        case NodeKind::Or: {
            auto a = eval_table(f.child(0), vars, words, memo);
            auto b = eval_table(f.child(1), vars, words, memo);
            for (size_t w = 0; w < words; ++w) t[w] = a[w] | b[w];
            break;
        }
        default: {
            // base element: locate its variable index
            size_t idx = vars.size();
            for (size_t i = 0; i < vars.size(); ++i)
                if (vars[i] == f) {
                    idx = i;
                    break;
                }
            if (idx == vars.size()) throw std::logic_error("base element missing from vars");
            if (idx < 6) {
                for (auto& w : t) w = kVarMask[idx];
            } else {
                for (size_t w = 0; w < words; ++w)
                    if ((w >> (idx - 6)) & 1) t[w] = ~0ULL;
            }
            break;
        }
    }
    memo.emplace(f.identity(), t);
    return t;
}

constexpr int kMaxSignatureVars = 16;

std::optional<Signature> signature_of(const Formula& f) {
    std::vector<Formula> vars;
    collect_base(f, vars);
    std::sort(vars.begin(), vars.end(),
              [](const Formula& x, const Formula& y) { return Formula::compare(x, y) < 0; });
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    if (static_cast<int>(vars.size()) > kMaxSignatureVars) return std::nullopt;

    const std::uint64_t assignments = 1ULL << vars.size();
    const size_t words = static_cast<size_t>((assignments + 63) / 64);
    std::unordered_map<const void*, std::vector<std::uint64_t>> memo;
    Signature sig;
    sig.vars = vars;
    sig.bits = eval_table(f, vars, words, memo);
    if (assignments < 64) sig.bits[0] &= (1ULL << assignments) - 1ULL;
    return sig;
}

}  // namespace

// ── Compilation ─────────────────────────────────────────────────────────────

namespace {

std::vector<int> bits_of(std::uint32_t mask) {
    std::vector<int> out;
    for (int i = 0; i < 32; ++i)
        if ((mask >> i) & 1u) out.push_back(i);
    return out;
}

Letter class_representative(const AlphabetModel& model, const std::vector<int>& support_props,
                            int cls) {
    if (model.kind() == AlphabetModel::Kind::OneHot) return Letter{1u << cls};
    std::uint32_t bits = 0;
    for (size_t i = 0; i < support_props.size(); ++i)
        if ((cls >> i) & 1) bits |= 1u << support_props[i];
    return Letter{bits};
}

}  // namespace

int Dfa::class_count(int q) const {
    if (model_.kind() == AlphabetModel::Kind::OneHot) return model_.prop_count();
    return 1 << states_[static_cast<size_t>(q)].support_props.size();
}

BigInt Dfa::class_letter_count(int q) const {
    if (model_.kind() == AlphabetModel::Kind::OneHot) return 1;
    int free_props =
        model_.prop_count() - static_cast<int>(states_[static_cast<size_t>(q)].support_props.size());
    return BigInt(1) << free_props;
}

int Dfa::class_of(int q, const Letter& l) const {
    if (model_.kind() == AlphabetModel::Kind::OneHot) {
        for (int i = 0; i < model_.prop_count(); ++i)
            if (l.bits == (1u << i)) return i;
        throw std::invalid_argument("letter is not one-hot");
    }
    const auto& sp = states_[static_cast<size_t>(q)].support_props;
    int cls = 0;
    for (size_t i = 0; i < sp.size(); ++i)
        if (l.holds(sp[i])) cls |= 1 << i;
    return cls;
}

Letter Dfa::sample_letter_in_class(int q, int cls, Rng& rng) const {
    if (model_.kind() == AlphabetModel::Kind::OneHot) return Letter{1u << cls};
    const auto& st = states_[static_cast<size_t>(q)];
    Letter l = class_representative(model_, st.support_props, cls);
    for (int p = 0; p < model_.prop_count(); ++p) {
        if ((st.support >> p) & 1u) continue;
        if (std::uniform_int_distribution<int>(0, 1)(rng)) l.bits |= 1u << p;
    }
    return l;
}

int Dfa::step(int q, const Letter& l) const {
    return states_[static_cast<size_t>(q)].target[static_cast<size_t>(class_of(q, l))];
}

bool Dfa::accepts(std::span<const Letter> trace) const {
    int q = initial();
    for (const Letter& l : trace) q = step(q, l);
    return is_accepting(q);
}

Dfa compile(const Formula& f, const AlphabetModel& model, int state_cap) {
    Dfa d;
    d.model_ = model;

    const Formula f0 = normalize_formula(f);
    std::unordered_map<Signature, int, SignatureHash> canon_intern;
    std::unordered_map<Formula, int, FormulaHash> wide_intern;  // >16-var residuals
    std::deque<int> todo;

    auto make_state = [&](const Formula& residual, bool accepting) {
        if (static_cast<int>(d.states_.size()) >= state_cap) throw StateCapError(state_cap);
        Dfa::State st;
        st.residual = residual;
        st.accepting = accepting;
        st.support = residual.prop_mask();
        st.support_props = bits_of(st.support);
        d.states_.push_back(std::move(st));
        return static_cast<int>(d.states_.size()) - 1;
    };

    // Residual states are interned by propositional signature; the initial
    // state stays distinct so the empty trace is never accepted.
    auto intern_state = [&](const Formula& g) {
        auto sig = signature_of(g);
        if (sig) {
            auto it = canon_intern.find(*sig);
            if (it != canon_intern.end()) return it->second;
            Formula repr = g;
            if (sig->constant_false())
                repr = Formula::f();
            else if (sig->constant_true(static_cast<int>(sig->vars.size())))
                repr = Formula::t();
            int id = make_state(repr, eval_at_end(repr));
            canon_intern.emplace(std::move(*sig), id);
            todo.push_back(id);
            return id;
        }
        auto it = wide_intern.find(g);
        if (it != wide_intern.end()) return it->second;
        int id = make_state(g, eval_at_end(g));
        wide_intern.emplace(g, id);
        todo.push_back(id);
        return id;
    };

    make_state(f0, false);  // state 0: initial
    todo.push_back(0);

    while (!todo.empty()) {
        int q = todo.front();
        todo.pop_front();
        const Formula residual = d.states_[static_cast<size_t>(q)].residual;
        const auto support_props = d.states_[static_cast<size_t>(q)].support_props;
        const int classes = d.class_count(q);
        std::vector<int> target(static_cast<size_t>(classes), -1);
        for (int cls = 0; cls < classes; ++cls) {
            Letter rep = class_representative(model, support_props, cls);
            target[static_cast<size_t>(cls)] = intern_state(progress_formula(residual, rep));
        }
        d.states_[static_cast<size_t>(q)].target = std::move(target);
    }

    for (int q = 0; q < d.num_states(); ++q)
        if (q != d.initial() && d.states_[static_cast<size_t>(q)].residual == Formula::f()) {
            d.dead_ = q;
            break;
        }
    return d;
}

// ── Brute-force oracle ──────────────────────────────────────────────────────

namespace {

bool sat_at(const Formula& f, std::span<const Letter> trace, size_t i) {
    const size_t n = trace.size();
    switch (f.kind()) {
        case NodeKind::True: return true;
        case NodeKind::False: return false;
        case NodeKind::MoreSteps: return i < n;
        case NodeKind::Atom: return trace[i].holds(f.prop());
        case NodeKind::Not: return !sat_at(f.child(0), trace, i);
        case NodeKind::And: return sat_at(f.child(0), trace, i) && sat_at(f.child(1), trace, i);
        case NodeKind::Or: return sat_at(f.child(0), trace, i) || sat_at(f.child(1), trace, i);
        case NodeKind::Next: return i + 1 < n && sat_at(f.child(0), trace, i + 1);
        case NodeKind::Eventually:
            for (size_t j = i; j < n; ++j)
                if (sat_at(f.child(0), trace, j)) return true;
            return false;
        case NodeKind::Always:
            for (size_t j = i; j < n; ++j)
                if (!sat_at(f.child(0), trace, j)) return false;
            return true;
        case NodeKind::Until:
            for (size_t j = i; j < n; ++j) {
                if (sat_at(f.child(1), trace, j)) return true;
                if (!sat_at(f.child(0), trace, j)) return false;
            }
            return false;
    }
    return false;
}

}  // namespace

bool brute_force_accepts(const Formula& f, std::span<const Letter> trace) {
    if (trace.empty()) return false;  // empty traces are rejected by convention
    return sat_at(f, trace, 0);
}

// ── Monitor ─────────────────────────────────────────────────────────────────

MonitorState MonitorState::initial(const Dfa&) { return MonitorState{0, 0, MonitorStatus::Progressing}; }

MonitorState monitor_step(const MonitorState& m, const Dfa& d, const Letter& l) {
    if (m.status == MonitorStatus::Violated)
        throw std::logic_error("monitor_step on a violated monitor");
    MonitorState next;
    next.current = d.step(m.current, l);
    next.steps_in_state = next.current == m.current ? m.steps_in_state + 1 : 1;
    if (d.dead() && next.current == *d.dead())
        next.status = MonitorStatus::Violated;
    else if (d.is_accepting(next.current))
        next.status = MonitorStatus::Accepting;
    else
        next.status = MonitorStatus::Progressing;
    return next;
}

// ── Counting ────────────────────────────────────────────────────────────────

CountResult count_accepted(const Dfa& d, int n) {
    if (n < 0) throw std::invalid_argument("horizon must be >= 0");
    const int states = d.num_states();
    CountResult r;
    r.table.counts.assign(static_cast<size_t>(n) + 1,
                          std::vector<BigInt>(static_cast<size_t>(states), BigInt(0)));
    r.table.counts[0][static_cast<size_t>(d.initial())] = 1;
    for (int t = 0; t < n; ++t) {
        const auto& cur = r.table.counts[static_cast<size_t>(t)];
        auto& nxt = r.table.counts[static_cast<size_t>(t) + 1];
        for (int q = 0; q < states; ++q) {
            const BigInt& c = cur[static_cast<size_t>(q)];
            if (c == 0) continue;
            const BigInt per_class = d.class_letter_count(q) * c;
            for (int tgt : d.state(q).target) nxt[static_cast<size_t>(tgt)] += per_class;
        }
    }
    r.accepted = 0;
    for (int q = 0; q < states; ++q)
        if (d.is_accepting(q)) r.accepted += r.table.counts[static_cast<size_t>(n)][static_cast<size_t>(q)];
    r.total = boost::multiprecision::pow(d.model().letter_count(), static_cast<unsigned>(n));
    return r;
}

bool ratio_at_most(const CountResult& r, std::int64_t num, std::int64_t den) {
    return r.accepted * den <= r.total * num;
}

// ── Sampling ────────────────────────────────────────────────────────────────

BigInt uniform_bigint(Rng& rng, const BigInt& bound) {
    if (bound <= 0) throw std::invalid_argument("uniform_bigint bound must be positive");
    if (bound == 1) return 0;
    const unsigned bits = boost::multiprecision::msb(bound) + 1;
    while (true) {
        BigInt v = 0;
        unsigned filled = 0;
        while (filled < bits) {
            unsigned chunk = std::min(64u, bits - filled);
            std::uint64_t word = rng();
            if (chunk < 64) word &= (1ULL << chunk) - 1ULL;
            v |= BigInt(word) << filled;
            filled += chunk;
        }
        if (v < bound) return v;
    }
}

std::vector<std::vector<Letter>> sample_accepted(Rng& rng, const Dfa& d, int n, int k) {
    const int states = d.num_states();
    // back[m][q]: accepted strings of length m starting from state q.
    std::vector<std::vector<BigInt>> back(static_cast<size_t>(n) + 1,
                                          std::vector<BigInt>(static_cast<size_t>(states), BigInt(0)));
    for (int q = 0; q < states; ++q)
        if (d.is_accepting(q)) back[0][static_cast<size_t>(q)] = 1;
    for (int m = 1; m <= n; ++m) {
        for (int q = 0; q < states; ++q) {
            const BigInt per_class = d.class_letter_count(q);
            BigInt acc = 0;
            for (int tgt : d.state(q).target)
                acc += per_class * back[static_cast<size_t>(m) - 1][static_cast<size_t>(tgt)];
            back[static_cast<size_t>(m)][static_cast<size_t>(q)] = std::move(acc);
        }
    }
    if (back[static_cast<size_t>(n)][static_cast<size_t>(d.initial())] == 0)
        throw std::runtime_error("no accepted string of the requested length");

    std::vector<std::vector<Letter>> out;
    out.reserve(static_cast<size_t>(k));
    for (int s = 0; s < k; ++s) {
        std::vector<Letter> trace;
        trace.reserve(static_cast<size_t>(n));
        int q = d.initial();
        for (int t = 0; t < n; ++t) {
            const int m = n - t;
            const BigInt per_class = d.class_letter_count(q);
            BigInt r = uniform_bigint(rng, back[static_cast<size_t>(m)][static_cast<size_t>(q)]);
            const auto& targets = d.state(q).target;
            int chosen = -1;
            for (size_t cls = 0; cls < targets.size(); ++cls) {
                BigInt w = per_class * back[static_cast<size_t>(m) - 1][static_cast<size_t>(targets[cls])];
                if (r < w) {
                    chosen = static_cast<int>(cls);
                    break;
                }
                r -= w;
            }
            if (chosen < 0) throw std::logic_error("sample_accepted: inconsistent weights");
            trace.push_back(d.sample_letter_in_class(q, chosen, rng));
            q = targets[static_cast<size_t>(chosen)];
        }
        out.push_back(std::move(trace));
    }
    return out;
}

// ── Debug dump ──────────────────────────────────────────────────────────────

std::string Dfa::dump(const Alphabet& alphabet) const {
    std::ostringstream ss;
    ss << "states: " << num_states() << "\n";
    ss << "initial: " << initial() << "\n";
    ss << "accepting:";
    for (int q = 0; q < num_states(); ++q)
        if (is_accepting(q)) ss << " " << q;
    ss << "\n";
    if (dead_) ss << "dead: " << *dead_ << "\n";
    for (int q = 0; q < num_states(); ++q) {
        const State& st = states_[static_cast<size_t>(q)];
        ss << q << " [" << format_formula(st.residual, alphabet) << "]\n";
        // group classes by target, emit one guard per edge
        std::map<int, std::vector<int>> by_target;
        for (size_t cls = 0; cls < st.target.size(); ++cls)
            by_target[st.target[cls]].push_back(static_cast<int>(cls));
        for (const auto& [tgt, classes] : by_target) {
            ss << "  --[";
            for (size_t i = 0; i < classes.size(); ++i) {
                if (i) ss << " | ";
                if (model_.kind() == AlphabetModel::Kind::OneHot) {
                    ss << alphabet.name(classes[i]);
                } else if (st.support_props.empty()) {
                    ss << "*";
                } else {
                    for (size_t b = 0; b < st.support_props.size(); ++b) {
                        if (b) ss << "&";
                        if (!((classes[i] >> b) & 1)) ss << "!";
                        ss << alphabet.name(st.support_props[b]);
                    }
                }
            }
            ss << "]--> " << tgt << "\n";
        }
    }
    return ss.str();
}

}  // namespace ltlforge
