// ltlforge/formula.hpp — LTLf abstract syntax trees.
//
// A Formula is an immutable tree shared through ref-counted nodes, so copies
// are O(1) and values are safe to share across threads.  Structural hash,
// node count, depth, atom count and the set of referenced propositions are
// cached at construction.
//
// Node kinds:
//   Atom         : proposition, indexed into an Alphabet
//   Not/Next/Eventually/Always : unary
//   And/Or/Until : binary
//   True/False   : constants.  Never produced by the parser or the sampler;
//                  they appear in progressed formulas (see automaton.hpp).
//   MoreSteps    : internal constant, "at least one letter remains".  Keeps
//                  strong-Next progression sound at the end of a trace.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ltlforge/util.hpp"

namespace ltlforge {

enum class NodeKind : std::uint8_t {
    True,
    False,
    MoreSteps,  // internal; progression only
    Atom,
    Not,
    Next,
    Eventually,
    Always,
    And,
    Or,
    Until,
};

int arity(NodeKind k);
const char* kind_name(NodeKind k);

// ── Alphabet ────────────────────────────────────────────────────────────────
// Declares the atomic predicates of a domain.  Index order is the bit order
// used by Letter bitmasks; at most 32 propositions.

class Alphabet {
public:
    explicit Alphabet(std::vector<std::string> names);

    // "a", "b", ... k single-letter symbols.
    static Alphabet symbols(int k);
    // The eight Craft predicates.
    static Alphabet craft();

    int size() const { return static_cast<int>(names_.size()); }
    const std::string& name(int i) const { return names_.at(static_cast<size_t>(i)); }
    std::optional<int> index_of(std::string_view name) const;

    // Appends a derived "closer_<p>" proposition per base proposition.
    // closer_index(p) = base_size + p for p in the base alphabet.
    Alphabet with_closer() const;

    bool operator==(const Alphabet& o) const { return names_ == o.names_; }

private:
    std::vector<std::string> names_;
};

// ── Formula ─────────────────────────────────────────────────────────────────

class Formula {
public:
    Formula() : Formula(f()) {}

    static Formula t();
    static Formula f();
    static Formula more_steps();
    static Formula atom(int prop);
    static Formula make(NodeKind k, std::vector<Formula> children);

    static Formula not_(Formula a) { return make(NodeKind::Not, {std::move(a)}); }
    static Formula next(Formula a) { return make(NodeKind::Next, {std::move(a)}); }
    static Formula eventually(Formula a) { return make(NodeKind::Eventually, {std::move(a)}); }
    static Formula always(Formula a) { return make(NodeKind::Always, {std::move(a)}); }
    static Formula and_(Formula a, Formula b) { return make(NodeKind::And, {std::move(a), std::move(b)}); }
    static Formula or_(Formula a, Formula b) { return make(NodeKind::Or, {std::move(a), std::move(b)}); }
    static Formula until(Formula a, Formula b) { return make(NodeKind::Until, {std::move(a), std::move(b)}); }

    NodeKind kind() const { return n_->kind; }
    int prop() const { return n_->prop; }
    const std::vector<Formula>& children() const { return n_->children; }
    const Formula& child(size_t i) const { return n_->children.at(i); }

    int node_count() const { return n_->node_count; }
    int depth() const { return n_->depth; }
    int atom_count() const { return n_->atom_count; }
    // Bitmask of proposition indices occurring in Atom leaves.
    std::uint32_t prop_mask() const { return n_->prop_mask; }
    std::size_t hash() const { return n_->hash; }
    // Stable address of the shared node; usable as a memoization key for the
    // lifetime of any Formula sharing it.
    const void* identity() const { return n_.get(); }

    bool contains_kind(NodeKind k) const;

    bool operator==(const Formula& o) const;
    bool operator!=(const Formula& o) const { return !(*this == o); }

    // Total structural order: by kind, then prop, then children.  Used to
    // canonicalize flattened And/Or argument lists.
    static int compare(const Formula& a, const Formula& b);

private:
    struct Node {
        NodeKind kind;
        std::int32_t prop;
        std::vector<Formula> children;
        std::size_t hash;
        std::int32_t node_count;
        std::int32_t depth;
        std::int32_t atom_count;
        std::uint32_t prop_mask;
    };

    explicit Formula(std::shared_ptr<const Node> n) : n_(std::move(n)) {}

    std::shared_ptr<const Node> n_;
};

struct FormulaHash {
    std::size_t operator()(const Formula& f) const noexcept { return f.hash(); }
};

// ── Parsing and printing ────────────────────────────────────────────────────
//
// Grammar (precedence tightest first: unary, U, &, |; U right-associative):
//
//   expr  := and ('|' and)*
//   and   := until ('&' until)*
//   until := unary ('U' until)?
//   unary := ('G'|'F'|'X'|'!') unary | name | '(' expr ')'

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, size_t position)
        : std::runtime_error(msg + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    size_t position() const { return position_; }

private:
    size_t position_;
};

Formula parse_formula(std::string_view text, const Alphabet& alphabet);

// Canonical rendering: atoms bare, every compound subterm parenthesized,
// outermost term unwrapped.  Identical trees print identically, so the
// printed string doubles as the dataset dedup key.
std::string format_formula(const Formula& f, const Alphabet& alphabet);

// ── Random formulas ─────────────────────────────────────────────────────────

// Distribution over the total element count (operators + predicates) of a
// sampled formula.  Support must lie within [1, 20].
class ElementPrior {
public:
    static ElementPrior point(int m);
    static ElementPrior uniform(int lo, int hi);
    static ElementPrior weighted(int lo, std::vector<double> weights);

    int sample(Rng& rng) const;
    int min_value() const { return lo_; }
    int max_value() const { return lo_ + static_cast<int>(weights_.size()) - 1; }

private:
    ElementPrior(int lo, std::vector<double> weights);
    int lo_;
    std::vector<double> weights_;
    std::vector<double> cumulative_;
};

struct SampleOptions {
    bool allow_not = true;
};

// Draws the element count from `prior`, then grows the tree by repeatedly
// expanding a uniformly random open slot with a node kind chosen uniformly
// among the kinds still compatible with the remaining element budget.  Atom
// labels are uniform over the alphabet.
Formula sample_formula(Rng& rng, const ElementPrior& prior, const Alphabet& alphabet,
                       const SampleOptions& opts = {});

// Replaces the subtree rooted at a uniformly random node of `f` with a fresh
// sample_formula draw.
Formula mutate_subtree(Rng& rng, const Formula& f, const ElementPrior& prior,
                       const Alphabet& alphabet, const SampleOptions& opts = {});

// Variant used by tests to audit site selection.
Formula mutate_subtree_at(const Formula& f, int node_index, const Formula& replacement);

// ── Statistics ──────────────────────────────────────────────────────────────

struct FormulaStats {
    int symbol_count = 0;      // Atom leaves
    int node_count = 0;        // all tree nodes
    int depth = 0;             // longest root-to-leaf path, in nodes
    int automaton_states = 0;  // states of the compiled Dfa
};

}  // namespace ltlforge
