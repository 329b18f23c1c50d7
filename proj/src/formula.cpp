#include "ltlforge/formula.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace ltlforge {

int arity(NodeKind k) {
    switch (k) {
        case NodeKind::True:
        case NodeKind::False:
        case NodeKind::MoreSteps:
        case NodeKind::Atom:
            return 0;
        case NodeKind::Not:
        case NodeKind::Next:
        case NodeKind::Eventually:
        case NodeKind::Always:
            return 1;
        case NodeKind::And:
        case NodeKind::Or:
        case NodeKind::Until:
            return 2;
    }
    return 0;
}

const char* kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::True: return "true";
        case NodeKind::False: return "false";
        case NodeKind::MoreSteps: return "@more";
        case NodeKind::Atom: return "atom";
        case NodeKind::Not: return "!";
        case NodeKind::Next: return "X";
        case NodeKind::Eventually: return "F";
        case NodeKind::Always: return "G";
        case NodeKind::And: return "&";
        case NodeKind::Or: return "|";
        case NodeKind::Until: return "U";
    }
    return "?";
}

// ── Alphabet ────────────────────────────────────────────────────────────────

Alphabet::Alphabet(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw std::invalid_argument("alphabet must be non-empty");
    if (names_.size() > 32) throw std::invalid_argument("alphabet too large (max 32)");
    for (size_t i = 0; i < names_.size(); ++i)
        for (size_t j = i + 1; j < names_.size(); ++j)
            if (names_[i] == names_[j])
                throw std::invalid_argument("duplicate predicate name: " + names_[i]);
}

Alphabet Alphabet::symbols(int k) {
    if (k < 1 || k > 26) throw std::invalid_argument("symbol alphabet size out of range");
    std::vector<std::string> names;
    for (int i = 0; i < k; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
    return Alphabet(std::move(names));
}

Alphabet Alphabet::craft() {
    return Alphabet({"gem", "factory", "gold", "grass", "silver", "workbench", "tree",
                     "toolshed"});
}

std::optional<int> Alphabet::index_of(std::string_view name) const {
    for (size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    return std::nullopt;
}

Alphabet Alphabet::with_closer() const {
    std::vector<std::string> names = names_;
    for (const auto& n : names_) names.push_back("closer_" + n);
    return Alphabet(std::move(names));
}

// ── Formula construction ────────────────────────────────────────────────────

namespace {

std::size_t combine_hash(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace

Formula Formula::make(NodeKind k, std::vector<Formula> children) {
    if (static_cast<int>(children.size()) != arity(k))
        throw std::invalid_argument(std::string("arity mismatch for ") + kind_name(k));
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->prop = -1;
    n->children = std::move(children);
    n->node_count = 1;
    n->depth = 1;
    n->atom_count = k == NodeKind::Atom ? 1 : 0;
    n->prop_mask = 0;
    std::size_t h = combine_hash(0x5851f42d, static_cast<std::size_t>(k));
    for (const auto& c : n->children) {
        n->node_count += c.node_count();
        n->depth = std::max(n->depth, c.depth() + 1);
        n->atom_count += c.atom_count();
        n->prop_mask |= c.prop_mask();
        h = combine_hash(h, c.hash());
    }
    n->hash = h;
    return Formula(std::move(n));
}

Formula Formula::t() { return make(NodeKind::True, {}); }
Formula Formula::f() { return make(NodeKind::False, {}); }
Formula Formula::more_steps() { return make(NodeKind::MoreSteps, {}); }

Formula Formula::atom(int prop) {
    if (prop < 0 || prop >= 32) throw std::invalid_argument("proposition index out of range");
    Formula r = make(NodeKind::Atom, {});
    auto n = std::make_shared<Node>(*r.n_);
    n->prop = prop;
    n->prop_mask = 1u << prop;
    n->hash = combine_hash(n->hash, static_cast<std::size_t>(prop) + 0x9e37);
    return Formula(std::move(n));
}

bool Formula::contains_kind(NodeKind k) const {
    if (kind() == k) return true;
    for (const auto& c : children())
        if (c.contains_kind(k)) return true;
    return false;
}

bool Formula::operator==(const Formula& o) const {
    if (n_ == o.n_) return true;
    if (n_->hash != o.n_->hash || n_->kind != o.n_->kind || n_->prop != o.n_->prop ||
        n_->node_count != o.n_->node_count)
        return false;
    for (size_t i = 0; i < n_->children.size(); ++i)
        if (!(n_->children[i] == o.n_->children[i])) return false;
    return true;
}

int Formula::compare(const Formula& a, const Formula& b) {
    if (a.n_ == b.n_) return 0;
    if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
    if (a.prop() != b.prop()) return a.prop() < b.prop() ? -1 : 1;
    size_t na = a.children().size(), nb = b.children().size();
    if (na != nb) return na < nb ? -1 : 1;
    for (size_t i = 0; i < na; ++i)
        if (int c = compare(a.children()[i], b.children()[i])) return c;
    return 0;
}

// ── Parser ──────────────────────────────────────────────────────────────────

namespace {

struct Parser {
    std::string_view text;
    size_t pos = 0;
    const Alphabet* alphabet;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    // Uppercase single-letter keyword (G, F, X, U) not glued to an identifier.
    bool eat_keyword(char kw) {
        skip_ws();
        if (pos < text.size() && text[pos] == kw) {
            size_t next = pos + 1;
            bool glued = next < text.size() &&
                         (std::isalnum(static_cast<unsigned char>(text[next])) ||
                          text[next] == '_');
            if (!glued) {
                ++pos;
                return true;
            }
        }
        return false;
    }

    std::string ident() {
        skip_ws();
        size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (pos == start) throw ParseError("expected predicate or '('", start);
        return std::string(text.substr(start, pos - start));
    }

    Formula expr() {
        Formula lhs = conjunction();
        while (eat('|')) lhs = Formula::or_(std::move(lhs), conjunction());
        return lhs;
    }

    Formula conjunction() {
        Formula lhs = until_expr();
        while (eat('&')) lhs = Formula::and_(std::move(lhs), until_expr());
        return lhs;
    }

    Formula until_expr() {
        Formula lhs = unary();
        if (eat_keyword('U')) return Formula::until(std::move(lhs), until_expr());
        return lhs;
    }

    Formula unary() {
        if (eat_keyword('G')) return Formula::always(unary());
        if (eat_keyword('F')) return Formula::eventually(unary());
        if (eat_keyword('X')) return Formula::next(unary());
        if (eat('!')) return Formula::not_(unary());
        if (eat('(')) {
            Formula inner = expr();
            if (!eat(')')) throw ParseError("expected ')'", pos);
            return inner;
        }
        skip_ws();
        size_t start = pos;
        std::string name = ident();
        auto idx = alphabet->index_of(name);
        if (!idx) throw ParseError("unknown predicate '" + name + "'", start);
        return Formula::atom(*idx);
    }
};

}  // namespace

Formula parse_formula(std::string_view text, const Alphabet& alphabet) {
    Parser p{text, 0, &alphabet};
    Formula f = p.expr();
    if (!p.at_end()) throw ParseError("unexpected trailing input", p.pos);
    return f;
}

// ── Printer ─────────────────────────────────────────────────────────────────

namespace {

void format_rec(const Formula& f, const Alphabet& alphabet, bool wrap, std::string& out) {
    const bool leaf = arity(f.kind()) == 0;
    if (wrap && !leaf) out.push_back('(');
    switch (f.kind()) {
        case NodeKind::True:
        case NodeKind::False:
        case NodeKind::MoreSteps:
            out += kind_name(f.kind());
            break;
        case NodeKind::Atom:
            out += alphabet.name(f.prop());
            break;
        case NodeKind::Not:
        case NodeKind::Next:
        case NodeKind::Eventually:
        case NodeKind::Always:
            out += kind_name(f.kind());
            out.push_back(' ');
            format_rec(f.child(0), alphabet, true, out);
            break;
        case NodeKind::And:
        case NodeKind::Or:
        case NodeKind::Until:
            format_rec(f.child(0), alphabet, true, out);
            out.push_back(' ');
            out += kind_name(f.kind());
            out.push_back(' ');
            format_rec(f.child(1), alphabet, true, out);
            break;
    }
    if (wrap && !leaf) out.push_back(')');
}

}  // namespace

std::string format_formula(const Formula& f, const Alphabet& alphabet) {
    std::string out;
    format_rec(f, alphabet, false, out);
    return out;
}

// ── ElementPrior ────────────────────────────────────────────────────────────

ElementPrior::ElementPrior(int lo, std::vector<double> weights)
    : lo_(lo), weights_(std::move(weights)) {
    if (lo_ < 1 || lo_ + static_cast<int>(weights_.size()) - 1 > 20)
        throw std::invalid_argument("element prior support must lie within [1, 20]");
    double total = 0.0;
    for (double w : weights_) {
        if (w < 0.0) throw std::invalid_argument("negative prior weight");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("element prior has zero mass");
    double acc = 0.0;
    for (double w : weights_) {
        acc += w / total;
        cumulative_.push_back(acc);
    }
    cumulative_.back() = 1.0;
}

ElementPrior ElementPrior::point(int m) { return ElementPrior(m, {1.0}); }

ElementPrior ElementPrior::uniform(int lo, int hi) {
    if (lo > hi) throw std::invalid_argument("empty prior range");
    return ElementPrior(lo, std::vector<double>(static_cast<size_t>(hi - lo + 1), 1.0));
}

ElementPrior ElementPrior::weighted(int lo, std::vector<double> weights) {
    return ElementPrior(lo, std::move(weights));
}

int ElementPrior::sample(Rng& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (size_t i = 0; i < cumulative_.size(); ++i)
        if (u <= cumulative_[i]) return lo_ + static_cast<int>(i);
    return lo_ + static_cast<int>(cumulative_.size()) - 1;
}

// ── Sampling ────────────────────────────────────────────────────────────────

namespace {

// Arena node used while growing a random tree slot by slot.
struct PendingNode {
    NodeKind kind;
    int prop = -1;
    std::array<int, 2> children{-1, -1};
};

struct OpenSlot {
    int parent;  // -1 for the root slot
    int child_index;
};

Formula build_from_arena(const std::vector<PendingNode>& arena, int idx) {
    const PendingNode& n = arena[static_cast<size_t>(idx)];
    if (n.kind == NodeKind::Atom) return Formula::atom(n.prop);
    std::vector<Formula> children;
    for (int i = 0; i < arity(n.kind); ++i)
        children.push_back(build_from_arena(arena, n.children[static_cast<size_t>(i)]));
    return Formula::make(n.kind, std::move(children));
}

}  // namespace

Formula sample_formula(Rng& rng, const ElementPrior& prior, const Alphabet& alphabet,
                       const SampleOptions& opts) {
    const int target = prior.sample(rng);

    std::vector<NodeKind> unary_kinds = {NodeKind::Next, NodeKind::Eventually, NodeKind::Always};
    if (opts.allow_not) unary_kinds.insert(unary_kinds.begin(), NodeKind::Not);
    const std::vector<NodeKind> binary_kinds = {NodeKind::And, NodeKind::Or, NodeKind::Until};

    std::vector<PendingNode> arena;
    std::vector<OpenSlot> open = {{-1, 0}};
    int remaining = target;
    int root = -1;

    while (!open.empty()) {
        const size_t slot_i =
            std::uniform_int_distribution<size_t>(0, open.size() - 1)(rng);
        const OpenSlot slot = open[slot_i];
        open[slot_i] = open.back();
        open.pop_back();

        const int open_after = static_cast<int>(open.size());
        const int budget = remaining - 1;  // elements left after placing this node

        // A kind of arity k is compatible when the tree can still be finished
        // with exactly `budget` further elements over `open_after + k` slots.
        std::vector<NodeKind> kinds;
        const bool leaf_ok = budget >= open_after && (open_after > 0 || budget == 0);
        if (leaf_ok) kinds.push_back(NodeKind::Atom);
        if (budget >= open_after + 1)
            kinds.insert(kinds.end(), unary_kinds.begin(), unary_kinds.end());
        if (budget >= open_after + 2)
            kinds.insert(kinds.end(), binary_kinds.begin(), binary_kinds.end());
        // The budget rule keeps at least one kind compatible at all times.

        const NodeKind kind =
            kinds[std::uniform_int_distribution<size_t>(0, kinds.size() - 1)(rng)];
        PendingNode node{kind};
        if (kind == NodeKind::Atom)
            node.prop = std::uniform_int_distribution<int>(0, alphabet.size() - 1)(rng);
        const int id = static_cast<int>(arena.size());
        arena.push_back(node);
        --remaining;

        if (slot.parent < 0)
            root = id;
        else
            arena[static_cast<size_t>(slot.parent)].children[static_cast<size_t>(slot.child_index)] = id;

        for (int i = 0; i < arity(kind); ++i) open.push_back({id, i});
    }

    return build_from_arena(arena, root);
}

namespace {

// Pre-order walk; index 0 is the root.
Formula replace_rec(const Formula& f, int index, const Formula& replacement) {
    if (index == 0) return replacement;
    int offset = 1;
    std::vector<Formula> children;
    bool replaced = false;
    for (const auto& c : f.children()) {
        if (!replaced && index - offset < c.node_count() && index - offset >= 0) {
            children.push_back(replace_rec(c, index - offset, replacement));
            replaced = true;
        } else {
            children.push_back(c);
        }
        offset += c.node_count();
    }
    if (!replaced) throw std::out_of_range("mutation index out of range");
    return Formula::make(f.kind(), std::move(children));
}

}  // namespace

Formula mutate_subtree_at(const Formula& f, int node_index, const Formula& replacement) {
    if (node_index < 0 || node_index >= f.node_count())
        throw std::out_of_range("mutation index out of range");
    return replace_rec(f, node_index, replacement);
}

Formula mutate_subtree(Rng& rng, const Formula& f, const ElementPrior& prior,
                       const Alphabet& alphabet, const SampleOptions& opts) {
    const int site = std::uniform_int_distribution<int>(0, f.node_count() - 1)(rng);
    Formula repl = sample_formula(rng, prior, alphabet, opts);
    return mutate_subtree_at(f, site, repl);
}

}  // namespace ltlforge
