// ltlforge/formula_gen.hpp — hard/diverse formula dataset generation.
//
// A formula enters a dataset only if it is hard (acceptance ratio at the
// horizon below the configured threshold) yet satisfiable (at least one
// accepted string).  Diversity pressure comes from mutation chains: an
// accepted formula becomes, with probability chain_prob, the base for the
// next candidate, which must additionally overlap with its base on at most
// overlap_num/overlap_den of sampled accepted strings.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ltlforge/automaton.hpp"
#include "ltlforge/formula.hpp"

namespace ltlforge {

struct SplitSpec {
    std::string name;
    int size = 0;
    int min_elements = 1;
    int max_elements = 10;
    // Fresh-draw element-count weights over [min_elements, max_elements];
    // empty means uniform.  Mutation replacements always draw uniformly from
    // [1, max_elements].
    std::vector<double> prior_weights;

    ElementPrior fresh_prior() const;
};

struct GenConfig {
    enum class Domain { Symbol, Craft };

    Domain domain = Domain::Symbol;
    int letters = 5;  // Symbol alphabet size; Craft always uses its 8 predicates
    int horizon_n = 15;
    // hardness: acceptance ratio <= threshold_num / threshold_den (exact)
    std::int64_t threshold_num = 1;
    std::int64_t threshold_den = 1000000;
    // diversity: overlap fraction <= overlap_num / overlap_den (exact)
    std::int64_t overlap_num = 1;
    std::int64_t overlap_den = 10;
    int diversity_samples = 100;  // k strings sampled from the base
    double chain_prob = 0.5;      // accepted candidate becomes the next base
    int diversity_retry_cap = 25;
    bool allow_not = true;
    int state_cap = 10000;
    std::uint64_t seed = 0;
    std::uint64_t max_attempts_per_split = 2000000;
    std::vector<SplitSpec> splits = {
        {"train", 10000, 1, 10},
        {"test_1_10", 10000, 1, 10},
        {"test_10_15", 10000, 10, 15},
        {"test_15_20", 10000, 15, 20},
    };

    Alphabet alphabet() const;
    AlphabetModel model() const;

    static GenConfig symbol_paper(std::uint64_t seed);
    static GenConfig craft_paper(std::uint64_t seed);
    // Desk scale: 200/50/50/50 formulas, 3 letters, horizon 8.  The paper's
    // 1e-6 ratio threshold is unsatisfiable at 3^8 = 6561 strings (any single
    // accepted string already exceeds it), so the desk threshold is 1e-2.
    static GenConfig symbol_desk(std::uint64_t seed);

    KeyValueMap to_key_values() const;
    static GenConfig from_key_values(const KeyValueMap& kv);
};

struct DatasetEntry {
    Formula formula;
    Dfa dfa;
    FormulaStats stats;
    std::string canonical;
};

struct DatasetSplit {
    SplitSpec spec;
    std::vector<DatasetEntry> entries;
};

struct Dataset {
    GenConfig config;
    std::vector<DatasetSplit> splits;

    const DatasetSplit* split(const std::string& name) const;
};

class GenTimeout : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Hard and satisfiable at horizon n: ratio <= threshold AND accepted >= 1.
// Compile resource errors count as rejection.
bool hardness_filter(const Formula& f, const GenConfig& cfg);

// Compile + count + stats for a candidate that passed (or std::nullopt).
std::optional<DatasetEntry> evaluate_candidate(const Formula& f, const GenConfig& cfg);

// One diversity step: mutate `base` until a candidate passes the element
// range, the hardness filter and the overlap bound, or the retry cap runs
// out (std::nullopt: caller draws a fresh base).
std::optional<DatasetEntry> diversity_step(Rng& rng, const DatasetEntry& base,
                                           const GenConfig& cfg, const SplitSpec& split);

// Measured overlap count: how many of k strings sampled from `base` are also
// accepted by `candidate`.
int overlap_count(Rng& rng, const DatasetEntry& base, const Dfa& candidate, int k, int n);

Dataset generate_dataset(const GenConfig& cfg);

// Ascending node count, ties by depth then canonical string.
std::vector<size_t> curriculum_order(const DatasetSplit& split);

struct SplitStats {
    MeanStd symbols, nodes, depth, states;
};
SplitStats split_stats(const DatasetSplit& split);

// ── dataset directory io ────────────────────────────────────────────────────
// <dir>/train.ltl, test_1_10.ltl, test_10_15.ltl, test_15_20.ltl (one formula
// per line, '#' comments), stats.tsv, config.meta.

void write_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);
std::vector<Formula> read_formula_file(const std::string& path, const Alphabet& alphabet);
std::string stats_tsv(const Dataset& ds);

}  // namespace ltlforge
