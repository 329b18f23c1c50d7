#include "ltlforge/formula_gen.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <unordered_set>

namespace ltlforge {

namespace fs = std::filesystem;

// ── GenConfig ───────────────────────────────────────────────────────────────

ElementPrior SplitSpec::fresh_prior() const {
    if (prior_weights.empty()) return ElementPrior::uniform(min_elements, max_elements);
    if (static_cast<int>(prior_weights.size()) != max_elements - min_elements + 1)
        throw std::invalid_argument("prior_weights length must match the element range");
    return ElementPrior::weighted(min_elements, prior_weights);
}

Alphabet GenConfig::alphabet() const {
    return domain == Domain::Symbol ? Alphabet::symbols(letters) : Alphabet::craft();
}

AlphabetModel GenConfig::model() const {
    return domain == Domain::Symbol ? AlphabetModel::one_hot(alphabet())
                                    : AlphabetModel::free(alphabet());
}

GenConfig GenConfig::symbol_paper(std::uint64_t seed) {
    GenConfig cfg;
    cfg.domain = Domain::Symbol;
    cfg.letters = 5;
    cfg.horizon_n = 15;
    cfg.seed = seed;
    // Element-count weights calibrated so that the post-filter train split
    // lands near 9.1 mean tree nodes; short formulas rarely survive the
    // hardness filter at interesting rates, so the mass sits at 6..10.
    const std::vector<double> w = {0, 0, 0, 0, 0, 0.2, 0.7, 2.2, 6.0, 14.0};
    cfg.splits[0].prior_weights = w;
    cfg.splits[1].prior_weights = w;
    return cfg;
}

GenConfig GenConfig::craft_paper(std::uint64_t seed) {
    GenConfig cfg;
    cfg.domain = Domain::Craft;
    cfg.horizon_n = 15;
    cfg.seed = seed;
    for (auto& s : cfg.splits) s.size = 4000;
    return cfg;
}

GenConfig GenConfig::symbol_desk(std::uint64_t seed) {
    GenConfig cfg;
    cfg.domain = Domain::Symbol;
    cfg.letters = 3;
    cfg.horizon_n = 8;
    cfg.threshold_num = 1;
    cfg.threshold_den = 100;
    cfg.seed = seed;
    cfg.splits = {
        {"train", 200, 1, 10},
        {"test_1_10", 50, 1, 10},
        {"test_10_15", 50, 10, 15},
        {"test_15_20", 50, 15, 20},
    };
    return cfg;
}

KeyValueMap GenConfig::to_key_values() const {
    KeyValueMap kv;
    kv["domain"] = domain == Domain::Symbol ? "symbol" : "craft";
    kv["letters"] = std::to_string(letters);
    kv["horizon_n"] = std::to_string(horizon_n);
    kv["threshold"] = std::to_string(threshold_num) + "/" + std::to_string(threshold_den);
    kv["overlap"] = std::to_string(overlap_num) + "/" + std::to_string(overlap_den);
    kv["diversity_samples"] = std::to_string(diversity_samples);
    kv["chain_prob"] = format_double(chain_prob, 3);
    kv["diversity_retry_cap"] = std::to_string(diversity_retry_cap);
    kv["allow_not"] = allow_not ? "1" : "0";
    kv["state_cap"] = std::to_string(state_cap);
    kv["seed"] = std::to_string(seed);
    kv["max_attempts_per_split"] = std::to_string(max_attempts_per_split);
    for (size_t i = 0; i < splits.size(); ++i) {
        const auto& s = splits[i];
        kv["split" + std::to_string(i)] = s.name + "," + std::to_string(s.size) + "," +
                                          std::to_string(s.min_elements) + "," +
                                          std::to_string(s.max_elements);
        if (!s.prior_weights.empty()) {
            std::string w;
            for (size_t j = 0; j < s.prior_weights.size(); ++j) {
                if (j) w.push_back(',');
                w += format_double(s.prior_weights[j], 4);
            }
            kv["split" + std::to_string(i) + "_prior"] = w;
        }
    }
    return kv;
}

namespace {

std::pair<std::int64_t, std::int64_t> parse_fraction(const std::string& s) {
    auto parts = split(s, '/');
    if (parts.size() != 2) throw ConfigError("malformed fraction: " + s);
    return {std::stoll(parts[0]), std::stoll(parts[1])};
}

}  // namespace

GenConfig GenConfig::from_key_values(const KeyValueMap& kv) {
    GenConfig cfg;
    auto need = [&](const std::string& k) -> const std::string& {
        auto it = kv.find(k);
        if (it == kv.end()) throw ConfigError("config missing key: " + k);
        return it->second;
    };
    cfg.domain = need("domain") == "craft" ? Domain::Craft : Domain::Symbol;
    cfg.letters = std::stoi(need("letters"));
    cfg.horizon_n = std::stoi(need("horizon_n"));
    std::tie(cfg.threshold_num, cfg.threshold_den) = parse_fraction(need("threshold"));
    std::tie(cfg.overlap_num, cfg.overlap_den) = parse_fraction(need("overlap"));
    cfg.diversity_samples = std::stoi(need("diversity_samples"));
    cfg.chain_prob = std::stod(need("chain_prob"));
    cfg.diversity_retry_cap = std::stoi(need("diversity_retry_cap"));
    cfg.allow_not = need("allow_not") == "1";
    cfg.state_cap = std::stoi(need("state_cap"));
    cfg.seed = std::stoull(need("seed"));
    cfg.max_attempts_per_split = std::stoull(need("max_attempts_per_split"));
    cfg.splits.clear();
    for (int i = 0;; ++i) {
        auto it = kv.find("split" + std::to_string(i));
        if (it == kv.end()) break;
        auto parts = split(it->second, ',');
        if (parts.size() != 4) throw ConfigError("malformed split spec: " + it->second);
        SplitSpec spec{parts[0], std::stoi(parts[1]), std::stoi(parts[2]), std::stoi(parts[3]),
                       {}};
        auto wit = kv.find("split" + std::to_string(i) + "_prior");
        if (wit != kv.end())
            for (const auto& tok : split(wit->second, ','))
                spec.prior_weights.push_back(std::stod(tok));
        cfg.splits.push_back(std::move(spec));
    }
    if (cfg.splits.empty()) throw ConfigError("config declares no splits");
    return cfg;
}

const DatasetSplit* Dataset::split(const std::string& name) const {
    for (const auto& s : splits)
        if (s.spec.name == name) return &s;
    return nullptr;
}

// ── filters ─────────────────────────────────────────────────────────────────

std::optional<DatasetEntry> evaluate_candidate(const Formula& f, const GenConfig& cfg) {
    Dfa dfa;
    try {
        dfa = compile(f, cfg.model(), cfg.state_cap);
    } catch (const StateCapError&) {
        return std::nullopt;
    }
    CountResult r = count_accepted(dfa, cfg.horizon_n);
    if (r.accepted < 1) return std::nullopt;  // unsatisfiable within the horizon
    if (!ratio_at_most(r, cfg.threshold_num, cfg.threshold_den)) return std::nullopt;
    DatasetEntry e;
    e.stats.symbol_count = f.atom_count();
    e.stats.node_count = f.node_count();
    e.stats.depth = f.depth();
    e.stats.automaton_states = dfa.num_states();
    e.formula = f;
    e.dfa = std::move(dfa);
    e.canonical = format_formula(f, cfg.alphabet());
    return e;
}

bool hardness_filter(const Formula& f, const GenConfig& cfg) {
    return evaluate_candidate(f, cfg).has_value();
}

int overlap_count(Rng& rng, const DatasetEntry& base, const Dfa& candidate, int k, int n) {
    int hits = 0;
    for (const auto& trace : sample_accepted(rng, base.dfa, n, k))
        if (candidate.accepts(trace)) ++hits;
    return hits;
}

std::optional<DatasetEntry> diversity_step(Rng& rng, const DatasetEntry& base,
                                           const GenConfig& cfg, const SplitSpec& split) {
    const Alphabet alphabet = cfg.alphabet();
    ElementPrior prior = ElementPrior::uniform(1, split.max_elements);
    SampleOptions opts{cfg.allow_not};
    for (int attempt = 0; attempt < cfg.diversity_retry_cap; ++attempt) {
        Formula candidate = mutate_subtree(rng, base.formula, prior, alphabet, opts);
        if (candidate.node_count() < split.min_elements ||
            candidate.node_count() > split.max_elements)
            continue;
        auto entry = evaluate_candidate(candidate, cfg);
        if (!entry) continue;
        int hits = overlap_count(rng, base, entry->dfa, cfg.diversity_samples, cfg.horizon_n);
        // overlap fraction must be <= overlap_num/overlap_den, exactly
        if (static_cast<std::int64_t>(hits) * cfg.overlap_den >
            cfg.overlap_num * static_cast<std::int64_t>(cfg.diversity_samples))
            continue;
        return entry;
    }
    return std::nullopt;
}

// ── generation ──────────────────────────────────────────────────────────────

Dataset generate_dataset(const GenConfig& cfg) {
    Dataset ds;
    ds.config = cfg;
    Rng rng = make_rng(cfg.seed);
    const Alphabet alphabet = cfg.alphabet();
    SampleOptions opts{cfg.allow_not};
    std::unordered_set<std::string> used;  // canonical strings across all splits

    for (const auto& spec : cfg.splits) {
        DatasetSplit split_out;
        split_out.spec = spec;
        ElementPrior prior = spec.fresh_prior();
        std::optional<DatasetEntry> base;
        std::uint64_t attempts = 0;

        while (static_cast<int>(split_out.entries.size()) < spec.size) {
            if (++attempts > cfg.max_attempts_per_split) {
                std::ostringstream msg;
                msg << "generation stalled in split '" << spec.name << "' after " << attempts
                    << " attempts (" << split_out.entries.size() << "/" << spec.size
                    << " formulas)";
                throw GenTimeout(msg.str());
            }

            std::optional<DatasetEntry> entry;
            if (base) {
                entry = diversity_step(rng, *base, cfg, spec);
                if (!entry) {
                    base.reset();  // chain exhausted; draw fresh
                    continue;
                }
            } else {
                entry = evaluate_candidate(sample_formula(rng, prior, alphabet, opts), cfg);
                if (!entry) continue;
            }

            if (used.count(entry->canonical)) continue;
            used.insert(entry->canonical);
            const bool chain =
                std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg.chain_prob;
            split_out.entries.push_back(std::move(*entry));
            base = chain ? std::optional<DatasetEntry>(split_out.entries.back()) : std::nullopt;
        }
        ds.splits.push_back(std::move(split_out));
    }
    return ds;
}

std::vector<size_t> curriculum_order(const DatasetSplit& split) {
    std::vector<size_t> order(split.entries.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        const auto& ea = split.entries[a];
        const auto& eb = split.entries[b];
        if (ea.stats.node_count != eb.stats.node_count)
            return ea.stats.node_count < eb.stats.node_count;
        if (ea.stats.depth != eb.stats.depth) return ea.stats.depth < eb.stats.depth;
        return ea.canonical < eb.canonical;
    });
    return order;
}

SplitStats split_stats(const DatasetSplit& split) {
    std::vector<double> symbols, nodes, depth, states;
    for (const auto& e : split.entries) {
        symbols.push_back(e.stats.symbol_count);
        nodes.push_back(e.stats.node_count);
        depth.push_back(e.stats.depth);
        states.push_back(e.stats.automaton_states);
    }
    return {mean_std(symbols), mean_std(nodes), mean_std(depth), mean_std(states)};
}

// ── io ──────────────────────────────────────────────────────────────────────

std::string stats_tsv(const Dataset& ds) {
    std::string out = tsv_row({"set", "symbols_mean", "symbols_std", "nodes_mean", "nodes_std",
                               "depth_mean", "depth_std", "states_mean", "states_std"});
    for (const auto& s : ds.splits) {
        SplitStats st = split_stats(s);
        out += tsv_row({s.spec.name, format_double(st.symbols.mean), format_double(st.symbols.stddev),
                        format_double(st.nodes.mean), format_double(st.nodes.stddev),
                        format_double(st.depth.mean), format_double(st.depth.stddev),
                        format_double(st.states.mean), format_double(st.states.stddev)});
    }
    return out;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
    fs::create_directories(dir);
    for (const auto& s : ds.splits) {
        std::string body;
        for (const auto& e : s.entries) {
            body += e.canonical;
            body.push_back('\n');
        }
        write_text_file((fs::path(dir) / (s.spec.name + ".ltl")).string(), body);
    }
    write_text_file((fs::path(dir) / "stats.tsv").string(), stats_tsv(ds));
    write_text_file((fs::path(dir) / "config.meta").string(),
                    format_key_values(ds.config.to_key_values()));
}

std::vector<Formula> read_formula_file(const std::string& path, const Alphabet& alphabet) {
    std::vector<Formula> out;
    for (const auto& raw : split(read_text_file(path), '\n')) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        out.push_back(parse_formula(line, alphabet));
    }
    return out;
}

Dataset load_dataset(const std::string& dir) {
    Dataset ds;
    ds.config = GenConfig::from_key_values(
        parse_key_values(read_text_file((fs::path(dir) / "config.meta").string())));
    const Alphabet alphabet = ds.config.alphabet();
    for (const auto& spec : ds.config.splits) {
        DatasetSplit s;
        s.spec = spec;
        for (const auto& f :
             read_formula_file((fs::path(dir) / (spec.name + ".ltl")).string(), alphabet)) {
            DatasetEntry e;
            e.formula = f;
            e.dfa = compile(f, ds.config.model(), ds.config.state_cap);
            e.stats.symbol_count = f.atom_count();
            e.stats.node_count = f.node_count();
            e.stats.depth = f.depth();
            e.stats.automaton_states = e.dfa.num_states();
            e.canonical = format_formula(f, alphabet);
            s.entries.push_back(std::move(e));
        }
        ds.splits.push_back(std::move(s));
    }
    return ds;
}

}  // namespace ltlforge
