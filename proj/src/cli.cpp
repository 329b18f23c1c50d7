#include "ltlforge/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "ltlforge/trainer.hpp"

namespace ltlforge {

namespace fs = std::filesystem;

namespace {

std::uint64_t seed_fallback() {
    if (const char* env = std::getenv("LTLFORGE_SEED")) return std::stoull(env);
    return 0;
}

std::string letter_text(const Letter& l, const Alphabet& alphabet, bool one_hot) {
    if (one_hot) {
        for (int i = 0; i < alphabet.size(); ++i)
            if (l.bits == (1u << i)) return alphabet.name(i);
        return "?";
    }
    std::string out;
    for (int i = 0; i < alphabet.size(); ++i)
        if (l.holds(i)) {
            if (!out.empty()) out.push_back(',');
            out += alphabet.name(i);
        }
    return out.empty() ? "-" : out;
}

// ── gen-formulas ────────────────────────────────────────────────────────────

struct GenArgs {
    std::string domain = "symbol";
    std::string preset;
    std::string out_dir;
    std::string config_file;
    std::uint64_t seed = seed_fallback();
    int letters = -1;
    int horizon_n = -1;
    std::string threshold;
    std::string overlap;
    int samples = -1;
    double chain_prob = -1.0;
    bool no_negation = false;
    std::vector<int> sizes;
};

int cmd_gen(const GenArgs& a) {
    GenConfig cfg;
    if (!a.config_file.empty()) {
        cfg = GenConfig::from_key_values(parse_key_values(read_text_file(a.config_file)));
    } else {
        const std::string preset = a.preset.empty()
                                       ? (a.domain == "craft" ? "craft-paper" : "symbol-paper")
                                       : a.preset;
        if (preset == "symbol-paper")
            cfg = GenConfig::symbol_paper(a.seed);
        else if (preset == "craft-paper")
            cfg = GenConfig::craft_paper(a.seed);
        else if (preset == "symbol-desk")
            cfg = GenConfig::symbol_desk(a.seed);
        else
            throw ConfigError("unknown preset: " + preset);
    }
    cfg.seed = a.seed;
    if (a.letters > 0) cfg.letters = a.letters;
    if (a.horizon_n > 0) cfg.horizon_n = a.horizon_n;
    if (!a.threshold.empty()) {
        auto parts = split(a.threshold, '/');
        if (parts.size() != 2) throw ConfigError("threshold must be num/den");
        cfg.threshold_num = std::stoll(parts[0]);
        cfg.threshold_den = std::stoll(parts[1]);
    }
    if (!a.overlap.empty()) {
        auto parts = split(a.overlap, '/');
        if (parts.size() != 2) throw ConfigError("overlap must be num/den");
        cfg.overlap_num = std::stoll(parts[0]);
        cfg.overlap_den = std::stoll(parts[1]);
    }
    if (a.samples > 0) cfg.diversity_samples = a.samples;
    if (a.chain_prob >= 0.0) cfg.chain_prob = a.chain_prob;
    if (a.no_negation) cfg.allow_not = false;
    if (!a.sizes.empty()) {
        if (a.sizes.size() != cfg.splits.size())
            throw ConfigError("--sizes needs one value per split");
        for (size_t i = 0; i < a.sizes.size(); ++i) cfg.splits[i].size = a.sizes[i];
    }

    Dataset ds = generate_dataset(cfg);
    write_dataset(ds, a.out_dir);
    std::cout << stats_tsv(ds);
    return 0;
}

// ── stats ───────────────────────────────────────────────────────────────────

int cmd_stats(const std::string& dataset_dir) {
    Dataset ds = load_dataset(dataset_dir);
    const std::string tsv = stats_tsv(ds);
    write_text_file((fs::path(dataset_dir) / "stats.tsv").string(), tsv);
    std::cout << tsv;
    return 0;
}

// ── train / eval ────────────────────────────────────────────────────────────

struct TrainArgs {
    std::string dataset_dir, out_dir, baseline = "full", config_file, resume;
    std::uint64_t seed = seed_fallback();
    int updates = -1, cadence = -1, probe = -1, rollouts = -1, horizon = -1;
    int bootstrap = -1, checkpoint_every = -1;
    double lr = -1.0;
    bool no_curriculum = false;
};

TrainConfig make_train_config(const TrainArgs& a, const GenConfig& gen) {
    TrainConfig cfg = a.config_file.empty()
                          ? TrainConfig::defaults_for(gen.domain)
                          : TrainConfig::from_key_values(
                                parse_key_values(read_text_file(a.config_file)));
    cfg.domain = gen.domain;
    cfg.dataset_dir = a.dataset_dir;
    cfg.out_dir = a.out_dir;
    cfg.seed = a.seed;
    if (auto b = baseline_from_name(a.baseline))
        cfg.baseline = *b;
    else
        throw ConfigError("unknown baseline: " + a.baseline);
    if (a.updates > 0) cfg.updates = a.updates;
    if (a.cadence > 0) cfg.eval_cadence = a.cadence;
    if (a.probe > 0) cfg.eval_probe = a.probe;
    if (a.rollouts > 0) cfg.rollouts_per_update = a.rollouts;
    if (a.checkpoint_every > 0) cfg.checkpoint_every = a.checkpoint_every;
    if (a.lr > 0) cfg.lr = a.lr;
    if (a.bootstrap >= 0) cfg.bootstrap_n = a.bootstrap;
    if (a.horizon > 0) {
        cfg.symbol_horizon = a.horizon;
        cfg.craft_horizon = a.horizon;
    }
    if (a.no_curriculum) cfg.curriculum = false;
    return cfg;
}

int cmd_train(const TrainArgs& a) {
    Dataset ds = load_dataset(a.dataset_dir);
    TrainConfig cfg = make_train_config(a, ds.config);
    Trainer trainer(cfg, ds);
    int resume_from = 0;
    if (!a.resume.empty()) resume_from = trainer.load_checkpoint(a.resume);
    trainer.train(resume_from);
    EvalReport report = trainer.evaluate_all();
    const std::string tsv = eval_report_tsv(report);
    write_text_file((fs::path(a.out_dir) / "eval.tsv").string(), tsv);
    std::cout << tsv;
    return 0;
}

struct EvalArgs {
    std::string dataset_dir, checkpoint, baseline = "full", split, out;
    std::uint64_t seed = seed_fallback();
    int horizon = -1;
};

int cmd_eval(const EvalArgs& a) {
    Dataset ds = load_dataset(a.dataset_dir);
    TrainArgs ta;
    ta.dataset_dir = a.dataset_dir;
    ta.baseline = a.baseline;
    ta.seed = a.seed;
    ta.horizon = a.horizon;
    TrainConfig cfg = make_train_config(ta, ds.config);
    Trainer trainer(cfg, ds);
    trainer.load_checkpoint(a.checkpoint);

    EvalReport report;
    if (a.split.empty()) {
        report = trainer.evaluate_all();
    } else {
        const DatasetSplit* split = ds.split(a.split);
        if (!split) throw FileError("dataset has no split named " + a.split);
        report.rows.push_back(trainer.evaluate_split(*split));
    }
    const std::string tsv = eval_report_tsv(report);
    if (!a.out.empty()) write_text_file(a.out, tsv);
    std::cout << tsv;
    return 0;
}

// ── inspect ─────────────────────────────────────────────────────────────────

struct InspectArgs {
    std::string formula, map, policy = "random";
    std::uint64_t seed = seed_fallback();
    int horizon = -1;
    bool no_closer = false;
    int letters = 5;
};

int cmd_inspect(const InspectArgs& a) {
    Rng rng = make_rng(a.seed);
    std::cout << tsv_row({"t", "action", "letter", "monitor_state", "reward", "status"});

    if (!a.map.empty()) {
        CraftState start = parse_craft_map(read_text_file(a.map));
        CraftEnvConfig ec;
        ec.horizon = a.horizon > 0 ? a.horizon : 15;
        ec.use_closer = !a.no_closer;
        const Alphabet alphabet =
            ec.use_closer ? Alphabet::craft().with_closer() : Alphabet::craft();
        CraftTask task = make_craft_task(parse_formula(a.formula, Alphabet::craft()), ec);
        CraftEnv env(ec, &task);
        env.reset(start);

        std::vector<CraftAction> actions;
        if (a.policy == "scripted:fig2") {
            actions = scripted_fig2_actions(ec.horizon);
        } else if (a.policy.rfind("actions:", 0) == 0) {
            for (const auto& name : split(a.policy.substr(8), ',')) {
                auto act = craft_action_from_name(trim(name));
                if (!act) throw ConfigError("unknown craft action: " + name);
                actions.push_back(*act);
            }
        } else if (a.policy != "random") {
            throw ConfigError("unknown policy: " + a.policy);
        }

        bool done = false;
        for (int t = 0; !done && t < ec.horizon; ++t) {
            CraftAction act =
                a.policy == "random"
                    ? static_cast<CraftAction>(std::uniform_int_distribution<int>(0, 4)(rng))
                    : actions.at(static_cast<size_t>(t));
            auto r = env.step(act);
            std::cout << tsv_row({std::to_string(env.t()), craft_action_name(act),
                                  letter_text(r.letter, alphabet, false),
                                  std::to_string(env.monitor().current),
                                  format_double(r.reward, 6),
                                  r.done ? episode_status_name(r.status) : "running"});
            done = r.done;
        }
        return 0;
    }

    const Alphabet alphabet = Alphabet::symbols(a.letters);
    Formula f = parse_formula(a.formula, alphabet);
    Dfa dfa = compile(f, AlphabetModel::one_hot(alphabet));
    SymbolEnvConfig ec;
    ec.symbols = a.letters;
    ec.horizon = a.horizon > 0 ? a.horizon : 15;
    SymbolEnv env(ec, f, &dfa);
    env.reset();

    std::vector<int> actions;
    if (a.policy.rfind("actions:", 0) == 0) {
        for (const auto& name : split(a.policy.substr(8), ',')) {
            auto idx = alphabet.index_of(trim(name));
            if (!idx) throw ConfigError("unknown symbol: " + name);
            actions.push_back(*idx);
        }
    } else if (a.policy != "random") {
        throw ConfigError("unknown policy: " + a.policy);
    }

    bool done = false;
    for (int t = 0; !done && t < ec.horizon; ++t) {
        int act = a.policy == "random"
                      ? std::uniform_int_distribution<int>(0, a.letters - 1)(rng)
                      : actions.at(static_cast<size_t>(t));
        auto r = env.step(act);
        std::cout << tsv_row({std::to_string(env.t()), alphabet.name(act),
                              letter_text(r.letter, alphabet, true),
                              std::to_string(env.monitor().current),
                              format_double(r.reward, 6),
                              r.done ? episode_status_name(r.status) : "running"});
        done = r.done;
    }
    return 0;
}

// ── plot-data ───────────────────────────────────────────────────────────────

struct PlotArgs {
    std::vector<std::string> curves;
    std::vector<std::string> labels;
    std::string out_dir;
    int window = 1;
};

int cmd_plot_data(const PlotArgs& a) {
    fs::create_directories(a.out_dir);
    for (size_t run = 0; run < a.curves.size(); ++run) {
        const std::string label =
            run < a.labels.size() ? a.labels[run] : fs::path(a.curves[run]).stem().string();
        std::map<std::string, std::vector<std::pair<long, double>>> series;
        const auto lines = split(read_text_file(a.curves[run]), '\n');
        for (size_t i = 0; i < lines.size(); ++i) {
            const std::string line = trim(lines[i]);
            if (line.empty() || (i == 0 && line.rfind("update", 0) == 0)) continue;
            auto cells = split(line, '\t');
            if (cells.size() < 3) throw ConfigError("malformed curve row: " + line);
            series[cells[1]].push_back({std::stol(cells[0]), std::stod(cells[2])});
        }
        for (auto& [split_name, points] : series) {
            std::string body = tsv_row({"update", "success_rate"});
            for (size_t i = 0; i < points.size(); ++i) {
                double acc = 0.0;
                int n = 0;
                for (size_t j = i >= static_cast<size_t>(a.window) - 1
                                    ? i - (static_cast<size_t>(a.window) - 1)
                                    : 0;
                     j <= i; ++j, ++n)
                    acc += points[j].second;
                body += tsv_row({std::to_string(points[i].first),
                                 format_double(acc / std::max(1, n), 4)});
            }
            write_text_file(
                (fs::path(a.out_dir) / ("plot_" + label + "_" + split_name + ".tsv")).string(),
                body);
        }
        if (series.empty())
            write_text_file((fs::path(a.out_dir) / ("plot_" + label + ".tsv")).string(),
                            tsv_row({"update", "success_rate"}));
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"ltlforge: hard LTLf task generation, automata and zero-shot RL"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* cgen = app.add_subcommand("gen-formulas", "generate a formula dataset");
    cgen->add_option("--domain", gen.domain)->check(CLI::IsMember({"symbol", "craft"}));
    cgen->add_option("--preset", gen.preset)
        ->check(CLI::IsMember({"symbol-paper", "craft-paper", "symbol-desk"}));
    cgen->add_option("--out-dir", gen.out_dir)->required();
    cgen->add_option("--config-file", gen.config_file);
    cgen->add_option("--seed", gen.seed);
    cgen->add_option("--letters", gen.letters);
    cgen->add_option("--horizon-n", gen.horizon_n);
    cgen->add_option("--threshold", gen.threshold, "hardness ratio bound, num/den");
    cgen->add_option("--overlap", gen.overlap, "diversity overlap bound, num/den");
    cgen->add_option("--samples", gen.samples, "overlap sample count");
    cgen->add_option("--chain-prob", gen.chain_prob);
    cgen->add_flag("--no-negation", gen.no_negation);
    cgen->add_option("--sizes", gen.sizes, "split sizes, one per split")->delimiter(',');

    std::string stats_dir;
    auto* cstats = app.add_subcommand("stats", "recompute dataset statistics");
    cstats->add_option("--dataset", stats_dir)->required();

    TrainArgs tr;
    auto* ctrain = app.add_subcommand("train", "train a policy over a dataset");
    ctrain->add_option("--dataset", tr.dataset_dir)->required();
    ctrain->add_option("--out-dir", tr.out_dir)->required();
    ctrain->add_option("--baseline", tr.baseline);
    ctrain->add_option("--config-file", tr.config_file);
    ctrain->add_option("--resume", tr.resume, "checkpoint directory to resume from");
    ctrain->add_option("--seed", tr.seed);
    ctrain->add_option("--updates", tr.updates);
    ctrain->add_option("--cadence", tr.cadence);
    ctrain->add_option("--probe", tr.probe);
    ctrain->add_option("--rollouts", tr.rollouts);
    ctrain->add_option("--horizon", tr.horizon);
    ctrain->add_option("--bootstrap", tr.bootstrap);
    ctrain->add_option("--checkpoint-every", tr.checkpoint_every);
    ctrain->add_option("--lr", tr.lr);
    ctrain->add_flag("--no-curriculum", tr.no_curriculum);

    EvalArgs ev;
    auto* ceval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    ceval->add_option("--dataset", ev.dataset_dir)->required();
    ceval->add_option("--checkpoint", ev.checkpoint)->required();
    ceval->add_option("--baseline", ev.baseline);
    ceval->add_option("--split", ev.split);
    ceval->add_option("--out", ev.out);
    ceval->add_option("--seed", ev.seed);
    ceval->add_option("--horizon", ev.horizon);

    InspectArgs ins;
    auto* cins = app.add_subcommand("inspect", "step one episode and print its trace");
    cins->add_option("--formula", ins.formula)->required();
    cins->add_option("--map", ins.map, "craft map fixture; omit for the Symbol domain");
    cins->add_option("--policy", ins.policy,
                     "random | scripted:fig2 | actions:<name,name,...>");
    cins->add_option("--seed", ins.seed);
    cins->add_option("--horizon", ins.horizon);
    cins->add_option("--letters", ins.letters);
    cins->add_flag("--no-closer", ins.no_closer);

    PlotArgs pl;
    auto* cplot = app.add_subcommand("plot-data", "emit plot-ready series from a curve file");
    cplot->add_option("--curves", pl.curves)->required();
    cplot->add_option("--labels", pl.labels);
    cplot->add_option("--out-dir", pl.out_dir)->required();
    cplot->add_option("--window", pl.window)->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*cgen) return cmd_gen(gen);
        if (*cstats) return cmd_stats(stats_dir);
        if (*ctrain) return cmd_train(tr);
        if (*ceval) return cmd_eval(ev);
        if (*cins) return cmd_inspect(ins);
        if (*cplot) return cmd_plot_data(pl);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 3;
    } catch (const FileError& e) {
        std::cerr << "error: file: " << e.what() << "\n";
        return 4;
    } catch (const ParseError& e) {
        std::cerr << "error: formula: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    }
    return 2;
}

}  // namespace ltlforge
