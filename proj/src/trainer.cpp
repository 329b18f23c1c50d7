#include "ltlforge/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ltlforge {

namespace fs = std::filesystem;

// ── TrainConfig ─────────────────────────────────────────────────────────────

TrainConfig TrainConfig::defaults_for(GenConfig::Domain domain) {
    TrainConfig cfg;
    cfg.domain = domain;
    if (domain == GenConfig::Domain::Craft) {
        cfg.eval_cadence = 200;
        cfg.bootstrap_n = 15;
    }
    return cfg;
}

KeyValueMap TrainConfig::to_key_values() const {
    KeyValueMap kv;
    kv["domain"] = domain == GenConfig::Domain::Symbol ? "symbol" : "craft";
    kv["baseline"] = baseline_name(baseline);
    kv["dataset_dir"] = dataset_dir;
    kv["out_dir"] = out_dir;
    kv["updates"] = std::to_string(updates);
    kv["rollouts_per_update"] = std::to_string(rollouts_per_update);
    kv["eval_cadence"] = std::to_string(eval_cadence);
    kv["eval_probe"] = std::to_string(eval_probe);
    kv["checkpoint_every"] = std::to_string(checkpoint_every);
    kv["lr"] = format_double(lr, 8);
    kv["rms_decay"] = format_double(rms_decay, 6);
    kv["rms_eps"] = format_double(rms_eps, 10);
    kv["gamma"] = format_double(gamma, 6);
    kv["entropy_weight"] = format_double(entropy_weight, 6);
    kv["bootstrap_n"] = std::to_string(bootstrap_n);
    kv["curriculum"] = curriculum ? "1" : "0";
    kv["hidden"] = std::to_string(hidden);
    kv["msg"] = std::to_string(msg);
    kv["symbol_horizon"] = std::to_string(symbol_horizon);
    kv["craft_horizon"] = std::to_string(craft_horizon);
    kv["craft_map_size"] = std::to_string(craft_map_size);
    kv["craft_use_closer"] = craft_use_closer ? "1" : "0";
    kv["seed"] = std::to_string(seed);
    return kv;
}

TrainConfig TrainConfig::from_key_values(const KeyValueMap& kv) {
    TrainConfig cfg;
    auto get = [&](const std::string& k, const std::string& fallback) {
        auto it = kv.find(k);
        return it == kv.end() ? fallback : it->second;
    };
    cfg.domain = get("domain", "symbol") == "craft" ? GenConfig::Domain::Craft
                                                    : GenConfig::Domain::Symbol;
    if (auto b = baseline_from_name(get("baseline", "full"))) cfg.baseline = *b;
    cfg.dataset_dir = get("dataset_dir", "");
    cfg.out_dir = get("out_dir", "");
    cfg.updates = std::stoi(get("updates", "30000"));
    cfg.rollouts_per_update = std::stoi(get("rollouts_per_update", "15"));
    cfg.eval_cadence = std::stoi(get("eval_cadence", "500"));
    cfg.eval_probe = std::stoi(get("eval_probe", "50"));
    cfg.checkpoint_every = std::stoi(get("checkpoint_every", "5000"));
    cfg.lr = std::stod(get("lr", "0.0007"));
    cfg.rms_decay = std::stod(get("rms_decay", "0.99"));
    cfg.rms_eps = std::stod(get("rms_eps", "0.00001"));
    cfg.gamma = std::stod(get("gamma", "0.9"));
    cfg.entropy_weight = std::stod(get("entropy_weight", "0.1"));
    cfg.bootstrap_n = std::stoi(get("bootstrap_n", "0"));
    cfg.curriculum = get("curriculum", "1") == "1";
    cfg.hidden = std::stoi(get("hidden", "64"));
    cfg.msg = std::stoi(get("msg", "32"));
    cfg.symbol_horizon = std::stoi(get("symbol_horizon", "15"));
    cfg.craft_horizon = std::stoi(get("craft_horizon", "100"));
    cfg.craft_map_size = std::stoi(get("craft_map_size", "7"));
    cfg.craft_use_closer = get("craft_use_closer", "1") == "1";
    cfg.seed = std::stoull(get("seed", "0"));
    return cfg;
}

std::string eval_report_tsv(const EvalReport& report) {
    std::string out = tsv_row({"split", "episodes", "successes", "violations", "timeouts",
                               "success_rate", "mean_length"});
    for (const auto& r : report.rows)
        out += tsv_row({r.split, std::to_string(r.episodes), std::to_string(r.successes),
                        std::to_string(r.violations), std::to_string(r.timeouts),
                        format_double(r.success_rate, 4), format_double(r.mean_length, 2)});
    return out;
}

// ── model construction ──────────────────────────────────────────────────────

namespace {

ModelConfig model_config_for(BaselineKind kind, const TrainConfig& cfg, const GenConfig& gen,
                             const Alphabet& exec_alphabet) {
    ModelConfig mc;
    mc.hidden = cfg.hidden;
    mc.msg = cfg.msg;
    mc.init_seed = derive_seed(cfg.seed, 0xC0FFEE);
    if (cfg.domain == GenConfig::Domain::Symbol) {
        mc.layers = 1;
        mc.actions = gen.letters;
        mc.feat = gen.letters + 1;  // identity extractor over the observation
    } else {
        mc.layers = 2;
        mc.actions = kCraftActionCount;
        mc.feat = 64;
        mc.conv_planes = CraftEnv::kPlanes;
        mc.crop = 5;
        mc.nonspatial = CraftEnv::kNonSpatial;
    }
    switch (kind) {
        case BaselineKind::Full:
            break;
        case BaselineKind::NoTime:
            mc.feed_forward = true;
            break;
        case BaselineKind::NoStructure:
            mc.trunk_input = mc.feat + mc.embed;
            mc.encoder_vocab = encoder_vocab_size(exec_alphabet);
            break;
        case BaselineKind::NoStructureNoLanguage:
            mc.trunk_input = mc.feat;
            break;
    }
    return mc;
}

}  // namespace

ModelBundle build_baseline(BaselineKind kind, const TrainConfig& cfg, const GenConfig& gen) {
    ModelBundle b;
    b.exec_alphabet = cfg.domain == GenConfig::Domain::Craft && cfg.craft_use_closer
                          ? Alphabet::craft().with_closer()
                          : gen.alphabet();
    ModelConfig mc = model_config_for(kind, cfg, gen, b.exec_alphabet);
    b.registry = std::make_unique<Registry>(mc);
    if (kind == BaselineKind::NoStructure || kind == BaselineKind::NoStructureNoLanguage) {
        b.model = std::make_unique<MonolithicModel>(b.registry.get(), b.exec_alphabet);
    } else {
        // deterministic parameter layout: create every token up front
        for (NodeKind k : {NodeKind::Not, NodeKind::Next, NodeKind::Eventually,
                           NodeKind::Always, NodeKind::And, NodeKind::Or, NodeKind::Until})
            b.registry->ensure_token(kind_name(k));
        for (int i = 0; i < b.exec_alphabet.size(); ++i)
            b.registry->ensure_token(b.exec_alphabet.name(i));
        b.model = std::make_unique<TreeModel>(b.registry.get(), b.exec_alphabet);
    }
    return b;
}

ModelBundle bundle_from_checkpoint(BaselineKind kind, const TrainConfig& cfg,
                                   const GenConfig& gen, const std::string& model_path) {
    ModelBundle b;
    b.exec_alphabet = cfg.domain == GenConfig::Domain::Craft && cfg.craft_use_closer
                          ? Alphabet::craft().with_closer()
                          : gen.alphabet();
    b.registry = std::make_unique<Registry>(load_registry(model_path));
    if (kind == BaselineKind::NoStructure || kind == BaselineKind::NoStructureNoLanguage)
        b.model = std::make_unique<MonolithicModel>(b.registry.get(), b.exec_alphabet);
    else
        b.model = std::make_unique<TreeModel>(b.registry.get(), b.exec_alphabet);
    return b;
}

// ── optimizer ───────────────────────────────────────────────────────────────

void RmsProp::step(Registry& params, Registry& grads) {
    Registry::visit3(params, grads, acc_,
                     [&](const std::string&, Mat& p, Mat& g, Mat& a) {
                         a = decay_ * a + (1.0 - decay_) * g.cwiseProduct(g);
                         p.array() -= lr_ * g.array() / (a.array().sqrt() + eps_);
                     });
}

// ── rollouts ────────────────────────────────────────────────────────────────

namespace {

int choose_action(const Vec& logits, Rng& rng, bool stochastic, double& log_prob) {
    const Vec p = detail::softmax(logits);
    int action = 0;
    if (stochastic) {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        double acc = 0.0;
        action = static_cast<int>(p.size()) - 1;
        for (int i = 0; i < p.size(); ++i) {
            acc += p[i];
            if (u <= acc) {
                action = i;
                break;
            }
        }
    } else {
        p.maxCoeff(&action);  // ties resolve to the lowest index
    }
    log_prob = std::log(std::max(p[action], 1e-300));
    return action;
}

}  // namespace

Trajectory run_symbol_episode(PolicyModel& model, const DatasetEntry& entry,
                              const TrainConfig& cfg, Rng& rng, bool stochastic) {
    SymbolEnvConfig ec;
    ec.symbols = static_cast<int>(entry.dfa.model().prop_count());
    ec.horizon = cfg.symbol_horizon;
    SymbolEnv env(ec, entry.formula, &entry.dfa);

    Trajectory traj;
    Vec obs = env.reset();
    model.reset();
    bool done = false;
    while (!done) {
        StepOutput so = model.forward(obs);
        TrajectoryStep step;
        step.observation = obs;
        step.action = choose_action(so.logits, rng, stochastic, step.log_prob);
        step.value = so.value;
        auto r = env.step(step.action);
        step.reward = r.reward;
        traj.total_reward += r.reward;
        traj.steps.push_back(std::move(step));
        obs = r.observation;
        done = r.done;
        traj.outcome = r.status;
    }
    return traj;
}

Trajectory run_craft_episode(PolicyModel& model, const Formula& base_formula,
                             const CraftTask& task, const TrainConfig& cfg, Rng& action_rng,
                             Rng& map_rng, bool stochastic) {
    (void)base_formula;
    CraftEnvConfig ec;
    ec.horizon = cfg.craft_horizon;
    ec.use_closer = cfg.craft_use_closer;
    CraftEnv env(ec, &task);

    Trajectory traj;
    Vec obs = env.reset(craft_generate_map(map_rng, cfg.craft_map_size));
    model.reset();
    bool done = false;
    while (!done) {
        StepOutput so = model.forward(obs);
        TrajectoryStep step;
        step.observation = obs;
        step.action = choose_action(so.logits, action_rng, stochastic, step.log_prob);
        step.value = so.value;
        auto r = env.step(static_cast<CraftAction>(step.action));
        step.reward = r.reward;
        traj.total_reward += r.reward;
        traj.steps.push_back(std::move(step));
        obs = r.observation;
        done = r.done;
        traj.outcome = r.status;
    }
    return traj;
}

// ── Trainer ─────────────────────────────────────────────────────────────────

Trainer::Trainer(TrainConfig cfg, const Dataset& dataset)
    : cfg_(std::move(cfg)), ds_(dataset) {
    train_split_ = ds_.split("train");
    if (!train_split_) throw std::runtime_error("dataset has no train split");
    if (cfg_.curriculum) {
        order_ = curriculum_order(*train_split_);
    } else {
        order_.resize(train_split_->entries.size());
        for (size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    }
    bundle_ = build_baseline(cfg_.baseline, cfg_, ds_.config);
    opt_ = std::make_unique<RmsProp>(cfg_.lr, cfg_.rms_decay, cfg_.rms_eps,
                                     bundle_.registry->clone_zeroed());
    hyper_.gamma = cfg_.gamma;
    hyper_.entropy_weight = cfg_.entropy_weight;
    hyper_.bootstrap_n = cfg_.bootstrap_n;
}

const CraftTask& Trainer::craft_task(size_t formula_index) {
    auto it = craft_tasks_.find(formula_index);
    if (it != craft_tasks_.end()) return it->second;
    CraftEnvConfig ec;
    ec.horizon = cfg_.craft_horizon;
    ec.use_closer = cfg_.craft_use_closer;
    CraftTask task = make_craft_task(train_split_->entries[formula_index].formula, ec,
                                     ds_.config.state_cap);
    return craft_tasks_.emplace(formula_index, std::move(task)).first->second;
}

Trajectory Trainer::collect_episode(size_t formula_index, std::uint64_t stream,
                                    bool stochastic) {
    const DatasetEntry& entry = train_split_->entries[formula_index];
    Rng rng = make_rng(cfg_.seed, stream);
    if (cfg_.domain == GenConfig::Domain::Symbol) {
        bundle_.model->bind(entry.formula);
        Trajectory t = run_symbol_episode(*bundle_.model, entry, cfg_, rng, stochastic);
        t.formula_index = formula_index;
        return t;
    }
    const CraftTask& task = craft_task(formula_index);
    bundle_.model->bind(task.executed);
    Rng map_rng = make_rng(cfg_.seed ^ 0x9a97f, stream);
    Trajectory t =
        run_craft_episode(*bundle_.model, entry.formula, task, cfg_, rng, map_rng, stochastic);
    t.formula_index = formula_index;
    return t;
}

LossParts Trainer::a2c_update(const std::vector<Trajectory>& batch) {
    if (batch.empty()) throw std::invalid_argument("empty rollout batch");
    Registry grads = bundle_.registry->clone_zeroed();
    LossParts total;
    for (const Trajectory& traj : batch) {
        const DatasetEntry& entry = train_split_->entries[traj.formula_index];
        if (cfg_.domain == GenConfig::Domain::Symbol)
            bundle_.model->bind(entry.formula);
        else
            bundle_.model->bind(craft_task(traj.formula_index).executed);
        LossParts parts = loss_and_gradients(*bundle_.model, traj.steps, hyper_, grads);
        total.total += parts.total;
        total.policy += parts.policy;
        total.value += parts.value;
        total.entropy += parts.entropy;
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    total.total *= scale;
    total.policy *= scale;
    total.value *= scale;
    total.entropy *= scale;
    if (!std::isfinite(total.total)) {
        std::ostringstream msg;
        msg << "non-finite loss: policy=" << total.policy << " value=" << total.value
            << " entropy=" << total.entropy;
        throw std::runtime_error(msg.str());
    }
    grads.visit([&](const std::string&, Mat& g) { g *= scale; });
    opt_->step(*bundle_.registry, grads);
    return total;
}

EvalRow Trainer::evaluate_split(const DatasetSplit& split, int limit) {
    EvalRow row;
    row.split = split.spec.name;
    const size_t n = limit > 0 ? std::min<size_t>(split.entries.size(),
                                                  static_cast<size_t>(limit))
                               : split.entries.size();
    double length_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const DatasetEntry& entry = split.entries[i];
        Rng rng = make_rng(cfg_.seed ^ 0xEBA1, i);
        Trajectory traj;
        if (cfg_.domain == GenConfig::Domain::Symbol) {
            bundle_.model->bind(entry.formula);
            traj = run_symbol_episode(*bundle_.model, entry, cfg_, rng, false);
        } else {
            CraftEnvConfig ec;
            ec.horizon = cfg_.craft_horizon;
            ec.use_closer = cfg_.craft_use_closer;
            CraftTask task = make_craft_task(entry.formula, ec, ds_.config.state_cap);
            bundle_.model->bind(task.executed);
            Rng map_rng = make_rng(cfg_.seed ^ 0xEBA2, i);
            traj = run_craft_episode(*bundle_.model, entry.formula, task, cfg_, rng, map_rng,
                                     false);
        }
        ++row.episodes;
        if (traj.outcome == EpisodeStatus::Success) ++row.successes;
        if (traj.outcome == EpisodeStatus::Violation) ++row.violations;
        if (traj.outcome == EpisodeStatus::Timeout) ++row.timeouts;
        length_sum += static_cast<double>(traj.steps.size());
    }
    row.success_rate = row.episodes ? static_cast<double>(row.successes) / row.episodes : 0.0;
    row.mean_length = row.episodes ? length_sum / row.episodes : 0.0;
    return row;
}

EvalReport Trainer::evaluate_all() {
    EvalReport report;
    for (const auto& split : ds_.splits) report.rows.push_back(evaluate_split(split));
    return report;
}

int Trainer::load_checkpoint(const std::string& dir) {
    Registry model = load_registry((fs::path(dir) / "model.bin").string());
    Registry::visit2(*bundle_.registry, model,
                     [](const std::string&, Mat& dst, Mat& src) { dst = src; });
    Registry rms = load_registry((fs::path(dir) / "rms.bin").string());
    Registry::visit2(opt_->state(), rms,
                     [](const std::string&, Mat& dst, Mat& src) { dst = src; });
    KeyValueMap st =
        parse_key_values(read_text_file((fs::path(dir) / "state.meta").string()));
    return std::stoi(st.at("update"));
}

void Trainer::train(int resume_from_update) {
    fs::create_directories(cfg_.out_dir);
    write_text_file((fs::path(cfg_.out_dir) / "config.meta").string(),
                    format_key_values(cfg_.to_key_values()));
    const std::string curve_path = (fs::path(cfg_.out_dir) / "curve.tsv").string();
    if (resume_from_update == 0)
        write_text_file(curve_path, tsv_row({"update", "split", "success_rate", "policy_loss",
                                             "value_loss", "entropy"}));

    LossParts window;  // running sums since the last curve row
    int window_n = 0;
    for (int update = resume_from_update; update < cfg_.updates; ++update) {
        const size_t formula_index = order_[static_cast<size_t>(update) % order_.size()];
        if (on_update) on_update(update, formula_index);

        std::vector<Trajectory> batch;
        batch.reserve(static_cast<size_t>(cfg_.rollouts_per_update));
        for (int r = 0; r < cfg_.rollouts_per_update; ++r) {
            const std::uint64_t stream =
                static_cast<std::uint64_t>(update) * 1000003ULL + static_cast<std::uint64_t>(r);
            batch.push_back(collect_episode(formula_index, stream, true));
        }
        LossParts parts = a2c_update(batch);
        window.policy += parts.policy;
        window.value += parts.value;
        window.entropy += parts.entropy;
        ++window_n;

        const int done = update + 1;
        if (done % cfg_.eval_cadence == 0 || done == cfg_.updates) {
            std::string rows;
            for (const char* split_name : {"train", "test_1_10"}) {
                const DatasetSplit* split = ds_.split(split_name);
                if (!split) continue;
                EvalRow row = evaluate_split(*split, cfg_.eval_probe);
                rows += tsv_row({std::to_string(done), row.split,
                                 format_double(row.success_rate, 4),
                                 format_double(window.policy / std::max(1, window_n), 6),
                                 format_double(window.value / std::max(1, window_n), 6),
                                 format_double(window.entropy / std::max(1, window_n), 6)});
            }
            std::ofstream(curve_path, std::ios::app) << rows;
            window = LossParts{};
            window_n = 0;
        }
        if (done % cfg_.checkpoint_every == 0 || done == cfg_.updates) {
            const fs::path dir = fs::path(cfg_.out_dir) / ("checkpoint_" + std::to_string(done));
            fs::create_directories(dir);
            save_registry(*bundle_.registry, (dir / "model.bin").string());
            save_registry(opt_->state(), (dir / "rms.bin").string());
            KeyValueMap st;
            st["update"] = std::to_string(done);
            write_text_file((dir / "state.meta").string(), format_key_values(st));
        }
    }
}

}  // namespace ltlforge
