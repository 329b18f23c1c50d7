#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "ltlforge/baselines.hpp"
#include "ltlforge/compnet.hpp"

using namespace ltlforge;

namespace {

ModelConfig small_tree_cfg(int feat, int actions, bool ff = false) {
    ModelConfig mc;
    mc.hidden = 10;
    mc.msg = 5;
    mc.layers = 1;
    mc.feat = feat;
    mc.actions = actions;
    mc.feed_forward = ff;
    mc.init_seed = 77;
    return mc;
}

std::vector<TrajectoryStep> random_trajectory(Rng& rng, int T, int obs_dim, int actions) {
    std::vector<TrajectoryStep> steps;
    std::uniform_real_distribution<double> real(-1.0, 1.0);
    for (int t = 0; t < T; ++t) {
        TrajectoryStep s;
        s.observation = Vec::NullaryExpr(obs_dim, [&](Eigen::Index) { return real(rng); });
        s.action = std::uniform_int_distribution<int>(0, actions - 1)(rng);
        s.reward = real(rng);
        s.value = real(rng);
        steps.push_back(std::move(s));
    }
    return steps;
}

// Worst relative error between analytic gradients of the full A2C loss and
// central finite differences, over every parameter scalar.
double fd_worst_error(PolicyModel& model, const std::vector<TrajectoryStep>& steps,
                      const A2cHyper& hyper) {
    Registry& reg = model.registry();
    Registry grads = reg.clone_zeroed();
    loss_and_gradients(model, steps, hyper, grads);

    auto entries = reg.entries();
    auto gentries = grads.entries();
    const double h = 1e-4;
    double worst = 0.0;
    for (size_t e = 0; e < entries.size(); ++e) {
        Mat& m = *entries[e].second;
        const Mat& g = *gentries[e].second;
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double orig = m.data()[i];
            Registry scratch = reg.clone_zeroed();
            m.data()[i] = orig + h;
            const double lp = loss_and_gradients(model, steps, hyper, scratch).total;
            m.data()[i] = orig - h;
            const double lm = loss_and_gradients(model, steps, hyper, scratch).total;
            m.data()[i] = orig;
            const double numeric = (lp - lm) / (2.0 * h);
            const double analytic = g.data()[i];
            const double denom = std::max({1e-6, std::abs(numeric), std::abs(analytic)});
            worst = std::max(worst, std::abs(numeric - analytic) / denom);
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("assemble: tree mirrors the formula and shares parameters") {
    Alphabet craft = Alphabet::craft();
    Registry reg(small_tree_cfg(4, 3));
    TreeModel m(&reg, craft);
    m.bind(parse_formula("(G gem) & (F factory)", craft));
    CHECK(m.node_count() == 5);
    CHECK(reg.has_token("&"));
    CHECK(reg.has_token("G"));
    CHECK(reg.has_token("F"));
    CHECK(reg.has_token("gem"));
    CHECK(reg.has_token("factory"));

    // a second assembly containing '&' reads the same storage: perturbing the
    // registry changes both models' outputs identically
    TreeModel m2(&reg, craft);
    m2.bind(parse_formula("gem & factory", craft));
    Vec obs = Vec::LinSpaced(4, 0.1, 0.4);
    Vec l1 = m2.forward(obs).logits;
    reg.ensure_token("&").cell[0].wz.array() += 0.25;
    m2.reset();
    Vec l2 = m2.forward(obs).logits;
    CHECK((l1 - l2).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("assemble: single-atom formula is a one-node assembly") {
    Alphabet ab = Alphabet::symbols(2);
    Registry reg(small_tree_cfg(3, 2));
    TreeModel m(&reg, ab);
    m.bind(parse_formula("a", ab));
    CHECK(m.node_count() == 1);
    Vec obs = Vec::Zero(3);
    StepOutput so = m.forward(obs);
    CHECK(so.logits.size() == 2);
}

TEST_CASE("forward: zero parameters give uniform logits and bias value") {
    Alphabet ab = Alphabet::symbols(3);
    Registry reg(small_tree_cfg(4, 3));
    reg.visit([](const std::string&, Mat& m) { m.setZero(); });
    reg.b_critic(0, 0) = 0.37;
    TreeModel m(&reg, ab);
    m.bind(parse_formula("(G a) & (F b)", ab));
    Vec obs = Vec::LinSpaced(4, -1.0, 1.0);
    StepOutput so = m.forward(obs);
    CHECK((so.logits.array() - so.logits[0]).abs().maxCoeff() == doctest::Approx(0.0));
    CHECK(so.value == doctest::Approx(0.37));
    const Vec p = detail::softmax(so.logits);
    CHECK(p[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("forward: child order matters for binary nodes") {
    Alphabet ab = Alphabet::symbols(2);
    Registry reg(small_tree_cfg(4, 2));
    TreeModel m(&reg, ab);
    Vec obs = Vec::LinSpaced(4, 0.2, 0.8);
    m.bind(parse_formula("(G a) & (F b)", ab));
    Vec la = m.forward(obs).logits;
    m.bind(parse_formula("(F b) & (G a)", ab));
    Vec lb = m.forward(obs).logits;
    CHECK((la - lb).cwiseAbs().maxCoeff() > 1e-9);
}

TEST_CASE("forward: deterministic given parameters, states and observation") {
    Alphabet ab = Alphabet::symbols(3);
    Registry reg(small_tree_cfg(4, 3));
    TreeModel m(&reg, ab);
    Formula f = parse_formula("a U (X b)", ab);
    Rng rng = make_rng(4);
    std::vector<Vec> seq;
    for (int t = 0; t < 4; ++t)
        seq.push_back(Vec::NullaryExpr(4, [&](Eigen::Index) {
            return std::uniform_real_distribution<double>(-1, 1)(rng);
        }));
    m.bind(f);
    std::vector<Vec> out1;
    for (const Vec& o : seq) out1.push_back(m.forward(o).logits);
    m.reset();
    for (size_t t = 0; t < seq.size(); ++t)
        CHECK((m.forward(seq[t]).logits - out1[t]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward gradients: sum of logits matches finite differences") {
    Alphabet abc = Alphabet::symbols(3);
    Registry reg(small_tree_cfg(8, 3));
    TreeModel m(&reg, abc);
    m.bind(parse_formula("(G a) & (F b)", abc));  // 5 nodes, 8-dim features
    Rng rng = make_rng(5);
    std::vector<Vec> seq;
    for (int t = 0; t < 3; ++t)
        seq.push_back(Vec::NullaryExpr(8, [&](Eigen::Index) {
            return std::uniform_real_distribution<double>(-1, 1)(rng);
        }));

    auto total_logits = [&]() {
        m.reset();
        double acc = 0.0;
        for (const Vec& o : seq) acc += m.forward(o).logits.sum();
        return acc;
    };

    // analytic: backward with d(logits)=1, d(value)=0 per step
    Registry grads = reg.clone_zeroed();
    m.reset();
    std::vector<StepGrad> sg;
    for (const Vec& o : seq) {
        m.forward(o);
        StepGrad s;
        s.dlogits = Vec::Ones(3);
        s.dvalue = 0.0;
        sg.push_back(std::move(s));
    }
    m.backward(sg, grads);

    auto entries = reg.entries();
    auto gentries = grads.entries();
    const double h = 1e-4;
    double worst = 0.0;
    for (size_t e = 0; e < entries.size(); ++e) {
        Mat& mat = *entries[e].second;
        const Mat& g = *gentries[e].second;
        for (Eigen::Index i = 0; i < mat.size(); ++i) {
            const double orig = mat.data()[i];
            mat.data()[i] = orig + h;
            const double lp = total_logits();
            mat.data()[i] = orig - h;
            const double lm = total_logits();
            mat.data()[i] = orig;
            const double numeric = (lp - lm) / (2.0 * h);
            const double denom = std::max({1e-6, std::abs(numeric), std::abs(g.data()[i])});
            worst = std::max(worst, std::abs(numeric - g.data()[i]) / denom);
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("loss: value term vanishes when the critic matches the return") {
    Alphabet ab = Alphabet::symbols(2);
    Registry reg(small_tree_cfg(3, 2));
    reg.visit([](const std::string&, Mat& m) { m.setZero(); });
    reg.b_critic(0, 0) = 1.0;  // value output 1 everywhere
    TreeModel m(&reg, ab);
    m.bind(parse_formula("a", ab));

    std::vector<TrajectoryStep> steps(1);
    steps[0].observation = Vec::Zero(3);
    steps[0].action = 0;
    steps[0].reward = 1.0;
    steps[0].value = 1.0;
    Registry grads = reg.clone_zeroed();
    LossParts parts = loss_and_gradients(m, steps, {}, grads);
    CHECK(parts.value == doctest::Approx(0.0));
}

TEST_CASE("loss: entropy of the uniform policy is ln(actions)") {
    Alphabet a5 = Alphabet::symbols(5);
    ModelConfig mc = small_tree_cfg(6, 5);
    Registry reg(mc);
    reg.visit([](const std::string&, Mat& m) { m.setZero(); });
    TreeModel m(&reg, a5);
    m.bind(parse_formula("F a", a5));

    std::vector<TrajectoryStep> steps(3);
    for (auto& s : steps) {
        s.observation = Vec::Zero(6);
        s.action = 2;
        s.reward = 0.1;
        s.value = 0.0;
    }
    Registry grads = reg.clone_zeroed();
    LossParts parts = loss_and_gradients(m, steps, {}, grads);
    CHECK(parts.entropy == doctest::Approx(std::log(5.0)).epsilon(1e-9));
}

TEST_CASE("loss gradients: full A2C loss matches finite differences (tree)") {
    Alphabet abc = Alphabet::symbols(3);
    Rng rng = make_rng(6);
    for (const char* text : {"a U b", "(G a) & (F b)", "! (X (a | c))"}) {
        Registry reg(small_tree_cfg(8, 3));
        TreeModel m(&reg, abc);
        m.bind(parse_formula(text, abc));
        auto steps = random_trajectory(rng, 3, 8, 3);
        CHECK(fd_worst_error(m, steps, {}) < 1e-4);
    }
}

TEST_CASE("loss gradients: two stacked layers (craft wiring)") {
    Alphabet abc = Alphabet::symbols(3);
    ModelConfig mc = small_tree_cfg(6, 4);
    mc.layers = 2;
    Registry reg(mc);
    TreeModel m(&reg, abc);
    m.bind(parse_formula("a U (b & c)", abc));
    Rng rng = make_rng(7);
    auto steps = random_trajectory(rng, 3, 6, 4);
    CHECK(fd_worst_error(m, steps, {}) < 1e-4);
}

TEST_CASE("loss gradients: feed-forward cells (no_time)") {
    Alphabet abc = Alphabet::symbols(3);
    Registry reg(small_tree_cfg(6, 3, /*ff=*/true));
    TreeModel m(&reg, abc);
    m.bind(parse_formula("(G a) | (X b)", abc));
    Rng rng = make_rng(8);
    auto steps = random_trajectory(rng, 3, 6, 3);
    CHECK(fd_worst_error(m, steps, {}) < 1e-4);
}

TEST_CASE("loss gradients: convolutional extractor") {
    Alphabet craft = Alphabet::craft();
    ModelConfig mc;
    mc.hidden = 8;
    mc.msg = 4;
    mc.layers = 1;
    mc.actions = 3;
    mc.feat = 6;
    mc.conv_planes = 2;
    mc.crop = 5;
    mc.conv1 = 3;
    mc.conv2 = 4;
    mc.nonspatial = 3;
    mc.init_seed = 12;
    Registry reg(mc);
    TreeModel m(&reg, craft);
    m.bind(parse_formula("F gem", craft));
    Rng rng = make_rng(9);
    auto steps = random_trajectory(rng, 2, 2 * 25 + 3, 3);
    CHECK(fd_worst_error(m, steps, {}) < 1e-4);
}

TEST_CASE("loss gradients: monolithic trunk with formula encoder") {
    Alphabet abc = Alphabet::symbols(3);
    ModelConfig mc;
    mc.hidden = 8;
    mc.layers = 1;
    mc.actions = 3;
    mc.feat = 5;
    mc.embed = 6;
    mc.trunk_input = 5 + 6;
    mc.encoder_vocab = encoder_vocab_size(abc);
    mc.init_seed = 13;
    Registry reg(mc);
    MonolithicModel m(&reg, abc);
    m.bind(parse_formula("(G a) & (F b)", abc));
    CHECK(m.embedding().size() == 6);
    Rng rng = make_rng(10);
    auto steps = random_trajectory(rng, 3, 5, 3);
    CHECK(fd_worst_error(m, steps, {}) < 1e-4);
}

TEST_CASE("loss gradients: bootstrapped returns") {
    Alphabet abc = Alphabet::symbols(3);
    Registry reg(small_tree_cfg(6, 3));
    TreeModel m(&reg, abc);
    m.bind(parse_formula("F (a & (X b))", abc));
    Rng rng = make_rng(11);
    auto steps = random_trajectory(rng, 4, 6, 3);
    A2cHyper hyper;
    hyper.bootstrap_n = 2;
    CHECK(fd_worst_error(m, steps, hyper) < 1e-4);
}

TEST_CASE("weight sharing: updates through f1 reach assemblies of f2 but not f3") {
    Alphabet a5 = Alphabet::symbols(5);
    Registry reg(small_tree_cfg(6, 5));
    TreeModel m(&reg, a5);
    // pre-create all tokens so creation order cannot differ
    for (NodeKind k : {NodeKind::Not, NodeKind::Next, NodeKind::Eventually, NodeKind::Always,
                       NodeKind::And, NodeKind::Or, NodeKind::Until})
        reg.ensure_token(kind_name(k));
    for (int i = 0; i < 5; ++i) reg.ensure_token(a5.name(i));

    Formula f1 = parse_formula("G a", a5);   // tokens: G, a
    Formula f2 = parse_formula("F a", a5);   // shares: a
    Formula f3 = parse_formula("X b", a5);   // shares nothing with f1

    Rng rng = make_rng(12);
    std::vector<Vec> probe;
    for (int t = 0; t < 3; ++t)
        probe.push_back(Vec::NullaryExpr(6, [&](Eigen::Index) {
            return std::uniform_real_distribution<double>(-1, 1)(rng);
        }));

    auto hidden_trace = [&](const Formula& f) {
        m.bind(f);
        std::vector<Vec> hs;
        for (const Vec& o : probe) {
            m.forward(o);
            hs.push_back(m.hidden(0));
        }
        return hs;
    };
    auto f2_before = hidden_trace(f2);
    auto f3_before = hidden_trace(f3);
    Mat x_before = reg.ensure_token("X").cell[0].wz;
    Mat b_before = reg.ensure_token("b").cell[0].wz;

    // one gradient step driven only by f1
    m.bind(f1);
    auto steps = random_trajectory(rng, 3, 6, 5);
    Registry grads = reg.clone_zeroed();
    loss_and_gradients(m, steps, {}, grads);
    Registry::visit2(reg, grads,
                     [](const std::string&, Mat& p, Mat& g) { p -= 0.05 * g; });

    auto f2_after = hidden_trace(f2);
    auto f3_after = hidden_trace(f3);

    bool f2_changed = false;
    for (size_t t = 0; t < probe.size(); ++t)
        if ((f2_after[t] - f2_before[t]).cwiseAbs().maxCoeff() > 0.0) f2_changed = true;
    CHECK(f2_changed);

    for (size_t t = 0; t < probe.size(); ++t)
        CHECK((f3_after[t] - f3_before[t]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(reg.ensure_token("X").cell[0].wz == x_before);
    CHECK(reg.ensure_token("b").cell[0].wz == b_before);
}

TEST_CASE("shape stability across tree sizes") {
    Alphabet a5 = Alphabet::symbols(5);
    ModelConfig mc;
    mc.hidden = 64;
    mc.msg = 32;
    mc.layers = 1;
    mc.feat = 6;
    mc.actions = 5;
    Registry reg(mc);
    TreeModel m(&reg, a5);
    Rng rng = make_rng(13);
    ElementPrior prior = ElementPrior::uniform(18, 20);
    for (int i = 0; i < 5; ++i) {
        Formula f = sample_formula(rng, prior, a5);
        m.bind(f);
        CHECK(m.node_count() == f.node_count());
        StepOutput so = m.forward(Vec::Zero(6));
        CHECK(so.logits.size() == 5);
        CHECK(m.hidden(0).size() == 64);
    }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    Alphabet abc = Alphabet::symbols(3);
    ModelConfig mc = small_tree_cfg(4, 3);
    mc.trunk_input = 0;
    Registry reg(mc);
    TreeModel m(&reg, abc);
    m.bind(parse_formula("(G a) & (F (b U c))", abc));

    const std::string path =
        (std::filesystem::temp_directory_path() / "ltlforge_ckpt_test.bin").string();
    save_registry(reg, path);
    Registry loaded = load_registry(path);

    int compared = 0;
    Registry::visit2(reg, loaded, [&](const std::string&, Mat& a, Mat& b) {
        CHECK(a == b);  // bitwise equal doubles
        ++compared;
    });
    CHECK(compared > 10);
    std::filesystem::remove(path);
}

TEST_CASE("discounted returns: Monte-Carlo and bootstrapped") {
    std::vector<TrajectoryStep> steps(3);
    steps[0].reward = 1.0;
    steps[1].reward = 0.5;
    steps[2].reward = -1.0;
    steps[0].value = 10.0;
    steps[1].value = 20.0;
    steps[2].value = 30.0;

    A2cHyper mc;
    mc.gamma = 0.5;
    auto r = discounted_returns(steps, mc);
    CHECK(r[2] == doctest::Approx(-1.0));
    CHECK(r[1] == doctest::Approx(0.5 - 0.5));
    CHECK(r[0] == doctest::Approx(1.0 + 0.5 * 0.0));

    A2cHyper bs;
    bs.gamma = 0.5;
    bs.bootstrap_n = 1;
    auto rb = discounted_returns(steps, bs);
    CHECK(rb[0] == doctest::Approx(1.0 + 0.5 * 20.0));
    CHECK(rb[1] == doctest::Approx(0.5 + 0.5 * 30.0));
    CHECK(rb[2] == doctest::Approx(-1.0));
}
