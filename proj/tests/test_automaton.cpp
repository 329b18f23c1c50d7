#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "ltlforge/automaton.hpp"

using namespace ltlforge;

namespace {

std::vector<Letter> trace_of(std::initializer_list<int> props) {
    std::vector<Letter> t;
    for (int p : props) t.push_back({1u << p});
    return t;
}

// All traces of length <= max_len over the model's letters.
void for_all_traces(const AlphabetModel& m, int max_len,
                    const std::function<void(const std::vector<Letter>&)>& fn) {
    std::vector<Letter> letters = m.all_letters();
    std::vector<Letter> trace;
    std::function<void(int)> rec = [&](int remaining) {
        fn(trace);
        if (remaining == 0) return;
        for (const Letter& l : letters) {
            trace.push_back(l);
            rec(remaining - 1);
            trace.pop_back();
        }
    };
    rec(max_len);
}

}  // namespace

TEST_CASE("compile: single atom over one-hot {a,b}") {
    Alphabet ab = Alphabet::symbols(2);
    AlphabetModel m = AlphabetModel::one_hot(ab);
    Dfa d = compile(parse_formula("a", ab), m);
    CHECK(d.num_states() == 3);
    CHECK(d.accepts(trace_of({0})));
    CHECK(!d.accepts(trace_of({1})));
    CHECK(!d.accepts({}));  // empty trace rejected
    CHECK(d.dead().has_value());
}

TEST_CASE("compile: tautology accepts every non-empty trace") {
    Alphabet ab = Alphabet::symbols(2);
    AlphabetModel m = AlphabetModel::one_hot(ab);
    Dfa d = compile(parse_formula("a | (! a)", ab), m);
    CHECK(d.num_states() == 2);
    CHECK(!d.dead().has_value());
    CHECK(!d.accepts({}));
    for_all_traces(m, 4, [&](const std::vector<Letter>& t) {
        if (!t.empty()) CHECK(d.accepts(t));
    });
}

TEST_CASE("brute force oracle basics") {
    Alphabet ab = Alphabet::symbols(2);
    Formula ga = parse_formula("G a", ab);
    CHECK(brute_force_accepts(ga, trace_of({0, 0, 0})));
    CHECK(!brute_force_accepts(ga, trace_of({0, 1, 0})));

    Formula aub = parse_formula("a U b", ab);
    CHECK(brute_force_accepts(aub, trace_of({0, 0, 1})));
    CHECK(!brute_force_accepts(aub, trace_of({0, 0, 0})));
}

TEST_CASE("strong next at the last position") {
    Alphabet ab = Alphabet::symbols(2);
    AlphabetModel m = AlphabetModel::one_hot(ab);

    // X (a | !a) is false on length-1 traces: there is no next position.
    Dfa d1 = compile(parse_formula("X (a | (! a))", ab), m);
    CHECK(!d1.accepts(trace_of({0})));
    CHECK(d1.accepts(trace_of({0, 1})));
    CHECK(!brute_force_accepts(parse_formula("X (a | (! a))", ab), trace_of({0})));

    // ! (X a) is true on length-1 traces.
    Dfa d2 = compile(parse_formula("! (X a)", ab), m);
    CHECK(d2.accepts(trace_of({1})));
    CHECK(!d2.accepts(trace_of({1, 0})));
    CHECK(d2.accepts(trace_of({1, 1})));

    // X (G b): needs a next position from which b always holds.
    Dfa d3 = compile(parse_formula("X (G b)", ab), m);
    CHECK(!d3.accepts(trace_of({0})));
    CHECK(d3.accepts(trace_of({0, 1})));
    CHECK(d3.accepts(trace_of({0, 1, 1})));
    CHECK(!d3.accepts(trace_of({0, 1, 0})));
}

TEST_CASE("oracle equivalence on random formulas (subset of acceptance #1)") {
    Alphabet abc = Alphabet::symbols(3);
    AlphabetModel m = AlphabetModel::one_hot(abc);
    Rng rng = make_rng(101);
    ElementPrior prior = ElementPrior::uniform(1, 6);
    for (int i = 0; i < 120; ++i) {
        Formula f = sample_formula(rng, prior, abc);
        Dfa d = compile(f, m);
        for_all_traces(m, 4, [&](const std::vector<Letter>& t) {
            CHECK(d.accepts(t) == brute_force_accepts(f, t));
        });
    }
}

TEST_CASE("oracle equivalence under the free model") {
    Alphabet ab = Alphabet::symbols(2);
    AlphabetModel m = AlphabetModel::free(ab);
    Rng rng = make_rng(102);
    ElementPrior prior = ElementPrior::uniform(1, 6);
    for (int i = 0; i < 60; ++i) {
        Formula f = sample_formula(rng, prior, ab);
        Dfa d = compile(f, m);
        for_all_traces(m, 3, [&](const std::vector<Letter>& t) {
            CHECK(d.accepts(t) == brute_force_accepts(f, t));
        });
    }
}

TEST_CASE("monitor: progression, acceptance, violation") {
    Alphabet ab = Alphabet::symbols(2);
    AlphabetModel m = AlphabetModel::one_hot(ab);

    Dfa fb = compile(parse_formula("F b", ab), m);
    MonitorState ms = MonitorState::initial(fb);
    ms = monitor_step(ms, fb, Letter{1u << 0});
    CHECK(ms.status == MonitorStatus::Progressing);
    CHECK(ms.steps_in_state == 1);
    ms = monitor_step(ms, fb, Letter{1u << 0});
    CHECK(ms.status == MonitorStatus::Progressing);
    CHECK(ms.steps_in_state == 2);
    ms = monitor_step(ms, fb, Letter{1u << 1});
    CHECK(ms.status == MonitorStatus::Accepting);
    CHECK(ms.steps_in_state == 1);

    Dfa ga = compile(parse_formula("G a", ab), m);
    MonitorState mg = MonitorState::initial(ga);
    mg = monitor_step(mg, ga, Letter{1u << 1});
    CHECK(mg.status == MonitorStatus::Violated);
    CHECK_THROWS_AS(monitor_step(mg, ga, Letter{1u << 0}), std::logic_error);
}

TEST_CASE("monitor agreement with acceptance") {
    Alphabet abc = Alphabet::symbols(3);
    AlphabetModel m = AlphabetModel::one_hot(abc);
    Rng rng = make_rng(103);
    ElementPrior prior = ElementPrior::uniform(1, 7);
    std::vector<Letter> letters = m.all_letters();
    for (int i = 0; i < 100; ++i) {
        Formula f = sample_formula(rng, prior, abc);
        Dfa d = compile(f, m);
        std::vector<Letter> trace;
        MonitorState ms = MonitorState::initial(d);
        bool violated = false;
        for (int t = 0; t < 6; ++t) {
            Letter l = letters[std::uniform_int_distribution<size_t>(0, letters.size() - 1)(rng)];
            trace.push_back(l);
            if (!violated) {
                ms = monitor_step(ms, d, l);
                violated = ms.status == MonitorStatus::Violated;
            }
        }
        if (!violated)
            CHECK((ms.status == MonitorStatus::Accepting) == d.accepts(trace));
        else
            CHECK(!d.accepts(trace));
    }
}

TEST_CASE("counting: closed forms at n=15 over 5 one-hot letters") {
    Alphabet a5 = Alphabet::symbols(5);
    AlphabetModel m = AlphabetModel::one_hot(a5);

    CountResult taut = count_accepted(compile(parse_formula("a | (! a)", a5), m), 15);
    CHECK(taut.accepted == BigInt("30517578125"));
    CHECK(taut.total == BigInt("30517578125"));

    CountResult fa = count_accepted(compile(parse_formula("F a", a5), m), 15);
    CHECK(fa.accepted == BigInt("29443836301"));  // 5^15 - 4^15

    CountResult a0 = count_accepted(compile(parse_formula("a", a5), m), 15);
    CHECK(a0.accepted == BigInt("6103515625"));  // 5^14
    CHECK(a0.accepted * 5 == a0.total);
}

TEST_CASE("counting consistency: per-step totals equal letters^t") {
    Alphabet abc = Alphabet::symbols(3);
    Rng rng = make_rng(104);
    ElementPrior prior = ElementPrior::uniform(1, 8);
    for (auto model : {AlphabetModel::one_hot(abc), AlphabetModel::free(abc)}) {
        for (int i = 0; i < 40; ++i) {
            Formula f = sample_formula(rng, prior, abc);
            Dfa d = compile(f, model);
            CountResult r = count_accepted(d, 6);
            BigInt expect = 1;
            for (int t = 0; t <= 6; ++t) {
                BigInt sum = 0;
                for (const BigInt& c : r.table.counts[static_cast<size_t>(t)]) sum += c;
                CHECK(sum == expect);
                expect *= model.letter_count();
            }
        }
    }
}

TEST_CASE("counting matches brute-force enumeration at small n") {
    Alphabet abc = Alphabet::symbols(3);
    AlphabetModel m = AlphabetModel::one_hot(abc);
    Rng rng = make_rng(105);
    ElementPrior prior = ElementPrior::uniform(1, 6);
    for (int i = 0; i < 40; ++i) {
        Formula f = sample_formula(rng, prior, abc);
        Dfa d = compile(f, m);
        for (int n = 0; n <= 5; ++n) {
            CountResult r = count_accepted(d, n);
            long manual = 0;
            for_all_traces(m, n, [&](const std::vector<Letter>& t) {
                if (static_cast<int>(t.size()) == n && brute_force_accepts(f, t)) ++manual;
            });
            CHECK(r.accepted == manual);
        }
    }
}

TEST_CASE("sampling: unique accepted string") {
    Alphabet ab = Alphabet::symbols(2);
    AlphabetModel m = AlphabetModel::one_hot(ab);
    Dfa d = compile(parse_formula("G a", ab), m);
    Rng rng = make_rng(106);
    auto samples = sample_accepted(rng, d, 3, 5);
    REQUIRE(samples.size() == 5);
    for (const auto& t : samples) {
        REQUIRE(t.size() == 3);
        for (const Letter& l : t) CHECK(l.bits == 1u);
    }
}

TEST_CASE("sampling: every sample satisfies the oracle") {
    Alphabet abc = Alphabet::symbols(3);
    Rng rng = make_rng(107);
    ElementPrior prior = ElementPrior::uniform(1, 7);
    int tested = 0;
    while (tested < 25) {
        Formula f = sample_formula(rng, prior, abc);
        for (auto model : {AlphabetModel::one_hot(abc), AlphabetModel::free(abc)}) {
            Dfa d = compile(f, model);
            CountResult r = count_accepted(d, 5);
            if (r.accepted == 0) continue;
            for (const auto& t : sample_accepted(rng, d, 5, 20)) {
                CHECK(brute_force_accepts(f, t));
                for (const Letter& l : t) CHECK(model.valid(l));
            }
            ++tested;
        }
    }
}

TEST_CASE("sampling: uniform over the accepted set (chi-square)") {
    Alphabet ab = Alphabet::symbols(2);
    AlphabetModel m = AlphabetModel::one_hot(ab);
    Dfa d = compile(parse_formula("F a", ab), m);
    CountResult r = count_accepted(d, 2);
    REQUIRE(r.accepted == 3);  // aa, ab, ba
    Rng rng = make_rng(108);
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> freq;
    const int k = 3000;
    for (const auto& t : sample_accepted(rng, d, 2, k)) ++freq[{t[0].bits, t[1].bits}];
    REQUIRE(freq.size() == 3);
    double chi2 = 0.0;
    const double expect = k / 3.0;
    for (const auto& [key, count] : freq)
        chi2 += (count - expect) * (count - expect) / expect;
    CHECK(chi2 < 9.210);  // df=2 critical value at p=0.01
}

TEST_CASE("sampling: error when nothing is accepted") {
    Alphabet ab = Alphabet::symbols(2);
    AlphabetModel m = AlphabetModel::one_hot(ab);
    Dfa d = compile(parse_formula("a & b", ab), m);  // one-hot: unsatisfiable
    Rng rng = make_rng(109);
    CHECK_THROWS_AS(sample_accepted(rng, d, 3, 1), std::runtime_error);
}

TEST_CASE("totality: class letter counts cover the alphabet") {
    Alphabet abc = Alphabet::symbols(3);
    Rng rng = make_rng(110);
    ElementPrior prior = ElementPrior::uniform(1, 8);
    for (auto model : {AlphabetModel::one_hot(abc), AlphabetModel::free(abc)}) {
        for (int i = 0; i < 30; ++i) {
            Formula f = sample_formula(rng, prior, abc);
            Dfa d = compile(f, model);
            for (int q = 0; q < d.num_states(); ++q) {
                BigInt covered = d.class_letter_count(q) * d.class_count(q);
                CHECK(covered == model.letter_count());
                // every concrete letter maps to exactly one in-range class
                for (const Letter& l : model.all_letters()) {
                    int cls = d.class_of(q, l);
                    CHECK(cls >= 0);
                    CHECK(cls < d.class_count(q));
                }
            }
        }
    }
}

TEST_CASE("state cap raises a resource error") {
    // Nested untils blow up the residual set; a tiny cap must trigger.
    Alphabet abc = Alphabet::symbols(3);
    AlphabetModel m = AlphabetModel::one_hot(abc);
    Formula f = parse_formula("(a U (b U (c U (a U (b U c))))) | (X (a U (b U c)))", abc);
    CHECK_THROWS_AS(compile(f, m, 3), StateCapError);
}

TEST_CASE("normalization is idempotent and sound") {
    Alphabet abc = Alphabet::symbols(3);
    AlphabetModel m = AlphabetModel::one_hot(abc);
    Rng rng = make_rng(111);
    ElementPrior prior = ElementPrior::uniform(1, 8);
    for (int i = 0; i < 100; ++i) {
        Formula f = sample_formula(rng, prior, abc);
        Formula n1 = normalize_formula(f);
        CHECK(normalize_formula(n1) == n1);
        for_all_traces(m, 3, [&](const std::vector<Letter>& t) {
            CHECK(brute_force_accepts(f, t) == brute_force_accepts(n1, t));
        });
    }
}

TEST_CASE("dump golden: F a over one-hot {a,b}") {
    Alphabet ab = Alphabet::symbols(2);
    AlphabetModel m = AlphabetModel::one_hot(ab);
    Dfa d = compile(parse_formula("F a", ab), m);
    CHECK(d.dump(ab) ==
          "states: 3\n"
          "initial: 0\n"
          "accepting: 1\n"
          "0 [F a]\n"
          "  --[a]--> 1\n"
          "  --[b]--> 2\n"
          "1 [true]\n"
          "  --[a | b]--> 1\n"
          "2 [F a]\n"
          "  --[a]--> 1\n"
          "  --[b]--> 2\n");
}
