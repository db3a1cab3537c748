#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "leakscope/oracle.hpp"

using namespace leakscope;

TEST_CASE("enumerate: simple joints and evidence") {
    auto j = oracle::enumerate(lang::parse("x ~ bernoulli(0.25);"));
    CHECK(j.evidence == 1.0);
    CHECK(j.pmf.at({1.0}) == doctest::Approx(0.25));
    CHECK(j.pmf.at({0.0}) == doctest::Approx(0.75));

    auto c = oracle::enumerate(lang::parse("x ~ bernoulli(0.5); observe(x == 1);"));
    CHECK(c.evidence == doctest::Approx(0.5));
    CHECK(c.pmf.at({1.0}) == doctest::Approx(1.0));
    CHECK(c.pmf.size() == 1);

    CHECK_THROWS_AS(oracle::enumerate(lang::parse("x ~ gauss(0, 1);")), lang::Error);
    CHECK_THROWS_AS(oracle::enumerate(lang::parse("x ~ bernoulli(1); observe(x == 0);")),
                    lang::Error);
}

TEST_CASE("pmf probabilities are a distribution after conditioning") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        oracle::JointPmf j;
        try {
            j = oracle::enumerate(testutil::fuzz_discrete_program(rng));
        } catch (const lang::Error&) {
            continue;
        }
        double total = 0.0;
        for (const auto& [_, p] : j.pmf) total += p;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(j.evidence >= 0.0);
        CHECK(j.evidence <= 1.0 + 1e-12);
    }
}

TEST_CASE("pmf_metrics: closed-form checkpoints and inequalities") {
    // uniform over 4 values -> 2 bits
    auto u = oracle::enumerate(
        lang::parse("x ~ categorical(0: 0.25, 1: 0.25, 2: 0.25, 3: 0.25); y := 0;"));
    CHECK(oracle::pmf_metrics(u, "x", "y").H == doctest::Approx(2.0));
    // independent product -> MI = 0
    auto ind = oracle::enumerate(lang::parse("x ~ bernoulli(0.3); y ~ bernoulli(0.8);"));
    auto mi = oracle::pmf_metrics(ind, "x", "y");
    CHECK(mi.MI == doctest::Approx(0.0).epsilon(1e-12));
    // general inequalities on fuzzed programs
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 20; ++trial) {
        oracle::JointPmf j;
        try {
            j = oracle::enumerate(testutil::fuzz_discrete_program(rng));
        } catch (const lang::Error&) {
            continue;
        }
        auto m = oracle::pmf_metrics(j, "x0", "x1");
        auto hy = oracle::pmf_metrics(j, "x1", "x0").H;
        CHECK(m.MI >= -1e-12);
        CHECK(m.MI <= std::min(m.H, hy) + 1e-12);
        CHECK(m.H_cond >= -1e-12);
    }
    // KL support violation
    auto sup = oracle::enumerate(lang::parse("x ~ categorical(0: 0.5, 2: 0.5); y ~ bernoulli(0.5);"));
    CHECK(std::isinf(oracle::pmf_metrics(sup, "x", "y").KL));
}

TEST_CASE("mc_run is deterministic and matches the law of large numbers") {
    auto p = lang::parse("x ~ gauss(10, 1);");
    auto r1 = oracle::mc_run(p, 100000, 42);
    auto r2 = oracle::mc_run(p, 100000, 42);
    CHECK(r1.samples == r2.samples);  // bit-identical for equal seeds
    auto r3 = oracle::mc_run(p, 1000, 43);
    CHECK(r3.samples != r1.samples);

    double se = 1.0 / std::sqrt(100000.0);
    CHECK(std::abs(r1.mean("x") - 10.0) < 4 * se);
    CHECK(std::abs(r1.variance("x") - 1.0) < 4 * std::sqrt(2.0) * se);
}

TEST_CASE("mc_run frequencies agree with enumeration") {
    auto p = testutil::corpus_program("alg1.ppl");
    lang::ParamEnv env{{"p", 0.5}, {"eps", 1.0}};
    auto j = oracle::enumerate(p, env);
    auto r = oracle::mc_run(p, 200000, 7, env);
    int oi = j.index("o_1");
    double p1 = 0.0;
    for (const auto& [key, prob] : j.pmf)
        if (key[static_cast<size_t>(oi)] == 1.0) p1 += prob;
    double freq = r.mean("o_1");
    CHECK(std::abs(freq - p1) < 4 * std::sqrt(p1 * (1 - p1) / 200000.0));
}

TEST_CASE("mc_run rejects measure-zero and hopeless conditioning") {
    CHECK_THROWS_AS(oracle::mc_run(lang::parse("x ~ gauss(0, 1); observe(x == 0);"), 100, 1),
                    lang::Error);
    // P(x > 6) for a standard normal is ~1e-9: acceptance guard trips
    CHECK_THROWS_AS(oracle::mc_run(lang::parse("x ~ gauss(0, 1); observe(x > 6);"), 100, 1),
                    lang::Error);
    // inequality observations on continuous variables are fine
    auto r = oracle::mc_run(lang::parse("x ~ gauss(0, 1); observe(x > 0);"), 1000, 1);
    CHECK(r.acceptance == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("csv dump starts with the variable header") {
    auto r = oracle::mc_run(lang::parse("a ~ bernoulli(0.5); b := a + 1;"), 3, 5);
    auto csv = oracle::to_csv(r);
    CHECK(csv.rfind("a,b\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("histogram entropy estimator approximates differential entropy") {
    auto r = oracle::mc_run(lang::parse("x ~ gauss(0, 1);"), 200000, 99);
    double h = oracle::histogram_entropy(r.column("x"));
    double truth = 0.5 * std::log(2 * M_PI * std::exp(1.0));
    CHECK(std::abs(h - truth) < 0.05);
    auto boot = oracle::histogram_entropy_bootstrap(r.column("x"), 2000, 20, 3);
    CHECK(boot.estimate == doctest::Approx(h));
    CHECK(boot.se > 0.0);
    CHECK(boot.se < 0.05);
}
