#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "leakscope/ast.hpp"
#include "leakscope/gm.hpp"
#include "leakscope/parser.hpp"

namespace testutil {

inline std::string corpus_text(const std::string& name) {
    std::ifstream in(std::string(LEAKSCOPE_CORPUS_DIR) + "/" + name);
    if (!in) throw std::runtime_error("missing corpus file: " + name);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline leakscope::lang::Program corpus_program(const std::string& name) {
    return leakscope::lang::parse(corpus_text(name));
}

// Random discrete program: k Bernoulli samples followed by a shuffle of
// negation assignments, discrete if-branches, and satisfiable observes.
inline leakscope::lang::Program fuzz_discrete_program(std::mt19937_64& rng) {
    using namespace leakscope::lang;
    std::uniform_int_distribution<int> nvars(2, 6), coin(0, 1);
    std::uniform_real_distribution<double> prob(0.15, 0.85);
    int k = nvars(rng);
    auto var_name = [](int i) { return "x" + std::to_string(i); };

    std::vector<StmtPtr> stmts;
    for (int i = 0; i < k; ++i) {
        auto d = std::make_shared<Dist>();
        d->kind = Dist::Kind::Bernoulli;
        d->p = Expr::num(prob(rng));
        stmts.push_back(Stmt::sample(var_name(i), d));
    }
    std::uniform_int_distribution<int> pick(0, k - 1);
    auto eq = [&](int i, int v) {
        return Pred::cmp(Pred::CmpOp::Eq, Expr::var(var_name(i)), Expr::num(v));
    };
    int n_ifs = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int i = 0; i < n_ifs; ++i) {
        int guard = pick(rng), tgt = pick(rng);
        // tgt := 1 - tgt in one branch
        StmtPtr flip = Stmt::assign(
            var_name(tgt), Expr::binary(Expr::Kind::Sub, Expr::num(1), Expr::var(var_name(tgt))));
        stmts.push_back(coin(rng) ? Stmt::branch(eq(guard, 1), flip, Stmt::skip())
                                  : Stmt::branch(eq(guard, 0), Stmt::skip(), flip));
    }
    int n_obs = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int i = 0; i < n_obs; ++i) stmts.push_back(Stmt::observe(eq(pick(rng), coin(rng))));

    Program p;
    p.body = stmts.back();
    for (int i = static_cast<int>(stmts.size()) - 2; i >= 0; --i)
        p.body = Stmt::seq(stmts[static_cast<size_t>(i)], p.body);
    return p;
}

// Random 1-dimensional Gaussian mixture with <= max_comps components,
// normalized weights, means in [-4, 4], variances in [0.05, 3].
inline leakscope::gm::GaussianMixture fuzz_gm1(std::mt19937_64& rng, int max_comps = 6) {
    leakscope::gm::GaussianMixture g;
    g.varnames = {"v"};
    int n = std::uniform_int_distribution<int>(1, max_comps)(rng);
    std::uniform_real_distribution<double> w(0.1, 1.0), mu(-4.0, 4.0), s2(0.05, 3.0);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        leakscope::gm::Component c;
        c.w = w(rng);
        total += c.w;
        c.mean = Eigen::VectorXd::Constant(1, mu(rng));
        c.cov = Eigen::MatrixXd::Constant(1, 1, s2(rng));
        g.components.push_back(std::move(c));
    }
    for (auto& c : g.components) c.w /= total;
    return g;
}

}  // namespace testutil
