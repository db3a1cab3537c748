#pragma once

#include <string>
#include <vector>

#include "leakscope/ast.hpp"
#include "leakscope/expectation.hpp"

namespace leakscope::wpe {

using lang::ParamEnv;
using lang::Program;
using lang::StmtPtr;
using symbolic::ExpPtr;

// Weakest pre-expectation transformer. Statements must be loop-free and
// parameter-free (see unroll / resolve_params); only finite-support
// distributions are admitted — continuous sampling throws.
ExpPtr wp(const StmtPtr& s, const ExpPtr& x);

// Pair of expectations whose forced ratio yields an expected value
// conditioned on all observations succeeding.
struct CondExpectation {
    ExpPtr num, den;
    ExpPtr forced() const;  // num / den
};

CondExpectation cwp(const StmtPtr& s, const CondExpectation& c);

struct MetricDiag {
    bool zero_over_zero = false;
    std::vector<double> kl_support_violations;  // values with p>0, q=0
};

// Discrete leakage metrics, evaluated at the all-zeros initial state.
// `log_base` scales the result (2 for bits — the default — or e for nats).
// The program is unrolled and parameter-resolved internally.
double entropy(const Program& p, const ParamEnv& overrides, const std::string& x,
               double log_base = 2.0, MetricDiag* diag = nullptr);

// H(x | y): expected surprisal of x given the value of y.
double cond_entropy(const Program& p, const ParamEnv& overrides, const std::string& x,
                    const std::string& y, double log_base = 2.0, MetricDiag* diag = nullptr);

// KL(x || y) between the terminal marginals of two variables.
double kl(const Program& p, const ParamEnv& overrides, const std::string& x,
          const std::string& y, double log_base = 2.0, MetricDiag* diag = nullptr);

// I(x; y) = H(x) - H(x | y).
double mutual_information(const Program& p, const ParamEnv& overrides, const std::string& x,
                          const std::string& y, double log_base = 2.0,
                          MetricDiag* diag = nullptr);

}  // namespace leakscope::wpe
