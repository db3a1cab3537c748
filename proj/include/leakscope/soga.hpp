#pragma once

#include <map>
#include <string>
#include <vector>

#include "leakscope/ast.hpp"
#include "leakscope/gm.hpp"

namespace leakscope::soga {

using gm::GaussianMixture;
using lang::Dist;
using lang::ParamEnv;
using lang::PredPtr;
using lang::Program;
using lang::StmtPtr;

// Moment matching of a sampled distribution: finite-discrete distributions
// become exact Dirac mixtures, Gaussian / mixture literals pass through
// unaltered. Distribution arguments must be constant.
struct MatchedComponent {
    double w, mean, var;
};
std::vector<MatchedComponent> moment_match(const Dist& d);

// target := c0 + sum coeffs[v] * v (affine map per component).
GaussianMixture assign_linear(const GaussianMixture& g, const std::string& target,
                              const std::map<std::string, double>& coeffs, double c0);

// target := vj * vk, moment-matched per component (Gaussian product moments).
GaussianMixture assign_product(const GaussianMixture& g, const std::string& target,
                               const std::string& vj, const std::string& vk);

// target ~ d: marginalize the target coordinate out, then product-distribute
// the matched mixture across components.
GaussianMixture sample(const GaussianMixture& g, const std::string& target, const Dist& d);

// observe(pred) where pred touches only Dirac coordinates: drop failing
// components. Mass is not renormalized; the surviving fraction is the
// evidence factor.
GaussianMixture observe_discrete(const GaussianMixture& g, const PredPtr& pred);

// observe(target == v): exact conditioning. Dirac target coordinates are
// kept/dropped by value; nondegenerate ones are conditioned with weight
// scaled by the likelihood phi(v; mean_t, var_t).
GaussianMixture observe_eq(const GaussianMixture& g, const std::string& target, double v);

struct Result {
    GaussianMixture state;  // normalized
    double evidence = 1.0;  // mass surviving all observations (a likelihood
                            // once a continuous equality is observed)
};

// Forward mixture semantics over the whole program (unrolled and
// parameter-resolved internally); initial state is the Dirac delta at zero.
Result run_soga(const Program& p, const ParamEnv& overrides);

// As above but starting from an explicit statement and (unnormalized) state.
GaussianMixture run_stmt(const StmtPtr& s, GaussianMixture g);

}  // namespace leakscope::soga
