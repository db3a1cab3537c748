#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "leakscope/ast.hpp"

namespace leakscope::oracle {

// Exact joint distribution over the program variables (in program order),
// conditioned on all observations succeeding. `evidence` is the probability
// that every observe passes.
struct JointPmf {
    std::vector<std::string> vars;
    std::map<std::vector<double>, double> pmf;
    double evidence = 1.0;

    int index(const std::string& var) const;  // throws on unknown variable
};

// Depth-first enumeration of all sampling outcomes of a discrete-only
// program. Throws if a continuous distribution is hit or more than 2^20
// paths would be explored.
JointPmf enumerate(const lang::Program& p, const lang::ParamEnv& overrides = {});

struct PmfMetrics {
    double H = 0.0;       // entropy of x
    double H_cond = 0.0;  // entropy of x given y
    double KL = 0.0;      // divergence of the value distribution of x from y
    double MI = 0.0;      // mutual information between x and y
};

// Plug-in evaluation of the information metrics from the joint pmf, with the
// convention 0 log 0 = 0. A KL support violation yields +infinity.
PmfMetrics pmf_metrics(const JointPmf& j, const std::string& x, const std::string& y,
                       double log_base = 2.0);

struct McResult {
    std::vector<std::string> vars;
    std::vector<std::vector<double>> samples;  // one row per accepted run
    double acceptance = 1.0;
    std::uint64_t seed = 0;
    std::string prng = "splitmix64+box-muller";

    std::vector<double> column(const std::string& var) const;
    double mean(const std::string& var) const;
    double variance(const std::string& var) const;
    double covariance(const std::string& a, const std::string& b) const;
};

// Rejection-sampling forward simulation: n accepted runs, deterministic for a
// fixed seed. Throws on equality observations over continuous variables
// (measure-zero events) and when the acceptance rate drops below 1e-4.
McResult mc_run(const lang::Program& p, std::size_t n, std::uint64_t seed,
                const lang::ParamEnv& overrides = {});

// csv dump: header row of variable names, then one row per sample.
std::string to_csv(const McResult& r);

// Resubstitution differential-entropy estimate (nats) on an equal-width
// histogram over the sample range.
double histogram_entropy(const std::vector<double>& samples, int bins = 2000);

struct BootstrapEntropy {
    double estimate = 0.0;
    double se = 0.0;
};

// Bootstrap standard error of the histogram estimator (resamples the data
// with replacement `reps` times).
BootstrapEntropy histogram_entropy_bootstrap(const std::vector<double>& samples,
                                             int bins = 2000, int reps = 50,
                                             std::uint64_t seed = 1);

}  // namespace leakscope::oracle
