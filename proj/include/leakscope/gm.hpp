#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "leakscope/ast.hpp"

namespace leakscope::gm {

// Weighted Gaussian-mixture state over an ordered variable vector. Weights
// are kept unnormalized while a program runs; the total mass is the evidence
// accumulated by observations.
struct Component {
    double w = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

struct GaussianMixture {
    std::vector<std::string> varnames;
    std::vector<Component> components;

    int dim() const { return static_cast<int>(varnames.size()); }
    int index(const std::string& var) const;  // throws on unknown variable
    double total_mass() const;
};

// Dirac delta centered at the zero vector: the initial state.
GaussianMixture init(std::vector<std::string> varnames);

// Invariant checks: weights sum to `expected_mass` (1e-12), covariances
// symmetric (1e-12) and PSD (min eigenvalue >= -1e-10). Throws on violation.
void validate(const GaussianMixture& g, double expected_mass = 1.0);

// A coordinate is Dirac in a component when its variance is (numerically)
// zero; its whole covariance row/column must vanish too.
bool is_dirac(const Component& c, int coord, double tol = 1e-12);

// Sub-mixture over a subset of coordinates (in the order given).
GaussianMixture marginal(const GaussianMixture& g, const std::vector<std::string>& vars);

// Merge components whose means and covariances coincide within tol
// (max-norm), summing weights; then drop components lighter than
// prune_tol * total mass.
GaussianMixture lump(const GaussianMixture& g, double tol = 1e-9, double prune_tol = 1e-12);

// Normalize weights to sum to 1; returns the prior mass.
double normalize(GaussianMixture& g);

// {varnames: [...], components: [{w, mean, cov}]} with 17-significant-digit
// floats; cov is the full row-major matrix.
std::string to_json(const GaussianMixture& g);

}  // namespace leakscope::gm
