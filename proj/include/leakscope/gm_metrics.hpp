#pragma once

#include <optional>
#include <string>
#include <vector>

#include "leakscope/gm.hpp"

namespace leakscope::gm_metrics {

using gm::GaussianMixture;

// A metric value bracketed by analytic bounds, optionally with a quadrature
// "exact" value. All values are in nats.
struct BoundedValue {
    double lower = 0.0;
    double upper = 0.0;
    std::optional<double> exact;
    std::string lower_method, upper_method, exact_method;
    bool fixed_point_converged = true;
};

// Closed-form Gaussian differential entropy 1/2 log((2 pi e)^n det Sigma).
double gaussian_entropy(const Eigen::MatrixXd& cov);

// Closed-form KL divergence between two Gaussians.
double gaussian_kl(const Eigen::VectorXd& mu_x, const Eigen::MatrixXd& cov_x,
                   const Eigen::VectorXd& mu_y, const Eigen::MatrixXd& cov_y);

// Pairwise cross-density matrix z[a][b] = phi(mu_a; mu_b, Sigma_a + Sigma_b).
Eigen::MatrixXd pairwise_density(const GaussianMixture& x, const GaussianMixture& y);

// Mixture-entropy bounds (components must be nondegenerate).
double gm_entropy_lower(const GaussianMixture& g);
// Optional grouping: each group of component indices is merged by moment
// matching before the bound is applied.
double gm_entropy_upper(const GaussianMixture& g,
                        const std::vector<std::vector<int>>* grouping = nullptr);

// Bounds on the cross term L_X(Y) = int f_X log f_Y.
std::pair<double, double> L_bounds(const GaussianMixture& x, const GaussianMixture& y);

// Variational KL upper bound (fixed point from phi = psi = pi_a rho_b;
// tolerance 1e-10, at most 1000 iterations; the bound is nonincreasing
// across iterations and the best iterate is returned).
double variational_kl_upper(const GaussianMixture& x, const GaussianMixture& y,
                            bool* converged = nullptr,
                            std::vector<double>* iterates = nullptr);

// Entropy of a mixture with closed form for a single component, analytic
// bounds otherwise, quadrature exact when dim <= 2.
BoundedValue entropy_bounds(const GaussianMixture& g, bool with_quadrature = true);

// KL(X || Y) via the -H(X) - L_X(Y) route plus the variational bound.
BoundedValue kl_bounds(const GaussianMixture& x, const GaussianMixture& y,
                       bool with_quadrature = true);

// H(X | Y) via H(X,Y) - H(Y) with opposite-bound differencing.
BoundedValue cond_entropy_bounds(const GaussianMixture& joint,
                                 const std::vector<std::string>& xvars,
                                 const std::vector<std::string>& yvars,
                                 bool with_quadrature = true);

// I(X; Y) = H(X) - H(X | Y).
BoundedValue mi_bounds(const GaussianMixture& joint, const std::vector<std::string>& xvars,
                       const std::vector<std::string>& yvars, bool with_quadrature = true);

}  // namespace leakscope::gm_metrics
