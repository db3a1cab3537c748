#pragma once

#include <functional>

#include "leakscope/gm.hpp"

namespace leakscope::quadrature {

// Adaptive Gauss-Kronrod integration on [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-6);

// Mixture density at a point (components must be nondegenerate).
double gm_pdf(const gm::GaussianMixture& g, const Eigen::VectorXd& x);

// Differential entropy -int f log f in nats, over a box extending 10 sigma
// beyond the extreme component means per axis. Dimension must be 1 or 2.
double gm_entropy(const gm::GaussianMixture& g, double tol = 1e-6);

// Cross term L_X(Y) = int f_X log f_Y (same dimension limits).
double gm_L(const gm::GaussianMixture& x, const gm::GaussianMixture& y, double tol = 1e-6);

// KL divergence int f_X log(f_X / f_Y).
double gm_kl(const gm::GaussianMixture& x, const gm::GaussianMixture& y, double tol = 1e-6);

}  // namespace leakscope::quadrature
