#include "leakscope/gm_metrics.hpp"

#include <algorithm>
#include <cmath>

#include "leakscope/quadrature.hpp"

namespace leakscope::gm_metrics {

using gm::Component;
using lang::Error;

namespace {

double log_det_llt(const Eigen::LLT<Eigen::MatrixXd>& llt, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += 2.0 * std::log(llt.matrixL()(i, i));
    return acc;
}

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw Error("degenerate marginal: covariance is not positive definite");
    return llt;
}

double log_normal_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                      const Eigen::MatrixXd& cov) {
    int n = static_cast<int>(x.size());
    auto llt = checked_llt(cov);
    double quad = llt.matrixL().solve(x - mu).squaredNorm();
    return -0.5 * (quad + log_det_llt(llt, n) + n * std::log(2.0 * M_PI));
}

double weight_entropy(const GaussianMixture& g) {
    double acc = 0.0;
    for (const auto& c : g.components)
        if (c.w > 0.0) acc -= c.w * std::log(c.w);
    return acc;
}

// Merge a set of components into their moment-matched Gaussian.
Component merge(const GaussianMixture& g, const std::vector<int>& group) {
    Component out;
    out.w = 0.0;
    out.mean = Eigen::VectorXd::Zero(g.dim());
    for (int i : group) {
        out.w += g.components[i].w;
        out.mean += g.components[i].w * g.components[i].mean;
    }
    if (out.w <= 0.0) throw Error("empty group in entropy bound grouping");
    out.mean /= out.w;
    out.cov = Eigen::MatrixXd::Zero(g.dim(), g.dim());
    for (int i : group) {
        const auto& c = g.components[i];
        Eigen::VectorXd d = c.mean - out.mean;
        out.cov += c.w * (c.cov + d * d.transpose());
    }
    out.cov /= out.w;
    return out;
}

std::optional<double> try_quadrature_entropy(const GaussianMixture& g) {
    if (g.dim() > 2) return std::nullopt;
    return quadrature::gm_entropy(g);
}

}  // namespace

double gaussian_entropy(const Eigen::MatrixXd& cov) {
    int n = static_cast<int>(cov.rows());
    auto llt = checked_llt(cov);
    return 0.5 * (n * std::log(2.0 * M_PI * std::exp(1.0)) + log_det_llt(llt, n));
}

double gaussian_kl(const Eigen::VectorXd& mu_x, const Eigen::MatrixXd& cov_x,
                   const Eigen::VectorXd& mu_y, const Eigen::MatrixXd& cov_y) {
    int n = static_cast<int>(mu_x.size());
    auto llt_y = checked_llt(cov_y);
    auto llt_x = checked_llt(cov_x);
    double logdet_ratio = log_det_llt(llt_y, n) - log_det_llt(llt_x, n);
    double trace = llt_y.solve(cov_x).trace();
    double quad = llt_y.matrixL().solve(mu_x - mu_y).squaredNorm();
    return 0.5 * (logdet_ratio + trace - n + quad);
}

Eigen::MatrixXd pairwise_density(const GaussianMixture& x, const GaussianMixture& y) {
    Eigen::MatrixXd z(x.components.size(), y.components.size());
    for (size_t a = 0; a < x.components.size(); ++a)
        for (size_t b = 0; b < y.components.size(); ++b)
            z(a, b) = std::exp(log_normal_pdf(x.components[a].mean, y.components[b].mean,
                                              x.components[a].cov + y.components[b].cov));
    return z;
}

double gm_entropy_lower(const GaussianMixture& g) {
    Eigen::MatrixXd z = pairwise_density(g, g);
    double acc = 0.0;
    for (size_t i = 0; i < g.components.size(); ++i) {
        double inner = 0.0;
        for (size_t j = 0; j < g.components.size(); ++j)
            inner += g.components[j].w * z(i, j);
        acc -= g.components[i].w * std::log(inner);
    }
    return acc;
}

double gm_entropy_upper(const GaussianMixture& g,
                        const std::vector<std::vector<int>>* grouping) {
    if (grouping) {
        GaussianMixture reduced;
        reduced.varnames = g.varnames;
        for (const auto& group : *grouping) reduced.components.push_back(merge(g, group));
        return gm_entropy_upper(reduced, nullptr);
    }
    double acc = weight_entropy(g);
    for (const auto& c : g.components) acc += c.w * gaussian_entropy(c.cov);
    return acc;
}

std::pair<double, double> L_bounds(const GaussianMixture& x, const GaussianMixture& y) {
    const auto& xc = x.components;
    const auto& yc = y.components;
    Eigen::MatrixXd z = pairwise_density(x, y);
    double upper = 0.0;
    for (size_t a = 0; a < xc.size(); ++a) {
        double inner = 0.0;
        for (size_t b = 0; b < yc.size(); ++b) inner += yc[b].w * z(a, b);
        upper += xc[a].w * std::log(inner);
    }
    // Lower bound with the maximizing responsibilities, in log space.
    double lower = 0.0;
    for (size_t a = 0; a < xc.size(); ++a) {
        double h_a = gaussian_entropy(xc[a].cov);
        std::vector<double> kl_ab(yc.size()), logit(yc.size());
        double mx = -1e300;
        for (size_t b = 0; b < yc.size(); ++b) {
            kl_ab[b] = gaussian_kl(xc[a].mean, xc[a].cov, yc[b].mean, yc[b].cov);
            logit[b] = std::log(yc[b].w) - kl_ab[b];
            mx = std::max(mx, logit[b]);
        }
        double norm = 0.0;
        for (double l : logit) norm += std::exp(l - mx);
        double log_norm = mx + std::log(norm);
        for (size_t b = 0; b < yc.size(); ++b) {
            double log_phi = logit[b] - log_norm;
            double phi = std::exp(log_phi);
            if (phi <= 0.0) continue;
            double l_ab = -h_a - kl_ab[b];  // int N_a log N_b
            lower += xc[a].w * phi * (std::log(yc[b].w) - log_phi + l_ab);
        }
    }
    return {lower, upper};
}

double variational_kl_upper(const GaussianMixture& x, const GaussianMixture& y,
                            bool* converged, std::vector<double>* iterates) {
    size_t na = x.components.size(), nb = y.components.size();
    Eigen::MatrixXd kl(na, nb);
    for (size_t a = 0; a < na; ++a)
        for (size_t b = 0; b < nb; ++b)
            kl(a, b) = gaussian_kl(x.components[a].mean, x.components[a].cov,
                                   y.components[b].mean, y.components[b].cov);
    Eigen::MatrixXd phi(na, nb), psi(na, nb);
    for (size_t a = 0; a < na; ++a)
        for (size_t b = 0; b < nb; ++b)
            phi(a, b) = psi(a, b) = x.components[a].w * y.components[b].w;

    auto bound = [&] {
        double acc = 0.0;
        for (size_t a = 0; a < na; ++a)
            for (size_t b = 0; b < nb; ++b) {
                if (phi(a, b) <= 0.0) continue;
                acc += phi(a, b) * (std::log(phi(a, b) / psi(a, b)) + kl(a, b));
            }
        return acc;
    };

    double best = bound();
    if (iterates) iterates->push_back(best);
    bool done = false;
    for (int it = 0; it < 1000 && !done; ++it) {
        // psi_{a|b} = rho_b phi_{b|a} / sum_a' phi_{b|a'}
        for (size_t b = 0; b < nb; ++b) {
            double col = phi.col(b).sum();
            if (col <= 0.0) continue;
            for (size_t a = 0; a < na; ++a)
                psi(a, b) = y.components[b].w * phi(a, b) / col;
        }
        // phi_{b|a} = pi_a psi_{a|b} e^{-KL_ab} / sum_b' ...
        double max_change = 0.0;
        for (size_t a = 0; a < na; ++a) {
            double mx = -1e300;
            std::vector<double> logit(nb, -1e300);
            for (size_t b = 0; b < nb; ++b) {
                if (psi(a, b) <= 0.0) continue;
                logit[b] = std::log(psi(a, b)) - kl(a, b);
                mx = std::max(mx, logit[b]);
            }
            double norm = 0.0;
            for (double l : logit) norm += std::exp(l - mx);
            double log_norm = mx + std::log(norm);
            for (size_t b = 0; b < nb; ++b) {
                double next = logit[b] <= -1e300
                                  ? 0.0
                                  : x.components[a].w * std::exp(logit[b] - log_norm);
                max_change = std::max(max_change, std::abs(next - phi(a, b)));
                phi(a, b) = next;
            }
        }
        double val = bound();
        if (iterates) iterates->push_back(val);
        best = std::min(best, val);
        done = max_change < 1e-10;
    }
    if (converged) *converged = done;
    return best;
}

BoundedValue entropy_bounds(const GaussianMixture& g, bool with_quadrature) {
    BoundedValue out;
    if (g.components.size() == 1) {
        double h = gaussian_entropy(g.components.front().cov);
        out.lower = out.upper = h;
        out.exact = h;
        out.lower_method = out.upper_method = out.exact_method = "closed-form";
        return out;
    }
    out.lower = gm_entropy_lower(g);
    out.upper = gm_entropy_upper(g);
    out.lower_method = "pairwise-density";
    out.upper_method = "weight-entropy";
    if (with_quadrature) {
        if (auto q = try_quadrature_entropy(g)) {
            out.exact = *q;
            out.exact_method = "quadrature";
        }
    }
    return out;
}

BoundedValue kl_bounds(const GaussianMixture& x, const GaussianMixture& y,
                       bool with_quadrature) {
    BoundedValue hx = entropy_bounds(x, false);
    auto [l_low, l_up] = L_bounds(x, y);
    BoundedValue out;
    out.lower = -hx.upper - l_up;
    out.lower_method = "L-route";
    bool fp_converged = true;
    double variational = variational_kl_upper(x, y, &fp_converged);
    double l_route = -hx.lower - l_low;
    out.fixed_point_converged = fp_converged;
    if (variational <= l_route) {
        out.upper = variational;
        out.upper_method = "variational";
    } else {
        out.upper = l_route;
        out.upper_method = "L-route";
    }
    if (x.components.size() == 1 && y.components.size() == 1) {
        out.exact = gaussian_kl(x.components[0].mean, x.components[0].cov,
                                y.components[0].mean, y.components[0].cov);
        out.exact_method = "closed-form";
    } else if (with_quadrature && x.dim() <= 2) {
        out.exact = quadrature::gm_kl(x, y);
        out.exact_method = "quadrature";
    }
    return out;
}

BoundedValue cond_entropy_bounds(const GaussianMixture& joint,
                                 const std::vector<std::string>& xvars,
                                 const std::vector<std::string>& yvars,
                                 bool with_quadrature) {
    std::vector<std::string> all = xvars;
    all.insert(all.end(), yvars.begin(), yvars.end());
    GaussianMixture j = gm::lump(gm::marginal(joint, all));
    GaussianMixture my = gm::lump(gm::marginal(joint, yvars));
    BoundedValue hj = entropy_bounds(j, false);
    BoundedValue hy = entropy_bounds(my, false);
    BoundedValue out;
    out.lower = hj.lower - hy.upper;
    out.upper = hj.upper - hy.lower;
    out.lower_method = "joint-minus-marginal";
    out.upper_method = "joint-minus-marginal";
    out.fixed_point_converged = hj.fixed_point_converged && hy.fixed_point_converged;
    if (with_quadrature && j.dim() <= 2 && my.dim() <= 2) {
        auto qj = try_quadrature_entropy(j);
        auto qy = try_quadrature_entropy(my);
        if (qj && qy) {
            out.exact = *qj - *qy;
            out.exact_method = "quadrature";
        }
    }
    return out;
}

BoundedValue mi_bounds(const GaussianMixture& joint, const std::vector<std::string>& xvars,
                       const std::vector<std::string>& yvars, bool with_quadrature) {
    GaussianMixture mx = gm::lump(gm::marginal(joint, xvars));
    BoundedValue hx = entropy_bounds(mx, false);
    BoundedValue hxy = cond_entropy_bounds(joint, xvars, yvars, false);
    BoundedValue out;
    out.lower = hx.lower - hxy.upper;
    out.upper = hx.upper - hxy.lower;
    out.lower_method = "entropy-difference";
    out.upper_method = "entropy-difference";
    if (with_quadrature) {
        std::vector<std::string> all = xvars;
        all.insert(all.end(), yvars.begin(), yvars.end());
        GaussianMixture j = gm::lump(gm::marginal(joint, all));
        GaussianMixture my = gm::lump(gm::marginal(joint, yvars));
        if (j.dim() <= 2) {
            auto qx = try_quadrature_entropy(mx);
            auto qy = try_quadrature_entropy(my);
            auto qj = try_quadrature_entropy(j);
            if (qx && qy && qj) {
                out.exact = *qx + *qy - *qj;
                out.exact_method = "quadrature";
            }
        }
    }
    return out;
}

}  // namespace leakscope::gm_metrics
