#include "leakscope/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <vector>

namespace leakscope::quadrature {

using lang::Error;

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 61>;

void require_nondegenerate(const gm::GaussianMixture& g) {
    for (const auto& c : g.components) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.cov, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() <= 0.0)
            throw Error("degenerate marginal: component covariance is singular");
    }
}

// [min(mu - 10 sigma), max(mu + 10 sigma)] per axis.
std::pair<Eigen::VectorXd, Eigen::VectorXd> box(const gm::GaussianMixture& g) {
    int n = g.dim();
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, 1e300);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, -1e300);
    for (const auto& c : g.components)
        for (int i = 0; i < n; ++i) {
            double s = std::sqrt(std::max(0.0, c.cov(i, i)));
            lo(i) = std::min(lo(i), c.mean(i) - 10.0 * s);
            hi(i) = std::max(hi(i), c.mean(i) + 10.0 * s);
        }
    return {lo, hi};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> merge_box(
    std::pair<Eigen::VectorXd, Eigen::VectorXd> a,
    const std::pair<Eigen::VectorXd, Eigen::VectorXd>& b) {
    a.first = a.first.cwiseMin(b.first);
    a.second = a.second.cwiseMax(b.second);
    return a;
}

// int_box w(x) over the mixture-adapted box, for dim 1 or 2.
double integrate_box(const gm::GaussianMixture& g,
                     const std::pair<Eigen::VectorXd, Eigen::VectorXd>& bx,
                     const std::function<double(const Eigen::VectorXd&)>& w, double tol) {
    int n = g.dim();
    if (n == 1) {
        return Kronrod::integrate(
            [&](double x) {
                Eigen::VectorXd v(1);
                v << x;
                return w(v);
            },
            bx.first(0), bx.second(0), 15, tol);
    }
    if (n == 2) {
        return Kronrod::integrate(
            [&](double x) {
                return Kronrod::integrate(
                    [&](double y) {
                        Eigen::VectorXd v(2);
                        v << x, y;
                        return w(v);
                    },
                    bx.first(1), bx.second(1), 15, tol / 10.0);
            },
            bx.first(0), bx.second(0), 15, tol);
    }
    throw Error("quadrature limited to 1- or 2-dimensional marginals; use MC estimate");
}

// log of the mixture density via logsumexp; immune to tail underflow.
double gm_log_pdf(const gm::GaussianMixture& g, const Eigen::VectorXd& x) {
    int n = g.dim();
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> logs;
    logs.reserve(g.components.size());
    for (const auto& c : g.components) {
        Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
        if (llt.info() != Eigen::Success)
            throw Error("degenerate marginal: component covariance is singular");
        double quad = llt.matrixL().solve(x - c.mean).squaredNorm();
        double logdet = 0.0;
        for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
        logs.push_back(std::log(c.w) - 0.5 * (quad + logdet + n * std::log(2.0 * M_PI)));
        mx = std::max(mx, logs.back());
    }
    if (std::isinf(mx)) return mx;
    double acc = 0.0;
    for (double l : logs) acc += std::exp(l - mx);
    return mx + std::log(acc);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    return Kronrod::integrate(f, a, b, 15, tol);
}

double gm_pdf(const gm::GaussianMixture& g, const Eigen::VectorXd& x) {
    int n = g.dim();
    double acc = 0.0;
    for (const auto& c : g.components) {
        Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
        if (llt.info() != Eigen::Success)
            throw Error("degenerate marginal: component covariance is singular");
        Eigen::VectorXd d = x - c.mean;
        double quad = llt.matrixL().solve(d).squaredNorm();
        double logdet = 0.0;
        for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
        acc += c.w * std::exp(-0.5 * (quad + logdet + n * std::log(2.0 * M_PI)));
    }
    return acc;
}

double gm_entropy(const gm::GaussianMixture& g, double tol) {
    require_nondegenerate(g);
    return integrate_box(g, box(g),
                         [&](const Eigen::VectorXd& x) {
                             double f = gm_pdf(g, x);
                             return f > 0.0 ? -f * std::log(f) : 0.0;
                         },
                         tol);
}

double gm_L(const gm::GaussianMixture& x, const gm::GaussianMixture& y, double tol) {
    require_nondegenerate(x);
    require_nondegenerate(y);
    return integrate_box(x, merge_box(box(x), box(y)),
                         [&](const Eigen::VectorXd& p) {
                             double lfx = gm_log_pdf(x, p);
                             if (std::isinf(lfx)) return 0.0;
                             return std::exp(lfx) * gm_log_pdf(y, p);
                         },
                         tol);
}

double gm_kl(const gm::GaussianMixture& x, const gm::GaussianMixture& y, double tol) {
    require_nondegenerate(x);
    require_nondegenerate(y);
    return integrate_box(x, merge_box(box(x), box(y)),
                         [&](const Eigen::VectorXd& p) {
                             double lfx = gm_log_pdf(x, p);
                             if (std::isinf(lfx)) return 0.0;
                             return std::exp(lfx) * (lfx - gm_log_pdf(y, p));
                         },
                         tol);
}

}  // namespace leakscope::quadrature
