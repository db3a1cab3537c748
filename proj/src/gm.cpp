#include "leakscope/gm.hpp"

#include <algorithm>
#include <json.hpp>
#include <sstream>

namespace leakscope::gm {

using lang::Error;

int GaussianMixture::index(const std::string& var) const {
    auto it = std::find(varnames.begin(), varnames.end(), var);
    if (it == varnames.end()) throw Error("unknown variable '" + var + "' in mixture state");
    return static_cast<int>(it - varnames.begin());
}

double GaussianMixture::total_mass() const {
    double m = 0.0;
    for (const auto& c : components) m += c.w;
    return m;
}

GaussianMixture init(std::vector<std::string> varnames) {
    if (varnames.empty()) throw Error("mixture state needs at least one variable");
    GaussianMixture g;
    int n = static_cast<int>(varnames.size());
    g.varnames = std::move(varnames);
    g.components.push_back({1.0, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)});
    return g;
}

void validate(const GaussianMixture& g, double expected_mass) {
    if (g.components.empty()) throw Error("mixture has no components");
    double mass = g.total_mass();
    if (std::abs(mass - expected_mass) > 1e-12 * std::max(1.0, expected_mass))
        throw Error("mixture mass " + std::to_string(mass) + " != expected " +
                    std::to_string(expected_mass));
    for (const auto& c : g.components) {
        if (c.w < 0.0) throw Error("negative component weight");
        if (c.mean.size() != g.dim() || c.cov.rows() != g.dim() || c.cov.cols() != g.dim())
            throw Error("component dimension mismatch");
        if ((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw Error("covariance not symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.cov,
                                                          Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw Error("covariance not positive semidefinite (min eigenvalue " +
                        std::to_string(es.eigenvalues().minCoeff()) + ")");
    }
}

bool is_dirac(const Component& c, int coord, double tol) {
    return std::abs(c.cov(coord, coord)) <= tol;
}

GaussianMixture marginal(const GaussianMixture& g, const std::vector<std::string>& vars) {
    std::vector<int> idx;
    idx.reserve(vars.size());
    for (const auto& v : vars) idx.push_back(g.index(v));
    GaussianMixture out;
    out.varnames = vars;
    int m = static_cast<int>(idx.size());
    for (const auto& c : g.components) {
        Component nc;
        nc.w = c.w;
        nc.mean.resize(m);
        nc.cov.resize(m, m);
        for (int i = 0; i < m; ++i) {
            nc.mean(i) = c.mean(idx[i]);
            for (int j = 0; j < m; ++j) nc.cov(i, j) = c.cov(idx[i], idx[j]);
        }
        out.components.push_back(std::move(nc));
    }
    return out;
}

GaussianMixture lump(const GaussianMixture& g, double tol, double prune_tol) {
    GaussianMixture out;
    out.varnames = g.varnames;
    for (const auto& c : g.components) {
        bool merged = false;
        for (auto& k : out.components) {
            if ((k.mean - c.mean).cwiseAbs().maxCoeff() <= tol &&
                (k.cov - c.cov).cwiseAbs().maxCoeff() <= tol) {
                k.w += c.w;
                merged = true;
                break;
            }
        }
        if (!merged) out.components.push_back(c);
    }
    double mass = out.total_mass();
    if (mass > 0.0 && prune_tol > 0.0) {
        std::vector<Component> kept;
        double kept_mass = 0.0;
        for (auto& c : out.components)
            if (c.w >= prune_tol * mass) {
                kept_mass += c.w;
                kept.push_back(std::move(c));
            }
        if (!kept.empty() && kept_mass > 0.0) {
            // Redistribute the pruned sliver so the total mass is unchanged.
            double fix = mass / kept_mass;
            for (auto& c : kept) c.w *= fix;
            out.components = std::move(kept);
        }
    }
    return out;
}

double normalize(GaussianMixture& g) {
    double mass = g.total_mass();
    if (mass <= 0.0) throw Error("cannot normalize zero-mass mixture");
    for (auto& c : g.components) c.w /= mass;
    return mass;
}

std::string to_json(const GaussianMixture& g) {
    nlohmann::json j;
    j["varnames"] = g.varnames;
    auto& comps = j["components"] = nlohmann::json::array();
    for (const auto& c : g.components) {
        nlohmann::json cj;
        cj["w"] = c.w;
        auto& mean = cj["mean"] = nlohmann::json::array();
        for (int i = 0; i < c.mean.size(); ++i) mean.push_back(c.mean(i));
        auto& cov = cj["cov"] = nlohmann::json::array();
        for (int i = 0; i < c.cov.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (int k = 0; k < c.cov.cols(); ++k) row.push_back(c.cov(i, k));
            cov.push_back(std::move(row));
        }
        comps.push_back(std::move(cj));
    }
    return j.dump(2);
}

}  // namespace leakscope::gm
