#include "leakscope/soga.hpp"

#include <cmath>
#include <functional>
#include <optional>

#include "leakscope/checks.hpp"

namespace leakscope::soga {

using gm::Component;
using lang::Error;
using lang::Expr;
using lang::ExprPtr;
using lang::Pred;
using lang::State;
using lang::Stmt;

namespace {

constexpr double kDiracTol = 1e-12;
constexpr size_t kComponentCap = 100000;
const ParamEnv kNoParams{};

double normal_pdf(double x, double mean, double var) {
    double d = x - mean;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * M_PI * var);
}

double const_eval(const ExprPtr& e) {
    return lang::eval_expr(*e, {}, kNoParams);  // throws if e references a variable
}

void symmetrize(Eigen::MatrixXd& s) {
    s = ((s + s.transpose()) / 2.0).eval();
    for (int i = 0; i < s.rows(); ++i)
        if (s(i, i) < 0.0 && s(i, i) > -1e-10) s(i, i) = 0.0;
}

}  // namespace

std::vector<MatchedComponent> moment_match(const Dist& d) {
    std::vector<MatchedComponent> out;
    switch (d.kind) {
        case Dist::Kind::Bernoulli: {
            double p = const_eval(d.p);
            out.push_back({p, 1.0, 0.0});
            out.push_back({1.0 - p, 0.0, 0.0});
            break;
        }
        case Dist::Kind::Categorical:
            for (const auto& [value, prob] : d.support)
                out.push_back({const_eval(prob), value, 0.0});
            break;
        case Dist::Kind::Gauss:
            out.push_back({1.0, const_eval(d.mean), const_eval(d.variance)});
            break;
        case Dist::Kind::GmLit:
            for (const auto& c : d.gm)
                out.push_back({const_eval(c.weight), const_eval(c.mean),
                               const_eval(c.variance)});
            break;
    }
    return out;
}

GaussianMixture assign_linear(const GaussianMixture& g, const std::string& target,
                              const std::map<std::string, double>& coeffs, double c0) {
    int t = g.index(target);
    int n = g.dim();
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    a.row(t).setZero();
    for (const auto& [v, c] : coeffs) a(t, g.index(v)) = c;
    GaussianMixture out = g;
    for (auto& c : out.components) {
        c.mean = (a * c.mean).eval();
        c.mean(t) += c0;
        c.cov = (a * c.cov * a.transpose()).eval();
        symmetrize(c.cov);
    }
    return out;
}

GaussianMixture assign_product(const GaussianMixture& g, const std::string& target,
                               const std::string& vj, const std::string& vk) {
    int t = g.index(target), j = g.index(vj), k = g.index(vk);
    GaussianMixture out = g;
    for (auto& c : out.components) {
        const Eigen::VectorXd mu = c.mean;
        const Eigen::MatrixXd s = c.cov;
        c.mean(t) = mu(j) * mu(k) + s(j, k);
        for (int l = 0; l < g.dim(); ++l) {
            if (l == t) continue;
            double cv = mu(j) * s(k, l) + mu(k) * s(j, l);
            c.cov(t, l) = cv;
            c.cov(l, t) = cv;
        }
        c.cov(t, t) = mu(j) * mu(j) * s(k, k) + mu(k) * mu(k) * s(j, j) +
                      2.0 * mu(j) * mu(k) * s(j, k) + s(j, j) * s(k, k) + s(j, k) * s(j, k);
        symmetrize(c.cov);
    }
    return out;
}

GaussianMixture sample(const GaussianMixture& g, const std::string& target, const Dist& d) {
    int t = g.index(target);
    auto matched = moment_match(d);
    GaussianMixture out;
    out.varnames = g.varnames;
    out.components.reserve(g.components.size() * matched.size());
    for (const auto& c : g.components) {
        for (const auto& m : matched) {
            Component nc = c;
            nc.w = c.w * m.w;
            nc.cov.row(t).setZero();
            nc.cov.col(t).setZero();
            nc.mean(t) = m.mean;
            nc.cov(t, t) = m.var;
            out.components.push_back(std::move(nc));
        }
    }
    if (out.components.size() > kComponentCap)
        throw Error("mixture component cap exceeded");
    return out;
}

namespace {

// Evaluate a predicate at a component; every referenced variable must be a
// Dirac coordinate.
bool eval_pred_at_component(const GaussianMixture& g, const Component& c, const Pred& pred) {
    State sigma;
    for (int i = 0; i < g.dim(); ++i) sigma[g.varnames[i]] = c.mean(i);
    // Verify Dirac-ness of referenced variables.
    std::function<void(const Expr&)> check_expr = [&](const Expr& e) {
        switch (e.kind) {
            case Expr::Kind::Number:
            case Expr::Kind::ParamRef:
                return;
            case Expr::Kind::VarRef: {
                int i = g.index(e.name);
                if (!gm::is_dirac(c, i, kDiracTol))
                    throw Error("predicate over non-Dirac variable '" + e.name +
                                "' is not supported by the mixture semantics "
                                "(only equality observations condition continuous "
                                "coordinates)");
                return;
            }
            default:
                check_expr(*e.lhs);
                check_expr(*e.rhs);
        }
    };
    std::function<void(const Pred&)> check_pred = [&](const Pred& p) {
        switch (p.kind) {
            case Pred::Kind::Cmp:
                check_expr(*p.lhs);
                check_expr(*p.rhs);
                return;
            case Pred::Kind::Not:
                check_pred(*p.a);
                return;
            default:
                check_pred(*p.a);
                check_pred(*p.b);
        }
    };
    check_pred(pred);
    return lang::eval_pred(pred, sigma, kNoParams);
}

}  // namespace

GaussianMixture observe_discrete(const GaussianMixture& g, const PredPtr& pred) {
    GaussianMixture out;
    out.varnames = g.varnames;
    for (const auto& c : g.components)
        if (eval_pred_at_component(g, c, *pred)) out.components.push_back(c);
    if (out.components.empty() || out.total_mass() <= 0.0)
        throw Error("unsatisfiable observation: no component satisfies the predicate");
    return out;
}

GaussianMixture observe_eq(const GaussianMixture& g, const std::string& target, double v) {
    int t = g.index(target);
    GaussianMixture out;
    out.varnames = g.varnames;
    for (const auto& c : g.components) {
        if (gm::is_dirac(c, t, kDiracTol)) {
            if (std::abs(c.mean(t) - v) <= 1e-12) out.components.push_back(c);
            continue;
        }
        double vt = c.cov(t, t);
        Component nc;
        nc.w = c.w * normal_pdf(v, c.mean(t), vt);
        Eigen::VectorXd col = c.cov.col(t);
        nc.mean = c.mean + col * ((v - c.mean(t)) / vt);
        nc.cov = c.cov - (col * col.transpose()) / vt;
        symmetrize(nc.cov);
        // Conditioning pins the target coordinate exactly.
        nc.mean(t) = v;
        nc.cov.row(t).setZero();
        nc.cov.col(t).setZero();
        if (nc.w > 0.0) out.components.push_back(std::move(nc));
    }
    if (out.components.empty() || out.total_mass() <= 0.0)
        throw Error("unsatisfiable observation: zero mass after conditioning");
    return out;
}

// ---------------------------------------------------------------------------
// Assignment right-hand-side classification
// ---------------------------------------------------------------------------

namespace {

struct LinearForm {
    std::map<std::string, double> coeffs;
    double c0 = 0.0;
};

bool expr_is_constant(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Number:
            return true;
        case Expr::Kind::ParamRef:
            return false;  // parameters are resolved before execution
        case Expr::Kind::VarRef:
            return false;
        default:
            return expr_is_constant(*e.lhs) && expr_is_constant(*e.rhs);
    }
}

std::optional<LinearForm> linearize(const ExprPtr& e) {
    switch (e->kind) {
        case Expr::Kind::Number:
            return LinearForm{{}, e->number};
        case Expr::Kind::ParamRef:
            throw Error("unresolved parameter in assignment");
        case Expr::Kind::VarRef:
            return LinearForm{{{e->name, 1.0}}, 0.0};
        case Expr::Kind::Add:
        case Expr::Kind::Sub: {
            auto l = linearize(e->lhs), r = linearize(e->rhs);
            if (!l || !r) return std::nullopt;
            double sgn = e->kind == Expr::Kind::Add ? 1.0 : -1.0;
            l->c0 += sgn * r->c0;
            for (const auto& [v, c] : r->coeffs) l->coeffs[v] += sgn * c;
            return l;
        }
        case Expr::Kind::Mul: {
            if (expr_is_constant(*e->lhs)) {
                auto r = linearize(e->rhs);
                if (!r) return std::nullopt;
                double c = const_eval(e->lhs);
                r->c0 *= c;
                for (auto& [_, cc] : r->coeffs) cc *= c;
                return r;
            }
            if (expr_is_constant(*e->rhs)) {
                auto l = linearize(e->lhs);
                if (!l) return std::nullopt;
                double c = const_eval(e->rhs);
                l->c0 *= c;
                for (auto& [_, cc] : l->coeffs) cc *= c;
                return l;
            }
            return std::nullopt;
        }
    }
    return std::nullopt;
}

// Multiplicative decomposition c * v1 * v2 (for product assignments).
bool product_form(const ExprPtr& e, double& c, std::vector<std::string>& vars) {
    switch (e->kind) {
        case Expr::Kind::Number:
            c *= e->number;
            return true;
        case Expr::Kind::VarRef:
            vars.push_back(e->name);
            return true;
        case Expr::Kind::Mul:
            return product_form(e->lhs, c, vars) && product_form(e->rhs, c, vars);
        default:
            return false;
    }
}

GaussianMixture do_assign(const GaussianMixture& g, const std::string& target,
                          const ExprPtr& rhs) {
    if (auto lin = linearize(rhs))
        return assign_linear(g, target, lin->coeffs, lin->c0);
    double c = 1.0;
    std::vector<std::string> vars;
    if (product_form(rhs, c, vars) && vars.size() == 2) {
        auto out = assign_product(g, target, vars[0], vars[1]);
        if (c != 1.0) out = assign_linear(out, target, {{target, c}}, 0.0);
        return out;
    }
    throw Error("assignment '" + target + " := " + lang::print_expr(*rhs) +
                "' is neither linear nor a product of two variables");
}

// Equality observation shape: var == constant (either operand order).
std::optional<std::pair<std::string, double>> eq_shape(const Pred& p) {
    if (p.kind != Pred::Kind::Cmp || p.op != Pred::CmpOp::Eq) return std::nullopt;
    if (p.lhs->kind == Expr::Kind::VarRef && expr_is_constant(*p.rhs))
        return std::make_pair(p.lhs->name, const_eval(p.rhs));
    if (p.rhs->kind == Expr::Kind::VarRef && expr_is_constant(*p.lhs))
        return std::make_pair(p.rhs->name, const_eval(p.lhs));
    return std::nullopt;
}

}  // namespace

GaussianMixture run_stmt(const StmtPtr& s, GaussianMixture g) {
    if (!s) return g;
    switch (s->kind) {
        case Stmt::Kind::Skip:
            return g;
        case Stmt::Kind::Seq:
            return run_stmt(s->second, run_stmt(s->first, std::move(g)));
        case Stmt::Kind::Assign:
            g = do_assign(g, s->var, s->expr);
            break;
        case Stmt::Kind::Sample:
            g = sample(g, s->var, *s->dist);
            break;
        case Stmt::Kind::Observe: {
            if (auto eq = eq_shape(*s->pred)) {
                // Dirac-only equality observations are plain component
                // filtering; route them through the discrete rule so integer
                // comparisons stay exact.
                bool all_dirac = true;
                int t = g.index(eq->first);
                for (const auto& c : g.components)
                    if (!gm::is_dirac(c, t)) {
                        all_dirac = false;
                        break;
                    }
                g = all_dirac ? observe_discrete(g, s->pred)
                              : observe_eq(g, eq->first, eq->second);
            } else {
                g = observe_discrete(g, s->pred);
            }
            break;
        }
        case Stmt::Kind::If: {
            GaussianMixture yes, no;
            yes.varnames = no.varnames = g.varnames;
            for (auto& c : g.components)
                (eval_pred_at_component(g, c, *s->pred) ? yes : no)
                    .components.push_back(std::move(c));
            GaussianMixture out;
            out.varnames = g.varnames;
            if (!yes.components.empty()) {
                auto r = run_stmt(s->first, std::move(yes));
                out.components.insert(out.components.end(), r.components.begin(),
                                      r.components.end());
            }
            if (!no.components.empty()) {
                auto r = run_stmt(s->second, std::move(no));
                out.components.insert(out.components.end(), r.components.begin(),
                                      r.components.end());
            }
            g = std::move(out);
            break;
        }
        case Stmt::Kind::For:
            return run_stmt(lang::unroll_stmt(s), std::move(g));
    }
    g = gm::lump(g);
    if (g.components.size() > kComponentCap) throw Error("mixture component cap exceeded");
    return g;
}

Result run_soga(const Program& p, const ParamEnv& overrides) {
    auto env = lang::bind_params(p.params, overrides);
    auto body = lang::resolve_params(lang::unroll_stmt(p.body), env);
    Program flat;
    flat.body = body;
    auto vars = lang::program_variables(flat);
    Result r;
    r.state = run_stmt(body, gm::init(vars));
    r.evidence = gm::normalize(r.state);
    return r;
}

}  // namespace leakscope::soga
