#include "leakscope/wpe.hpp"

#include <cmath>
#include <set>

#include "leakscope/checks.hpp"

namespace leakscope::wpe {

using lang::Dist;
using lang::Error;
using lang::Expr;
using lang::ExprPtr;
using lang::Pred;
using lang::State;
using lang::Stmt;
using namespace symbolic;

ExpPtr CondExpectation::forced() const { return make_quotient(num, den); }

// ---------------------------------------------------------------------------
// wp transformer (Table-style structural rules)
// ---------------------------------------------------------------------------

namespace {

ExpPtr one_minus(const ExprPtr& e) {
    return from_expr(Expr::binary(Expr::Kind::Sub, Expr::num(1.0), e));
}

}  // namespace

ExpPtr wp(const StmtPtr& s, const ExpPtr& x) {
    if (!s) return x;
    switch (s->kind) {
        case Stmt::Kind::Skip:
            return x;
        case Stmt::Kind::Seq:
            return wp(s->first, wp(s->second, x));
        case Stmt::Kind::Assign:
            return simplify(subst(x, s->var, s->expr));
        case Stmt::Kind::Sample: {
            const Dist& d = *s->dist;
            std::vector<ExpPtr> terms;
            switch (d.kind) {
                case Dist::Kind::Bernoulli:
                    terms.push_back(make_product(
                        {from_expr(d.p), subst(x, s->var, Expr::num(1.0))}));
                    terms.push_back(
                        make_product({one_minus(d.p), subst(x, s->var, Expr::num(0.0))}));
                    break;
                case Dist::Kind::Categorical:
                    for (const auto& [value, prob] : d.support)
                        terms.push_back(make_product(
                            {from_expr(prob), subst(x, s->var, Expr::num(value))}));
                    break;
                default:
                    throw Error(
                        "continuous distribution in wp backend; use the mixture semantics");
            }
            return simplify(make_sum(std::move(terms)));
        }
        case Stmt::Kind::Observe:
            return simplify(make_product({make_iverson(s->pred), x}));
        case Stmt::Kind::If:
            return simplify(make_sum(
                {make_product({make_iverson(s->pred), wp(s->first, x)}),
                 make_product({make_iverson(Pred::negate(s->pred)), wp(s->second, x)})}));
        case Stmt::Kind::For:
            return wp(lang::unroll_stmt(s), x);
    }
    return x;
}

CondExpectation cwp(const StmtPtr& s, const CondExpectation& c) {
    return {wp(s, c.num), wp(s, c.den)};
}

// ---------------------------------------------------------------------------
// Metrics (evaluated at the all-zeros initial state)
// ---------------------------------------------------------------------------

namespace {

struct Prepared {
    StmtPtr body;       // unrolled, parameter-free
    State sigma0;       // all program variables at 0
    ExpPtr den;         // wp(S, 1)
    double mass;        // den at sigma0 (probability all observes succeed)
};

Prepared prepare(const Program& p, const ParamEnv& overrides) {
    auto env = lang::bind_params(p.params, overrides);
    Prepared out;
    out.body = lang::resolve_params(lang::unroll_stmt(p.body), env);
    Program flat;
    flat.body = out.body;
    for (const auto& v : lang::program_variables(flat)) out.sigma0[v] = 0.0;
    out.den = simplify(wp(out.body, make_const(1.0)));
    out.mass = evaluate(out.den, out.sigma0);
    if (out.mass <= 0.0) throw Error("unsatisfiable observations: wp(S, 1) = 0");
    return out;
}

PredPtr ghost_eq(const std::string& g, const std::string& v) {
    return Pred::cmp(Pred::CmpOp::Eq, Expr::var(g), Expr::var(v));
}

// Forced outer conditional expectation of `t` at the initial state.
double outer_cwp(const Prepared& pre, const ExpPtr& t, MetricDiag* diag) {
    EvalFlags flags;
    double num = evaluate(simplify(wp(pre.body, t)), pre.sigma0, &flags);
    if (diag) diag->zero_over_zero |= flags.zero_over_zero;
    return num / pre.mass;
}

double scale(double nats_or_inf, double log_base) {
    return nats_or_inf / std::log(log_base);
}

// Over-approximate terminal value sets per variable (ignores guards), used
// only for KL support diagnostics.
using Support = std::set<double>;

Support expr_support(const ExprPtr& e, const std::map<std::string, Support>& env) {
    switch (e->kind) {
        case Expr::Kind::Number:
            return {e->number};
        case Expr::Kind::ParamRef:
            throw Error("unresolved parameter in support analysis");
        case Expr::Kind::VarRef: {
            auto it = env.find(e->name);
            return it == env.end() ? Support{0.0} : it->second;
        }
        default: {
            auto ls = expr_support(e->lhs, env);
            auto rs = expr_support(e->rhs, env);
            Support out;
            for (double a : ls)
                for (double b : rs) {
                    if (out.size() > 4096) return out;
                    switch (e->kind) {
                        case Expr::Kind::Add: out.insert(a + b); break;
                        case Expr::Kind::Sub: out.insert(a - b); break;
                        default: out.insert(a * b); break;
                    }
                }
            return out;
        }
    }
}

void support_pass(const StmtPtr& s, std::map<std::string, Support>& env) {
    if (!s) return;
    switch (s->kind) {
        case Stmt::Kind::Skip:
        case Stmt::Kind::Observe:
            return;
        case Stmt::Kind::Seq:
            support_pass(s->first, env);
            support_pass(s->second, env);
            return;
        case Stmt::Kind::Assign:
            env[s->var] = expr_support(s->expr, env);
            return;
        case Stmt::Kind::Sample: {
            Support vals;
            if (s->dist->kind == Dist::Kind::Bernoulli) {
                vals = {0.0, 1.0};
            } else if (s->dist->kind == Dist::Kind::Categorical) {
                for (const auto& [v, _] : s->dist->support) vals.insert(v);
            } else {
                throw Error("continuous distribution in support analysis");
            }
            env[s->var] = std::move(vals);
            return;
        }
        case Stmt::Kind::If: {
            auto then_env = env;
            support_pass(s->first, then_env);
            auto else_env = env;
            support_pass(s->second, else_env);
            env = std::move(then_env);
            for (const auto& [v, vals] : else_env) env[v].insert(vals.begin(), vals.end());
            return;
        }
        case Stmt::Kind::For:
            support_pass(s->first, env);
            return;
    }
}

// Marginal probability P(var = value | observes) at termination.
double terminal_prob(const Prepared& pre, const std::string& var, double value) {
    auto bracket = make_iverson(
        Pred::cmp(Pred::CmpOp::Eq, Expr::var(var), Expr::num(value)));
    return evaluate(simplify(wp(pre.body, bracket)), pre.sigma0) / pre.mass;
}

}  // namespace

double entropy(const Program& p, const ParamEnv& overrides, const std::string& x,
               double log_base, MetricDiag* diag) {
    auto pre = prepare(p, overrides);
    std::string g = ghost(x);
    auto inner = make_quotient(simplify(wp(pre.body, make_iverson(ghost_eq(g, x)))), pre.den);
    auto t = subst(make_neglog(inner), g, Expr::var(x));
    return scale(outer_cwp(pre, t, diag), log_base);
}

double cond_entropy(const Program& p, const ParamEnv& overrides, const std::string& x,
                    const std::string& y, double log_base, MetricDiag* diag) {
    auto pre = prepare(p, overrides);
    std::string gx = ghost(x), gy = ghost(y);
    auto joint = simplify(
        wp(pre.body, make_iverson(Pred::conj(ghost_eq(gx, x), ghost_eq(gy, y)))));
    auto marg = simplify(wp(pre.body, make_iverson(ghost_eq(gy, y))));
    auto t = make_neglog(make_quotient(joint, marg));
    t = subst(subst(t, gx, Expr::var(x)), gy, Expr::var(y));
    return scale(outer_cwp(pre, t, diag), log_base);
}

double kl(const Program& p, const ParamEnv& overrides, const std::string& x,
          const std::string& y, double log_base, MetricDiag* diag) {
    auto pre = prepare(p, overrides);
    std::string g = ghost(x);
    auto px = simplify(wp(pre.body, make_iverson(ghost_eq(g, x))));
    auto py = simplify(wp(pre.body, make_iverson(ghost_eq(g, y))));
    auto t = subst(make_log(make_quotient(px, py)), g, Expr::var(x));
    double value = scale(outer_cwp(pre, t, diag), log_base);
    if (diag && std::isinf(value)) {
        std::map<std::string, Support> env;
        support_pass(pre.body, env);
        Support candidates = env[x];
        candidates.insert(env[y].begin(), env[y].end());
        for (double v : candidates)
            if (terminal_prob(pre, x, v) > 1e-12 && terminal_prob(pre, y, v) <= 0.0)
                diag->kl_support_violations.push_back(v);
    }
    return value;
}

double mutual_information(const Program& p, const ParamEnv& overrides, const std::string& x,
                          const std::string& y, double log_base, MetricDiag* diag) {
    return entropy(p, overrides, x, log_base, diag) -
           cond_entropy(p, overrides, x, y, log_base, diag);
}

}  // namespace leakscope::wpe
