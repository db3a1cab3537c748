#include "leakscope/checks.hpp"

#include <cmath>
#include <functional>
#include <optional>

namespace leakscope::lang {

// ---------------------------------------------------------------------------
// Loop unrolling
// ---------------------------------------------------------------------------

StmtPtr unroll_stmt(const StmtPtr& s) {
    if (!s) return s;
    switch (s->kind) {
        case Stmt::Kind::Skip:
        case Stmt::Kind::Assign:
        case Stmt::Kind::Sample:
        case Stmt::Kind::Observe:
            return s;
        case Stmt::Kind::Seq: {
            auto a = unroll_stmt(s->first);
            auto b = unroll_stmt(s->second);
            if (a == s->first && b == s->second) return s;
            return Stmt::seq(a, b);
        }
        case Stmt::Kind::If: {
            auto t = unroll_stmt(s->first);
            auto e = unroll_stmt(s->second);
            if (t == s->first && e == s->second) return s;
            return Stmt::branch(s->pred, t, e, s->loc);
        }
        case Stmt::Kind::For: {
            auto body = unroll_stmt(s->first);
            auto bump = Stmt::assign(
                s->var, Expr::binary(Expr::Kind::Add, Expr::var(s->var), Expr::num(1.0)), s->loc);
            StmtPtr out = Stmt::seq(body, bump);
            for (int i = 1; i < s->bound; ++i) out = Stmt::seq(out, Stmt::seq(body, bump));
            return Stmt::seq(Stmt::assign(s->var, Expr::num(1.0), s->loc), out);
        }
    }
    return s;
}

Program unroll(const Program& p) {
    Program out = p;
    out.body = unroll_stmt(p.body);
    return out;
}

// ---------------------------------------------------------------------------
// Discrete/continuous classification
// ---------------------------------------------------------------------------

namespace {

bool expr_discrete(const Expr& e, const std::map<std::string, VarTag>& tags) {
    switch (e.kind) {
        case Expr::Kind::Number:
        case Expr::Kind::ParamRef:
            return true;
        case Expr::Kind::VarRef: {
            auto it = tags.find(e.name);
            return it == tags.end() || it->second == VarTag::Discrete;
        }
        default:
            return expr_discrete(*e.lhs, tags) && expr_discrete(*e.rhs, tags);
    }
}

void tag_pass(const StmtPtr& s, std::map<std::string, VarTag>& tags, bool& changed) {
    if (!s) return;
    auto mark = [&](const std::string& v, VarTag t) {
        auto it = tags.find(v);
        if (it == tags.end()) {
            tags[v] = t;
            changed = true;
        } else if (it->second == VarTag::Discrete && t == VarTag::Continuous) {
            it->second = t;
            changed = true;
        }
    };
    switch (s->kind) {
        case Stmt::Kind::Skip:
        case Stmt::Kind::Observe:
            return;
        case Stmt::Kind::Seq:
            tag_pass(s->first, tags, changed);
            tag_pass(s->second, tags, changed);
            return;
        case Stmt::Kind::Assign:
            mark(s->var, expr_discrete(*s->expr, tags) ? VarTag::Discrete : VarTag::Continuous);
            return;
        case Stmt::Kind::Sample:
            mark(s->var,
                 s->dist->finite_support() ? VarTag::Discrete : VarTag::Continuous);
            return;
        case Stmt::Kind::If:
            tag_pass(s->first, tags, changed);
            tag_pass(s->second, tags, changed);
            return;
        case Stmt::Kind::For:
            mark(s->var, VarTag::Discrete);
            tag_pass(s->first, tags, changed);
            return;
    }
}

}  // namespace

StaticReport classify(const Program& p) {
    auto body = unroll_stmt(p.body);
    StaticReport rep;
    bool changed = true;
    while (changed) {
        changed = false;
        tag_pass(body, rep.tags, changed);
    }
    for (const auto& [_, tag] : rep.tags)
        if (tag == VarTag::Continuous) rep.discrete_only = false;
    return rep;
}

// ---------------------------------------------------------------------------
// Exactness of the mixture semantics (sufficient conditions)
// ---------------------------------------------------------------------------

namespace {

// Polynomial degree of an expression in the program variables; >1 means
// nonlinear (the only syntactic source is a product involving variables).
int expr_degree(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Number:
        case Expr::Kind::ParamRef:
            return 0;
        case Expr::Kind::VarRef:
            return 1;
        case Expr::Kind::Add:
        case Expr::Kind::Sub:
            return std::max(expr_degree(*e.lhs), expr_degree(*e.rhs));
        case Expr::Kind::Mul:
            return expr_degree(*e.lhs) + expr_degree(*e.rhs);
    }
    return 0;
}

bool expr_constant(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Number:
        case Expr::Kind::ParamRef:
            return true;
        case Expr::Kind::VarRef:
            return false;
        default:
            return expr_constant(*e.lhs) && expr_constant(*e.rhs);
    }
}

bool dist_constant(const Dist& d) {
    switch (d.kind) {
        case Dist::Kind::Bernoulli:
            return expr_constant(*d.p);
        case Dist::Kind::Categorical:
            for (const auto& [_, pe] : d.support)
                if (!expr_constant(*pe)) return false;
            return true;
        case Dist::Kind::Gauss:
            return expr_constant(*d.mean) && expr_constant(*d.variance);
        case Dist::Kind::GmLit:
            for (const auto& c : d.gm)
                if (!expr_constant(*c.weight) || !expr_constant(*c.mean) ||
                    !expr_constant(*c.variance))
                    return false;
            return true;
    }
    return false;
}

bool pred_discrete_only(const Pred& p, const std::map<std::string, VarTag>& tags) {
    switch (p.kind) {
        case Pred::Kind::Cmp:
            return expr_discrete(*p.lhs, tags) && expr_discrete(*p.rhs, tags);
        case Pred::Kind::Not:
            return pred_discrete_only(*p.a, tags);
        default:
            return pred_discrete_only(*p.a, tags) && pred_discrete_only(*p.b, tags);
    }
}

// observe(x == c) with a variable on one side and a constant on the other is
// handled exactly by Gaussian conditioning.
bool is_var_const_equality(const Pred& p) {
    if (p.kind != Pred::Kind::Cmp || p.op != Pred::CmpOp::Eq) return false;
    auto var_const = [](const Expr& a, const Expr& b) {
        return a.kind == Expr::Kind::VarRef && expr_constant(b);
    };
    return var_const(*p.lhs, *p.rhs) || var_const(*p.rhs, *p.lhs);
}

void walk(const StmtPtr& s, const std::map<std::string, VarTag>& tags, ExactnessReport& rep) {
    if (!s) return;
    auto flag = [&](ExactnessCondition c, const std::string& msg) {
        rep.exact = false;
        rep.violations.push_back({s->loc, c, msg});
    };
    switch (s->kind) {
        case Stmt::Kind::Skip:
            return;
        case Stmt::Kind::Seq:
            walk(s->first, tags, rep);
            walk(s->second, tags, rep);
            return;
        case Stmt::Kind::Assign:
            if (expr_degree(*s->expr) > 1)
                flag(ExactnessCondition::LinearAssignment,
                     "nonlinear assignment to '" + s->var + "': " + print_expr(*s->expr));
            return;
        case Stmt::Kind::Sample:
            if (!dist_constant(*s->dist))
                flag(ExactnessCondition::DistributionLiteral,
                     "distribution for '" + s->var + "' has non-constant parameters");
            return;
        case Stmt::Kind::Observe:
            if (!is_var_const_equality(*s->pred) && !pred_discrete_only(*s->pred, tags))
                flag(ExactnessCondition::ObservePredicate,
                     "observe predicate is neither an equality with a constant nor "
                     "discrete-only: " +
                         print_pred(*s->pred));
            return;
        case Stmt::Kind::If:
            if (!pred_discrete_only(*s->pred, tags))
                flag(ExactnessCondition::IfGuard,
                     "if-guard depends on continuous variables: " + print_pred(*s->pred));
            walk(s->first, tags, rep);
            walk(s->second, tags, rep);
            return;
        case Stmt::Kind::For:
            walk(s->first, tags, rep);
            return;
    }
}

}  // namespace

ExactnessReport check_exactness(const Program& p) {
    auto tags = classify(p).tags;
    ExactnessReport rep;
    walk(unroll_stmt(p.body), tags, rep);
    return rep;
}

// ---------------------------------------------------------------------------
// Parameter resolution
// ---------------------------------------------------------------------------

namespace {

ExprPtr resolve_expr(const ExprPtr& e, const ParamEnv& env) {
    switch (e->kind) {
        case Expr::Kind::Number:
        case Expr::Kind::VarRef:
            return e;
        case Expr::Kind::ParamRef: {
            auto it = env.find(e->name);
            if (it == env.end()) throw Error("unbound parameter '" + e->name + "'");
            return Expr::num(it->second);
        }
        default: {
            auto l = resolve_expr(e->lhs, env);
            auto r = resolve_expr(e->rhs, env);
            if (l == e->lhs && r == e->rhs) return e;
            return Expr::binary(e->kind, l, r);
        }
    }
}

PredPtr resolve_pred(const PredPtr& p, const ParamEnv& env) {
    switch (p->kind) {
        case Pred::Kind::Cmp: {
            auto l = resolve_expr(p->lhs, env);
            auto r = resolve_expr(p->rhs, env);
            if (l == p->lhs && r == p->rhs) return p;
            return Pred::cmp(p->op, l, r);
        }
        case Pred::Kind::Not: {
            auto a = resolve_pred(p->a, env);
            return a == p->a ? p : Pred::negate(a);
        }
        case Pred::Kind::And: {
            auto a = resolve_pred(p->a, env);
            auto b = resolve_pred(p->b, env);
            return (a == p->a && b == p->b) ? p : Pred::conj(a, b);
        }
        case Pred::Kind::Or: {
            auto a = resolve_pred(p->a, env);
            auto b = resolve_pred(p->b, env);
            return (a == p->a && b == p->b) ? p : Pred::disj(a, b);
        }
    }
    return p;
}

std::optional<double> const_value(const ExprPtr& e) {
    if (!expr_constant(*e)) return std::nullopt;
    static const ParamEnv empty;
    return eval_expr(*e, {}, empty);
}

std::shared_ptr<const Dist> resolve_dist(const std::shared_ptr<const Dist>& d,
                                         const ParamEnv& env, SourceLoc loc) {
    auto out = std::make_shared<Dist>(*d);
    auto where = [&] {
        return " (line " + std::to_string(loc.line) + ")";
    };
    auto check_prob_sum = [&](double sum) {
        if (std::abs(sum - 1.0) > 1e-12)
            throw Error("distribution weights sum to " + std::to_string(sum) + ", not 1" +
                        where());
    };
    switch (d->kind) {
        case Dist::Kind::Bernoulli: {
            out->p = resolve_expr(d->p, env);
            if (auto v = const_value(out->p); v && (*v < -1e-12 || *v > 1.0 + 1e-12))
                throw Error("bernoulli probability outside [0,1]" + where());
            break;
        }
        case Dist::Kind::Categorical: {
            double sum = 0.0;
            bool all_const = true;
            for (auto& [_, pe] : out->support) {
                pe = resolve_expr(pe, env);
                if (auto v = const_value(pe))
                    sum += *v;
                else
                    all_const = false;
            }
            if (all_const) check_prob_sum(sum);
            break;
        }
        case Dist::Kind::Gauss: {
            out->mean = resolve_expr(d->mean, env);
            out->variance = resolve_expr(d->variance, env);
            if (auto v = const_value(out->variance); v && *v < 0.0)
                throw Error("negative variance" + where());
            break;
        }
        case Dist::Kind::GmLit: {
            double sum = 0.0;
            bool all_const = true;
            for (auto& c : out->gm) {
                c.weight = resolve_expr(c.weight, env);
                c.mean = resolve_expr(c.mean, env);
                c.variance = resolve_expr(c.variance, env);
                if (auto v = const_value(c.variance); v && *v < 0.0)
                    throw Error("negative variance in mixture literal" + where());
                if (auto w = const_value(c.weight)) {
                    if (*w < -1e-12 || *w > 1.0 + 1e-12)
                        throw Error("mixture weight outside [0,1]" + where());
                    sum += *w;
                } else {
                    all_const = false;
                }
            }
            if (all_const) check_prob_sum(sum);
            break;
        }
    }
    return out;
}

}  // namespace

StmtPtr resolve_params(const StmtPtr& s, const ParamEnv& env) {
    if (!s) return s;
    switch (s->kind) {
        case Stmt::Kind::Skip:
            return s;
        case Stmt::Kind::Seq:
            return Stmt::seq(resolve_params(s->first, env), resolve_params(s->second, env));
        case Stmt::Kind::Assign:
            return Stmt::assign(s->var, resolve_expr(s->expr, env), s->loc);
        case Stmt::Kind::Sample:
            return Stmt::sample(s->var, resolve_dist(s->dist, env, s->loc), s->loc);
        case Stmt::Kind::Observe:
            return Stmt::observe(resolve_pred(s->pred, env), s->loc);
        case Stmt::Kind::If:
            return Stmt::branch(resolve_pred(s->pred, env), resolve_params(s->first, env),
                                resolve_params(s->second, env), s->loc);
        case Stmt::Kind::For:
            return Stmt::loop(s->var, s->bound, resolve_params(s->first, env), s->loc);
    }
    return s;
}

const char* condition_name(ExactnessCondition c) {
    switch (c) {
        case ExactnessCondition::LinearAssignment: return "linear-assignment";
        case ExactnessCondition::DistributionLiteral: return "distribution-literal";
        case ExactnessCondition::ObservePredicate: return "observe-predicate";
        case ExactnessCondition::IfGuard: return "if-guard";
    }
    return "?";
}

}  // namespace leakscope::lang
