#include "leakscope/expectation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace leakscope::symbolic {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
const ParamEnv kNoParams{};
}  // namespace

ExpPtr make_const(double v) {
    auto n = std::make_shared<ExpNode>();
    n->kind = ExpNode::Kind::Constant;
    n->value = v;
    return n;
}

ExpPtr make_var(const std::string& name) {
    auto n = std::make_shared<ExpNode>();
    n->kind = ExpNode::Kind::Var;
    n->name = name;
    return n;
}

ExpPtr make_sum(std::vector<ExpPtr> terms) {
    if (terms.empty()) return make_const(0.0);
    if (terms.size() == 1) return terms.front();
    auto n = std::make_shared<ExpNode>();
    n->kind = ExpNode::Kind::Sum;
    n->terms = std::move(terms);
    return n;
}

ExpPtr make_product(std::vector<ExpPtr> factors) {
    if (factors.empty()) return make_const(1.0);
    if (factors.size() == 1) return factors.front();
    auto n = std::make_shared<ExpNode>();
    n->kind = ExpNode::Kind::Product;
    n->terms = std::move(factors);
    return n;
}

ExpPtr make_iverson(PredPtr p) {
    auto n = std::make_shared<ExpNode>();
    n->kind = ExpNode::Kind::Iverson;
    n->pred = std::move(p);
    return n;
}

ExpPtr make_neglog(ExpPtr x) {
    auto n = std::make_shared<ExpNode>();
    n->kind = ExpNode::Kind::NegLog;
    n->a = std::move(x);
    return n;
}

ExpPtr make_log(ExpPtr x) {
    auto n = std::make_shared<ExpNode>();
    n->kind = ExpNode::Kind::Log;
    n->a = std::move(x);
    return n;
}

ExpPtr make_quotient(ExpPtr num, ExpPtr den) {
    auto n = std::make_shared<ExpNode>();
    n->kind = ExpNode::Kind::Quotient;
    n->a = std::move(num);
    n->b = std::move(den);
    return n;
}

std::string ghost(const std::string& base) { return "-" + base; }
bool is_ghost(const std::string& name) { return !name.empty() && name[0] == '-'; }

ExpPtr from_expr(const ExprPtr& e) {
    switch (e->kind) {
        case Expr::Kind::Number:
            return make_const(e->number);
        case Expr::Kind::VarRef:
            return make_var(e->name);
        case Expr::Kind::ParamRef:
            throw lang::Error("unresolved parameter '" + e->name + "' in expectation");
        case Expr::Kind::Add:
            return make_sum({from_expr(e->lhs), from_expr(e->rhs)});
        case Expr::Kind::Sub:
            return make_sum(
                {from_expr(e->lhs), make_product({make_const(-1.0), from_expr(e->rhs)})});
        case Expr::Kind::Mul:
            return make_product({from_expr(e->lhs), from_expr(e->rhs)});
    }
    throw lang::Error("corrupt expression node");
}

// ---------------------------------------------------------------------------
// Substitution (also inside Iverson predicates)
// ---------------------------------------------------------------------------

namespace {

ExprPtr expr_subst(const ExprPtr& e, const std::string& v, const ExprPtr& repl) {
    switch (e->kind) {
        case Expr::Kind::Number:
        case Expr::Kind::ParamRef:
            return e;
        case Expr::Kind::VarRef:
            return e->name == v ? repl : e;
        default: {
            auto l = expr_subst(e->lhs, v, repl);
            auto r = expr_subst(e->rhs, v, repl);
            if (l == e->lhs && r == e->rhs) return e;
            return Expr::binary(e->kind, l, r);
        }
    }
}

PredPtr pred_subst(const PredPtr& p, const std::string& v, const ExprPtr& repl) {
    switch (p->kind) {
        case Pred::Kind::Cmp: {
            auto l = expr_subst(p->lhs, v, repl);
            auto r = expr_subst(p->rhs, v, repl);
            if (l == p->lhs && r == p->rhs) return p;
            return Pred::cmp(p->op, l, r);
        }
        case Pred::Kind::Not: {
            auto a = pred_subst(p->a, v, repl);
            return a == p->a ? p : Pred::negate(a);
        }
        case Pred::Kind::And: {
            auto a = pred_subst(p->a, v, repl);
            auto b = pred_subst(p->b, v, repl);
            return (a == p->a && b == p->b) ? p : Pred::conj(a, b);
        }
        case Pred::Kind::Or: {
            auto a = pred_subst(p->a, v, repl);
            auto b = pred_subst(p->b, v, repl);
            return (a == p->a && b == p->b) ? p : Pred::disj(a, b);
        }
    }
    return p;
}

}  // namespace

ExpPtr subst(const ExpPtr& x, const std::string& v, const ExprPtr& e) {
    switch (x->kind) {
        case ExpNode::Kind::Constant:
            return x;
        case ExpNode::Kind::Var:
            return x->name == v ? from_expr(e) : x;
        case ExpNode::Kind::Sum:
        case ExpNode::Kind::Product: {
            std::vector<ExpPtr> out;
            out.reserve(x->terms.size());
            bool changed = false;
            for (const auto& t : x->terms) {
                out.push_back(subst(t, v, e));
                changed |= out.back() != t;
            }
            if (!changed) return x;
            return x->kind == ExpNode::Kind::Sum ? make_sum(std::move(out))
                                                 : make_product(std::move(out));
        }
        case ExpNode::Kind::Iverson: {
            auto p = pred_subst(x->pred, v, e);
            return p == x->pred ? x : make_iverson(p);
        }
        case ExpNode::Kind::NegLog: {
            auto a = subst(x->a, v, e);
            return a == x->a ? x : make_neglog(a);
        }
        case ExpNode::Kind::Log: {
            auto a = subst(x->a, v, e);
            return a == x->a ? x : make_log(a);
        }
        case ExpNode::Kind::Quotient: {
            auto a = subst(x->a, v, e);
            auto b = subst(x->b, v, e);
            return (a == x->a && b == x->b) ? x : make_quotient(a, b);
        }
    }
    return x;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

double evaluate(const ExpPtr& x, const State& sigma, EvalFlags* flags) {
    switch (x->kind) {
        case ExpNode::Kind::Constant:
            return x->value;
        case ExpNode::Kind::Var: {
            auto it = sigma.find(x->name);
            if (it == sigma.end())
                throw lang::Error("expectation references unbound variable '" + x->name + "'");
            return it->second;
        }
        case ExpNode::Kind::Sum: {
            double acc = 0.0;
            for (const auto& t : x->terms) acc += evaluate(t, sigma, flags);
            return acc;
        }
        case ExpNode::Kind::Product: {
            // Two passes so that the 0 * inf = 0 convention holds regardless
            // of operand order.
            std::vector<double> vals;
            vals.reserve(x->terms.size());
            for (const auto& t : x->terms) {
                vals.push_back(evaluate(t, sigma, flags));
                if (vals.back() == 0.0) return 0.0;
            }
            double acc = 1.0;
            for (double v : vals) acc *= v;
            return acc;
        }
        case ExpNode::Kind::Iverson:
            return lang::eval_pred(*x->pred, sigma, kNoParams) ? 1.0 : 0.0;
        case ExpNode::Kind::NegLog: {
            double v = evaluate(x->a, sigma, flags);
            if (v < -1e-12)
                throw lang::Error("negative argument to -log (malformed expectation)");
            if (v > 1.0 + 1e-9)
                throw lang::Error("-log argument exceeds 1 (malformed expectation)");
            if (v <= 0.0) return kInf;
            return std::max(0.0, -std::log(v));
        }
        case ExpNode::Kind::Log: {
            double v = evaluate(x->a, sigma, flags);
            if (v < -1e-12)
                throw lang::Error("negative argument to log (malformed expectation)");
            if (v <= 0.0) return -kInf;
            return std::log(v);
        }
        case ExpNode::Kind::Quotient: {
            double n = evaluate(x->a, sigma, flags);
            double d = evaluate(x->b, sigma, flags);
            if (d == 0.0) {
                if (n == 0.0) {
                    if (flags) flags->zero_over_zero = true;
                    return 0.0;
                }
                return kInf;
            }
            return n / d;
        }
    }
    throw lang::Error("corrupt expectation node");
}

double expected_value(const ExpPtr& x, const std::vector<std::pair<State, double>>& pmf,
                      EvalFlags* flags) {
    double acc = 0.0;
    for (const auto& [sigma, w] : pmf) {
        if (w == 0.0) continue;  // 0 * inf = 0
        acc += w * evaluate(x, sigma, flags);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Simplification
// ---------------------------------------------------------------------------

namespace {

bool expr_has_var(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Number:
        case Expr::Kind::ParamRef:
            return false;
        case Expr::Kind::VarRef:
            return true;
        default:
            return expr_has_var(*e.lhs) || expr_has_var(*e.rhs);
    }
}

bool pred_has_var(const Pred& p) {
    switch (p.kind) {
        case Pred::Kind::Cmp:
            return expr_has_var(*p.lhs) || expr_has_var(*p.rhs);
        case Pred::Kind::Not:
            return pred_has_var(*p.a);
        default:
            return pred_has_var(*p.a) || pred_has_var(*p.b);
    }
}

// Extract `var == number` shape (either operand order).
bool eq_var_value(const Pred& p, std::string& var, double& value) {
    if (p.kind != Pred::Kind::Cmp || p.op != Pred::CmpOp::Eq) return false;
    if (p.lhs->kind == Expr::Kind::VarRef && p.rhs->kind == Expr::Kind::Number) {
        var = p.lhs->name;
        value = p.rhs->number;
        return true;
    }
    if (p.rhs->kind == Expr::Kind::VarRef && p.lhs->kind == Expr::Kind::Number) {
        var = p.rhs->name;
        value = p.lhs->number;
        return true;
    }
    return false;
}

void flatten_into(ExpNode::Kind kind, const ExpPtr& n, std::vector<ExpPtr>& out) {
    if (n->kind == kind) {
        for (const auto& t : n->terms) flatten_into(kind, t, out);
    } else {
        out.push_back(n);
    }
}

}  // namespace

ExpPtr simplify(const ExpPtr& x) {
    switch (x->kind) {
        case ExpNode::Kind::Constant:
        case ExpNode::Kind::Var:
            return x;

        case ExpNode::Kind::Iverson: {
            if (!pred_has_var(*x->pred))
                return make_const(lang::eval_pred(*x->pred, {}, kNoParams) ? 1.0 : 0.0);
            if (x->pred->kind == Pred::Kind::Cmp && x->pred->op == Pred::CmpOp::Eq &&
                lang::print_expr(*x->pred->lhs) == lang::print_expr(*x->pred->rhs))
                return make_const(1.0);
            return x;
        }

        case ExpNode::Kind::Sum: {
            std::vector<ExpPtr> flat;
            for (const auto& t : x->terms) flatten_into(ExpNode::Kind::Sum, simplify(t), flat);
            double c = 0.0;
            std::vector<ExpPtr> rest;
            for (const auto& t : flat) {
                if (t->kind == ExpNode::Kind::Constant)
                    c += t->value;
                else
                    rest.push_back(t);
            }
            if (c != 0.0 || rest.empty()) rest.push_back(make_const(c));
            return make_sum(std::move(rest));
        }

        case ExpNode::Kind::Product: {
            std::vector<ExpPtr> flat;
            for (const auto& t : x->terms) flatten_into(ExpNode::Kind::Product, simplify(t), flat);
            double c = 1.0;
            std::vector<ExpPtr> rest;
            std::map<std::string, double> eq_bindings;  // var -> pinned value
            std::vector<std::string> seen_iversons;
            for (const auto& t : flat) {
                if (t->kind == ExpNode::Kind::Constant) {
                    if (t->value == 0.0) return make_const(0.0);
                    c *= t->value;
                    continue;
                }
                if (t->kind == ExpNode::Kind::Iverson) {
                    std::string v;
                    double val;
                    if (eq_var_value(*t->pred, v, val)) {
                        auto it = eq_bindings.find(v);
                        if (it != eq_bindings.end()) {
                            if (it->second != val) return make_const(0.0);
                            continue;  // duplicate constraint
                        }
                        eq_bindings[v] = val;
                    } else {
                        std::string key = lang::print_pred(*t->pred);
                        if (std::find(seen_iversons.begin(), seen_iversons.end(), key) !=
                            seen_iversons.end())
                            continue;
                        seen_iversons.push_back(key);
                    }
                }
                rest.push_back(t);
            }
            if (c != 1.0 || rest.empty()) rest.insert(rest.begin(), make_const(c));
            return make_product(std::move(rest));
        }

        case ExpNode::Kind::NegLog: {
            auto a = simplify(x->a);
            if (a->kind == ExpNode::Kind::Constant) {
                if (a->value <= 0.0) return make_const(kInf);
                if (a->value <= 1.0 + 1e-9) return make_const(std::max(0.0, -std::log(a->value)));
            }
            return a == x->a ? x : make_neglog(a);
        }

        case ExpNode::Kind::Log: {
            auto a = simplify(x->a);
            if (a->kind == ExpNode::Kind::Constant && a->value > 0.0)
                return make_const(std::log(a->value));
            return a == x->a ? x : make_log(a);
        }

        case ExpNode::Kind::Quotient: {
            auto a = simplify(x->a);
            auto b = simplify(x->b);
            if (a->kind == ExpNode::Kind::Constant && a->value == 0.0) return a;
            if (b->kind == ExpNode::Kind::Constant && b->value == 1.0) return a;
            if (a->kind == ExpNode::Kind::Constant && b->kind == ExpNode::Kind::Constant &&
                b->value != 0.0)
                return make_const(a->value / b->value);
            return (a == x->a && b == x->b) ? x : make_quotient(a, b);
        }
    }
    return x;
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

std::string print(const ExpPtr& x) {
    switch (x->kind) {
        case ExpNode::Kind::Constant: {
            std::ostringstream os;
            os.precision(12);
            os << x->value;
            return os.str();
        }
        case ExpNode::Kind::Var:
            return x->name;
        case ExpNode::Kind::Sum:
        case ExpNode::Kind::Product: {
            std::vector<std::string> parts;
            parts.reserve(x->terms.size());
            for (const auto& t : x->terms) {
                std::string s = print(t);
                bool paren = x->kind == ExpNode::Kind::Product &&
                             (t->kind == ExpNode::Kind::Sum);
                parts.push_back(paren ? "(" + s + ")" : s);
            }
            std::sort(parts.begin(), parts.end());
            std::string sep = x->kind == ExpNode::Kind::Sum ? " + " : " * ";
            std::string out;
            for (size_t i = 0; i < parts.size(); ++i) {
                if (i) out += sep;
                out += parts[i];
            }
            return out;
        }
        case ExpNode::Kind::Iverson:
            return "[" + lang::print_pred(*x->pred) + "]";
        case ExpNode::Kind::NegLog:
            return "-log(" + print(x->a) + ")";
        case ExpNode::Kind::Log:
            return "log(" + print(x->a) + ")";
        case ExpNode::Kind::Quotient:
            return "(" + print(x->a) + ") / (" + print(x->b) + ")";
    }
    return "?";
}

}  // namespace leakscope::symbolic
