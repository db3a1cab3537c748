#include "leakscope/ast.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace leakscope::lang {

ExprPtr Expr::num(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Number;
    e->number = v;
    return e;
}

ExprPtr Expr::var(const std::string& n) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::VarRef;
    e->name = n;
    return e;
}

ExprPtr Expr::param(const std::string& n) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::ParamRef;
    e->name = n;
    return e;
}

ExprPtr Expr::binary(Kind k, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->lhs = std::move(a);
    e->rhs = std::move(b);
    return e;
}

PredPtr Pred::cmp(CmpOp op, ExprPtr l, ExprPtr r) {
    auto p = std::make_shared<Pred>();
    p->kind = Kind::Cmp;
    p->op = op;
    p->lhs = std::move(l);
    p->rhs = std::move(r);
    return p;
}

PredPtr Pred::negate(PredPtr x) {
    auto p = std::make_shared<Pred>();
    p->kind = Kind::Not;
    p->a = std::move(x);
    return p;
}

PredPtr Pred::conj(PredPtr x, PredPtr y) {
    auto p = std::make_shared<Pred>();
    p->kind = Kind::And;
    p->a = std::move(x);
    p->b = std::move(y);
    return p;
}

PredPtr Pred::disj(PredPtr x, PredPtr y) {
    auto p = std::make_shared<Pred>();
    p->kind = Kind::Or;
    p->a = std::move(x);
    p->b = std::move(y);
    return p;
}

StmtPtr Stmt::skip() {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::Skip;
    return s;
}

StmtPtr Stmt::seq(StmtPtr a, StmtPtr b) {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::Seq;
    s->first = std::move(a);
    s->second = std::move(b);
    return s;
}

StmtPtr Stmt::assign(std::string v, ExprPtr e, SourceLoc loc) {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::Assign;
    s->var = std::move(v);
    s->expr = std::move(e);
    s->loc = loc;
    return s;
}

StmtPtr Stmt::sample(std::string v, std::shared_ptr<const Dist> d, SourceLoc loc) {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::Sample;
    s->var = std::move(v);
    s->dist = std::move(d);
    s->loc = loc;
    return s;
}

StmtPtr Stmt::observe(PredPtr p, SourceLoc loc) {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::Observe;
    s->pred = std::move(p);
    s->loc = loc;
    return s;
}

StmtPtr Stmt::branch(PredPtr g, StmtPtr t, StmtPtr e, SourceLoc loc) {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::If;
    s->pred = std::move(g);
    s->first = std::move(t);
    s->second = std::move(e);
    s->loc = loc;
    return s;
}

StmtPtr Stmt::loop(std::string counter, int bound, StmtPtr body, SourceLoc loc) {
    auto s = std::make_shared<Stmt>();
    s->kind = Kind::For;
    s->var = std::move(counter);
    s->bound = bound;
    s->first = std::move(body);
    s->loc = loc;
    return s;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

double eval_expr(const Expr& e, const State& sigma, const ParamEnv& params) {
    switch (e.kind) {
        case Expr::Kind::Number:
            return e.number;
        case Expr::Kind::VarRef: {
            auto it = sigma.find(e.name);
            if (it == sigma.end()) throw Error("undefined variable '" + e.name + "'");
            return it->second;
        }
        case Expr::Kind::ParamRef: {
            auto it = params.find(e.name);
            if (it == params.end()) throw Error("unbound parameter '" + e.name + "'");
            return it->second;
        }
        case Expr::Kind::Add:
            return eval_expr(*e.lhs, sigma, params) + eval_expr(*e.rhs, sigma, params);
        case Expr::Kind::Sub:
            return eval_expr(*e.lhs, sigma, params) - eval_expr(*e.rhs, sigma, params);
        case Expr::Kind::Mul:
            return eval_expr(*e.lhs, sigma, params) * eval_expr(*e.rhs, sigma, params);
    }
    throw Error("corrupt expression node");
}

bool eval_pred(const Pred& p, const State& sigma, const ParamEnv& params) {
    switch (p.kind) {
        case Pred::Kind::Cmp: {
            double a = eval_expr(*p.lhs, sigma, params);
            double b = eval_expr(*p.rhs, sigma, params);
            switch (p.op) {
                case Pred::CmpOp::Eq: return a == b;
                case Pred::CmpOp::Lt: return a < b;
                case Pred::CmpOp::Gt: return a > b;
                case Pred::CmpOp::Le: return a <= b;
                case Pred::CmpOp::Ge: return a >= b;
            }
            break;
        }
        case Pred::Kind::Not:
            return !eval_pred(*p.a, sigma, params);
        case Pred::Kind::And:
            return eval_pred(*p.a, sigma, params) && eval_pred(*p.b, sigma, params);
        case Pred::Kind::Or:
            return eval_pred(*p.a, sigma, params) || eval_pred(*p.b, sigma, params);
    }
    throw Error("corrupt predicate node");
}

// ---------------------------------------------------------------------------
// Parameter binding
// ---------------------------------------------------------------------------

static double eval_param_expr(const ParamExpr& e, const ParamEnv& env) {
    switch (e.kind) {
        case ParamExpr::Kind::Number: return e.number;
        case ParamExpr::Kind::Ref: {
            auto it = env.find(e.name);
            if (it == env.end())
                throw Error("parameter default refers to unknown parameter '" + e.name + "'");
            return it->second;
        }
        case ParamExpr::Kind::Add: return eval_param_expr(*e.lhs, env) + eval_param_expr(*e.rhs, env);
        case ParamExpr::Kind::Sub: return eval_param_expr(*e.lhs, env) - eval_param_expr(*e.rhs, env);
        case ParamExpr::Kind::Mul: return eval_param_expr(*e.lhs, env) * eval_param_expr(*e.rhs, env);
        case ParamExpr::Kind::Div: return eval_param_expr(*e.lhs, env) / eval_param_expr(*e.rhs, env);
        case ParamExpr::Kind::Pow:
            return std::pow(eval_param_expr(*e.lhs, env), eval_param_expr(*e.rhs, env));
        case ParamExpr::Kind::Exp: return std::exp(eval_param_expr(*e.lhs, env));
        case ParamExpr::Kind::Ln: return std::log(eval_param_expr(*e.lhs, env));
        case ParamExpr::Kind::Neg: return -eval_param_expr(*e.lhs, env);
    }
    throw Error("corrupt parameter expression");
}

ParamEnv bind_params(const std::vector<ParamDecl>& decls, const ParamEnv& overrides) {
    ParamEnv env;
    for (const auto& d : decls) {
        auto ov = overrides.find(d.name);
        if (ov != overrides.end()) {
            env[d.name] = ov->second;
        } else if (d.default_value) {
            env[d.name] = eval_param_expr(*d.default_value, env);
        } else {
            throw Error("parameter '" + d.name + "' has no default and no binding");
        }
    }
    for (const auto& [name, _] : overrides) {
        if (!env.count(name)) throw Error("binding for undeclared parameter '" + name + "'");
    }
    return env;
}

// ---------------------------------------------------------------------------
// Variable discovery
// ---------------------------------------------------------------------------

static void collect_vars(const StmtPtr& s, std::vector<std::string>& out,
                         std::set<std::string>& seen) {
    if (!s) return;
    auto add = [&](const std::string& v) {
        if (seen.insert(v).second) out.push_back(v);
    };
    switch (s->kind) {
        case Stmt::Kind::Skip: break;
        case Stmt::Kind::Seq:
            collect_vars(s->first, out, seen);
            collect_vars(s->second, out, seen);
            break;
        case Stmt::Kind::Assign:
        case Stmt::Kind::Sample:
            add(s->var);
            break;
        case Stmt::Kind::Observe: break;
        case Stmt::Kind::If:
            collect_vars(s->first, out, seen);
            collect_vars(s->second, out, seen);
            break;
        case Stmt::Kind::For:
            add(s->var);
            collect_vars(s->first, out, seen);
            break;
    }
}

std::vector<std::string> program_variables(const Program& p) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    collect_vars(p.body, out, seen);
    return out;
}

// ---------------------------------------------------------------------------
// Printers
// ---------------------------------------------------------------------------

static std::string fmt_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

static int expr_prec(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Add:
        case Expr::Kind::Sub: return 1;
        case Expr::Kind::Mul: return 2;
        default: return 3;
    }
}

static void print_expr_rec(const Expr& e, std::ostringstream& os, int parent_prec) {
    int prec = expr_prec(e);
    bool paren = prec < parent_prec;
    if (paren) os << "(";
    switch (e.kind) {
        case Expr::Kind::Number: os << fmt_number(e.number); break;
        case Expr::Kind::VarRef:
        case Expr::Kind::ParamRef: os << e.name; break;
        case Expr::Kind::Add:
            print_expr_rec(*e.lhs, os, prec);
            os << " + ";
            print_expr_rec(*e.rhs, os, prec + 1);
            break;
        case Expr::Kind::Sub:
            print_expr_rec(*e.lhs, os, prec);
            os << " - ";
            print_expr_rec(*e.rhs, os, prec + 1);
            break;
        case Expr::Kind::Mul:
            print_expr_rec(*e.lhs, os, prec);
            os << " * ";
            print_expr_rec(*e.rhs, os, prec + 1);
            break;
    }
    if (paren) os << ")";
}

std::string print_expr(const Expr& e) {
    std::ostringstream os;
    print_expr_rec(e, os, 0);
    return os.str();
}

static const char* cmp_text(Pred::CmpOp op) {
    switch (op) {
        case Pred::CmpOp::Eq: return "==";
        case Pred::CmpOp::Lt: return "<";
        case Pred::CmpOp::Gt: return ">";
        case Pred::CmpOp::Le: return "<=";
        case Pred::CmpOp::Ge: return ">=";
    }
    return "?";
}

std::string print_pred(const Pred& p) {
    switch (p.kind) {
        case Pred::Kind::Cmp:
            return print_expr(*p.lhs) + " " + cmp_text(p.op) + " " + print_expr(*p.rhs);
        case Pred::Kind::Not:
            return "!(" + print_pred(*p.a) + ")";
        case Pred::Kind::And:
            return "(" + print_pred(*p.a) + ") && (" + print_pred(*p.b) + ")";
        case Pred::Kind::Or:
            return "(" + print_pred(*p.a) + ") || (" + print_pred(*p.b) + ")";
    }
    return "?";
}

static std::string print_dist(const Dist& d) {
    switch (d.kind) {
        case Dist::Kind::Bernoulli:
            return "bernoulli(" + print_expr(*d.p) + ")";
        case Dist::Kind::Categorical: {
            std::string out = "categorical(";
            for (size_t i = 0; i < d.support.size(); ++i) {
                if (i) out += ", ";
                out += fmt_number(d.support[i].first) + ": " + print_expr(*d.support[i].second);
            }
            return out + ")";
        }
        case Dist::Kind::Gauss:
            return "gauss(" + print_expr(*d.mean) + ", " + print_expr(*d.variance) + ")";
        case Dist::Kind::GmLit: {
            std::string out = "gm(";
            for (size_t i = 0; i < d.gm.size(); ++i) {
                if (i) out += ", ";
                out += print_expr(*d.gm[i].weight) + ": " + print_expr(*d.gm[i].mean) + ", " +
                       print_expr(*d.gm[i].variance);
            }
            return out + ")";
        }
    }
    return "?";
}

static void print_stmt(const StmtPtr& s, std::ostringstream& os, int indent) {
    if (!s) return;
    std::string pad(static_cast<size_t>(indent) * 2, ' ');
    switch (s->kind) {
        case Stmt::Kind::Skip:
            os << pad << "skip;\n";
            break;
        case Stmt::Kind::Seq:
            print_stmt(s->first, os, indent);
            print_stmt(s->second, os, indent);
            break;
        case Stmt::Kind::Assign:
            os << pad << s->var << " := " << print_expr(*s->expr) << ";\n";
            break;
        case Stmt::Kind::Sample:
            os << pad << s->var << " ~ " << print_dist(*s->dist) << ";\n";
            break;
        case Stmt::Kind::Observe:
            os << pad << "observe(" << print_pred(*s->pred) << ");\n";
            break;
        case Stmt::Kind::If:
            os << pad << "if (" << print_pred(*s->pred) << ") {\n";
            print_stmt(s->first, os, indent + 1);
            os << pad << "} else {\n";
            print_stmt(s->second, os, indent + 1);
            os << pad << "}\n";
            break;
        case Stmt::Kind::For:
            os << pad << "for " << s->var << " in 1.." << s->bound << " {\n";
            print_stmt(s->first, os, indent + 1);
            os << pad << "}\n";
            break;
    }
}

static void print_param_expr(const ParamExpr& e, std::ostringstream& os) {
    switch (e.kind) {
        case ParamExpr::Kind::Number: os << fmt_number(e.number); break;
        case ParamExpr::Kind::Ref: os << e.name; break;
        case ParamExpr::Kind::Add:
            os << "(";
            print_param_expr(*e.lhs, os);
            os << " + ";
            print_param_expr(*e.rhs, os);
            os << ")";
            break;
        case ParamExpr::Kind::Sub:
            os << "(";
            print_param_expr(*e.lhs, os);
            os << " - ";
            print_param_expr(*e.rhs, os);
            os << ")";
            break;
        case ParamExpr::Kind::Mul:
            os << "(";
            print_param_expr(*e.lhs, os);
            os << " * ";
            print_param_expr(*e.rhs, os);
            os << ")";
            break;
        case ParamExpr::Kind::Div:
            os << "(";
            print_param_expr(*e.lhs, os);
            os << " / ";
            print_param_expr(*e.rhs, os);
            os << ")";
            break;
        case ParamExpr::Kind::Pow:
            os << "(";
            print_param_expr(*e.lhs, os);
            os << " ^ ";
            print_param_expr(*e.rhs, os);
            os << ")";
            break;
        case ParamExpr::Kind::Exp:
            os << "exp(";
            print_param_expr(*e.lhs, os);
            os << ")";
            break;
        case ParamExpr::Kind::Ln:
            os << "ln(";
            print_param_expr(*e.lhs, os);
            os << ")";
            break;
        case ParamExpr::Kind::Neg:
            os << "(-";
            print_param_expr(*e.lhs, os);
            os << ")";
            break;
    }
}

std::string print_program(const Program& p) {
    std::ostringstream os;
    for (const auto& v : p.secret_vars) os << "//@ secret " << v << "\n";
    for (const auto& v : p.output_vars) os << "//@ output " << v << "\n";
    for (const auto& d : p.params) {
        os << "param " << d.name;
        if (d.default_value) {
            os << " = ";
            print_param_expr(*d.default_value, os);
        }
        os << ";\n";
    }
    print_stmt(p.body, os, 0);
    return os.str();
}

}  // namespace leakscope::lang
