#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace leakscope::lang {

struct SourceLoc {
    int line = 0;
    int col = 0;
};

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Statement expressions: constants, variables, parameters, + - * (incl. the
// product of two variables). Parameters are resolved numerically at analysis
// time via ParamEnv.
// ---------------------------------------------------------------------------

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { Number, VarRef, ParamRef, Add, Sub, Mul };
    Kind kind;
    double number = 0.0;
    std::string name;     // VarRef / ParamRef
    ExprPtr lhs, rhs;
    SourceLoc loc;

    static ExprPtr num(double v);
    static ExprPtr var(const std::string& n);
    static ExprPtr param(const std::string& n);
    static ExprPtr binary(Kind k, ExprPtr a, ExprPtr b);
};

// Predicates over expressions. A bare boolean variable `b` parses as b == 1.
struct Pred;
using PredPtr = std::shared_ptr<const Pred>;

struct Pred {
    enum class Kind { Cmp, Not, And, Or };
    enum class CmpOp { Eq, Lt, Gt, Le, Ge };
    Kind kind;
    CmpOp op = CmpOp::Eq;
    ExprPtr lhs, rhs;     // Cmp
    PredPtr a, b;         // Not (a), And/Or (a, b)

    static PredPtr cmp(CmpOp op, ExprPtr l, ExprPtr r);
    static PredPtr negate(PredPtr p);
    static PredPtr conj(PredPtr x, PredPtr y);
    static PredPtr disj(PredPtr x, PredPtr y);
};

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

struct Dist {
    enum class Kind { Bernoulli, Categorical, Gauss, GmLit };
    Kind kind;
    ExprPtr p;                                        // Bernoulli
    std::vector<std::pair<double, ExprPtr>> support;  // Categorical: (value, prob)
    ExprPtr mean, variance;                           // Gauss
    struct GmComp {
        ExprPtr weight, mean, variance;
    };
    std::vector<GmComp> gm;                           // GmLit
    SourceLoc loc;

    bool finite_support() const { return kind == Kind::Bernoulli || kind == Kind::Categorical; }
};

// ---------------------------------------------------------------------------
// Statements
// ---------------------------------------------------------------------------

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct Stmt {
    enum class Kind { Skip, Seq, Assign, Sample, Observe, If, For };
    Kind kind;
    StmtPtr first, second;   // Seq; If then/else; For body in `first`
    std::string var;         // Assign/Sample target, For counter
    ExprPtr expr;            // Assign rhs
    std::shared_ptr<const Dist> dist;  // Sample
    PredPtr pred;            // Observe / If guard
    int bound = 0;           // For
    SourceLoc loc;

    static StmtPtr skip();
    static StmtPtr seq(StmtPtr a, StmtPtr b);
    static StmtPtr assign(std::string v, ExprPtr e, SourceLoc loc = {});
    static StmtPtr sample(std::string v, std::shared_ptr<const Dist> d, SourceLoc loc = {});
    static StmtPtr observe(PredPtr p, SourceLoc loc = {});
    static StmtPtr branch(PredPtr g, StmtPtr t, StmtPtr e, SourceLoc loc = {});
    static StmtPtr loop(std::string counter, int bound, StmtPtr body, SourceLoc loc = {});
};

// ---------------------------------------------------------------------------
// Parameter declarations. Defaults are constant expressions over earlier
// parameters with + - * / ^ and exp()/ln(), evaluated at bind time.
// ---------------------------------------------------------------------------

struct ParamExpr;
using ParamExprPtr = std::shared_ptr<const ParamExpr>;

struct ParamExpr {
    enum class Kind { Number, Ref, Add, Sub, Mul, Div, Pow, Exp, Ln, Neg };
    Kind kind;
    double number = 0.0;
    std::string name;
    ParamExprPtr lhs, rhs;
};

struct ParamDecl {
    std::string name;
    ParamExprPtr default_value;  // may be null (must then be bound on the CLI)
    SourceLoc loc;
};

using ParamEnv = std::map<std::string, double>;

// Evaluate parameter defaults in declaration order; `overrides` pin values.
ParamEnv bind_params(const std::vector<ParamDecl>& decls, const ParamEnv& overrides);

// ---------------------------------------------------------------------------
// Program
// ---------------------------------------------------------------------------

struct Program {
    std::vector<ParamDecl> params;
    StmtPtr body;
    std::vector<std::string> secret_vars;   // //@ secret x
    std::vector<std::string> output_vars;   // //@ output y
};

// Concrete state used by evaluators (total map variable -> value).
using State = std::map<std::string, double>;

double eval_expr(const Expr& e, const State& sigma, const ParamEnv& params);
bool eval_pred(const Pred& p, const State& sigma, const ParamEnv& params);

// All variables assigned or sampled anywhere in the program, in first-use order.
std::vector<std::string> program_variables(const Program& p);

// Deterministic concrete-syntax printers (parse . print . parse == parse).
std::string print_expr(const Expr& e);
std::string print_pred(const Pred& p);
std::string print_program(const Program& p);

}  // namespace leakscope::lang
