#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "leakscope/ast.hpp"

namespace leakscope::symbolic {

using lang::Expr;
using lang::ExprPtr;
using lang::ParamEnv;
using lang::Pred;
using lang::PredPtr;
using lang::State;

// A symbolic expectation: a nonnegative extended-real-valued function of a
// program state. Quotients appear only when a conditional expectation is
// forced; Log (without the sign flip) only inside the KL computation.
struct ExpNode;
using ExpPtr = std::shared_ptr<const ExpNode>;

struct ExpNode {
    enum class Kind { Constant, Var, Sum, Product, Iverson, NegLog, Log, Quotient };
    Kind kind;
    double value = 0.0;             // Constant (may be +inf)
    std::string name;               // Var
    std::vector<ExpPtr> terms;      // Sum / Product
    PredPtr pred;                   // Iverson
    ExpPtr a, b;                    // NegLog/Log (a), Quotient (a/b)
};

ExpPtr make_const(double v);
ExpPtr make_var(const std::string& name);
ExpPtr make_sum(std::vector<ExpPtr> terms);
ExpPtr make_product(std::vector<ExpPtr> factors);
ExpPtr make_iverson(PredPtr p);
ExpPtr make_neglog(ExpPtr x);
ExpPtr make_log(ExpPtr x);
ExpPtr make_quotient(ExpPtr num, ExpPtr den);

// Ghost variables live in a reserved namespace no parser identifier can
// collide with ('-' prefix). They are never assigned by program statements.
std::string ghost(const std::string& base);
bool is_ghost(const std::string& name);

// Lift a program expression into the expectation algebra.
ExpPtr from_expr(const ExprPtr& e);

// Capture-free substitution X[v := e] (also rewrites predicates inside
// Iverson brackets).
ExpPtr subst(const ExpPtr& x, const std::string& v, const ExprPtr& e);

struct EvalFlags {
    bool zero_over_zero = false;  // a forced conditional hit 0/0 (treated as 0)
};

// Evaluate at a state, in nats. -log(0) = inf; 0*inf = 0; 0/0 = 0 (flagged).
// Throws on negative intermediate values (malformed expectation).
double evaluate(const ExpPtr& x, const State& sigma, EvalFlags* flags = nullptr);

// Constant folding, Iverson resolution on ground predicates, 0/1 rules,
// sum/product flattening, contradictory-equality annihilation. Preserves
// evaluate() at every state.
ExpPtr simplify(const ExpPtr& x);

// Sum over a finite joint pmf: sum_sigma D(sigma) * X(sigma), with 0*inf = 0.
double expected_value(const ExpPtr& x, const std::vector<std::pair<State, double>>& pmf,
                      EvalFlags* flags = nullptr);

// Deterministic printer (sum terms ordered lexicographically).
std::string print(const ExpPtr& x);

}  // namespace leakscope::symbolic
