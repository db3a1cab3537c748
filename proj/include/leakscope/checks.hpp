#pragma once

#include <map>
#include <string>
#include <vector>

#include "leakscope/ast.hpp"

namespace leakscope::lang {

// Replace every for-loop by counter initialization plus n unrolled copies of
// the body, each followed by a counter increment. Idempotent.
Program unroll(const Program& p);
StmtPtr unroll_stmt(const StmtPtr& s);

enum class VarTag { Discrete, Continuous };

struct StaticReport {
    std::map<std::string, VarTag> tags;
    bool discrete_only = true;
};

// Tag every variable as discrete (finite support provable) or continuous.
// Expects a parsed program; for-loops are unrolled internally.
StaticReport classify(const Program& p);

enum class ExactnessCondition {
    LinearAssignment,      // i:  assignment right-hand sides must be linear
    DistributionLiteral,   // ii: sampled distributions must be mixture literals
                           //     with constant parameters
    ObservePredicate,      // iii: observe is an equality or discrete-only
    IfGuard,               // iv:  if-guards depend only on discrete variables
};

struct ExactnessViolation {
    SourceLoc loc;
    ExactnessCondition condition;
    std::string message;
};

struct ExactnessReport {
    bool exact = true;
    std::vector<ExactnessViolation> violations;
};

// Sufficient conditions under which the mixture semantics is exact.
ExactnessReport check_exactness(const Program& p);

const char* condition_name(ExactnessCondition c);

// Replace parameter references by their bound numeric values. Distribution
// arguments that become constant are validated: categorical/mixture weights
// must sum to 1 (within 1e-12), variances must be nonnegative.
StmtPtr resolve_params(const StmtPtr& s, const ParamEnv& env);

}  // namespace leakscope::lang
