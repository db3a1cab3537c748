#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leakscope/ast.hpp"
#include "leakscope/checks.hpp"

namespace leakscope::analysis {

enum class Semantics { Wpe, Soga, Auto };
enum class Metric { Entropy, CondEntropy, Kl, Mi };

const char* semantics_name(Semantics s);
const char* metric_name(Metric m);
Semantics parse_semantics(const std::string& s);  // throws on unknown name
Metric parse_metric(const std::string& s);

struct SweepAxis {
    std::string param;
    double start = 0.0, stop = 0.0;
    int steps = 1;  // number of grid points (>= 1)
};

struct AnalysisRequest {
    Semantics semantics = Semantics::Auto;
    Metric metric = Metric::Entropy;
    std::string target;
    std::string given;  // cond-entropy / kl / mi
    std::optional<std::pair<std::string, double>> observe;
    lang::ParamEnv params;
    std::optional<double> log_base;  // default: 2 for wpe, e for soga
    std::vector<SweepAxis> sweep;    // empty for a single point; at most two axes
    std::uint64_t seed = 0;
};

struct MetricResult {
    std::optional<double> exact;
    std::optional<double> lower, upper;
    std::string exact_method, lower_method, upper_method;
};

struct Row {
    std::string label;                      // table row id; empty for analyze/sweep
    std::map<std::string, double> params;   // grid-point parameter values
    std::string backend;                    // "wpe" | "soga"
    std::string metric;
    std::string unit;                       // "bits" | "nats"
    MetricResult result;
    bool exact_semantics = true;            // sufficient-condition verdict
    std::optional<double> evidence;
    std::optional<double> ref_exact, ref_lower, ref_upper;  // published values
    std::string error;                      // nonempty when the point failed
    double millis = 0.0;
};

struct Report {
    std::string tool_version;
    std::uint64_t seed = 0;
    std::vector<Row> rows;
};

// Parse/static/exactness diagnostics for `check`.
struct CheckResult {
    std::vector<std::string> variables;
    lang::StaticReport static_report;
    lang::ExactnessReport exactness;
};

CheckResult check(const lang::Program& p);

// Single point or sweep grid, dispatching to the wpe or mixture backend.
// Failed sweep points are recorded in Row::error; a failed single point throws.
Report analyze(const lang::Program& p, const AnalysisRequest& req);

// Bundled case studies with per-cell deltas against published values.
// Corpus programs are loaded from `corpus_dir`.
Report table(const std::string& case_id, const std::string& corpus_dir);

std::string to_json(const Report& r);
std::string to_csv(const Report& r);
Report from_json(const std::string& text);  // round-trip of to_json

}  // namespace leakscope::analysis
