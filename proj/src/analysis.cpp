#include "leakscope/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "leakscope/gm.hpp"
#include "leakscope/gm_metrics.hpp"
#include "leakscope/parser.hpp"
#include "leakscope/soga.hpp"
#include "leakscope/wpe.hpp"

namespace leakscope::analysis {

using json = nlohmann::json;
using gm::GaussianMixture;
using lang::Error;
using lang::Expr;
using lang::Pred;
using lang::Program;

namespace {

constexpr const char* kToolVersion = "leakscope 0.1.0";

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Program with_observe(const Program& p, const std::string& var, double value) {
    Program q = p;
    q.body = lang::Stmt::seq(
        p.body, lang::Stmt::observe(Pred::cmp(Pred::CmpOp::Eq, Expr::var(var), Expr::num(value))));
    return q;
}

double wpe_evidence(const Program& p, const lang::ParamEnv& overrides) {
    auto env = lang::bind_params(p.params, overrides);
    auto body = lang::resolve_params(lang::unroll(p).body, env);
    lang::State sigma0;
    for (const auto& v : lang::program_variables(p)) sigma0[v] = 0.0;
    return symbolic::evaluate(symbolic::simplify(wpe::wp(body, symbolic::make_const(1.0))),
                              sigma0);
}

GaussianMixture marginal1(const GaussianMixture& g, const std::string& var) {
    return gm::lump(gm::marginal(g, {var}));
}

void scale_result(MetricResult& r, double log_base) {
    double s = 1.0 / std::log(log_base);
    if (r.exact) *r.exact *= s;
    if (r.lower) *r.lower *= s;
    if (r.upper) *r.upper *= s;
}

MetricResult from_bounded(const gm_metrics::BoundedValue& b) {
    MetricResult r;
    r.lower = b.lower;
    r.upper = b.upper;
    r.lower_method = b.lower_method;
    r.upper_method = b.upper_method;
    r.exact = b.exact;
    r.exact_method = b.exact_method;
    return r;
}

Row run_point(const Program& p, const AnalysisRequest& req,
              const std::map<std::string, double>& point_params) {
    auto t0 = std::chrono::steady_clock::now();
    Row row;
    row.params = point_params;
    row.metric = metric_name(req.metric);

    if (req.target.empty()) throw Error("a target variable is required");
    bool needs_given = req.metric != Metric::Entropy;
    if (needs_given && req.given.empty())
        throw Error(std::string(metric_name(req.metric)) + " requires a --given variable");

    Program q = req.observe ? with_observe(p, req.observe->first, req.observe->second) : p;
    Semantics backend = req.semantics;
    if (backend == Semantics::Auto)
        backend = lang::classify(q).discrete_only ? Semantics::Wpe : Semantics::Soga;
    row.backend = semantics_name(backend);
    row.exact_semantics = lang::check_exactness(q).exact;

    if (backend == Semantics::Wpe) {
        double base = req.log_base.value_or(2.0);
        row.unit = base == 2.0 ? "bits" : "nats";
        double v = 0.0;
        switch (req.metric) {
            case Metric::Entropy: v = wpe::entropy(q, point_params, req.target, base); break;
            case Metric::CondEntropy:
                v = wpe::cond_entropy(q, point_params, req.target, req.given, base);
                break;
            case Metric::Kl: v = wpe::kl(q, point_params, req.target, req.given, base); break;
            case Metric::Mi:
                v = wpe::mutual_information(q, point_params, req.target, req.given, base);
                break;
        }
        row.result.exact = v;
        row.result.exact_method = "wp";
        row.evidence = wpe_evidence(q, point_params);
    } else {
        double base = req.log_base.value_or(std::exp(1.0));
        row.unit = base == 2.0 ? "bits" : "nats";
        auto run = soga::run_soga(q, point_params);
        row.evidence = run.evidence;
        switch (req.metric) {
            case Metric::Entropy:
                row.result = from_bounded(gm_metrics::entropy_bounds(marginal1(run.state, req.target)));
                break;
            case Metric::CondEntropy: {
                // When the conditioning variable is pinned by an observation
                // (Dirac in every component), H(x | y) degenerates to the
                // entropy of x in the conditioned state.
                int gi = run.state.index(req.given);
                bool pinned = true;
                for (const auto& comp : run.state.components)
                    pinned = pinned && gm::is_dirac(comp, gi);
                row.result = from_bounded(
                    pinned ? gm_metrics::entropy_bounds(marginal1(run.state, req.target))
                           : gm_metrics::cond_entropy_bounds(run.state, {req.target}, {req.given}));
                break;
            }
            case Metric::Kl:
                row.result = from_bounded(gm_metrics::kl_bounds(marginal1(run.state, req.target),
                                                                marginal1(run.state, req.given)));
                break;
            case Metric::Mi:
                row.result = from_bounded(gm_metrics::mi_bounds(run.state, {req.target}, {req.given}));
                break;
        }
        scale_result(row.result, base);
    }
    row.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                     .count();
    return row;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

json row_to_json(const Row& r) {
    json j;
    if (!r.label.empty()) j["label"] = r.label;
    j["params"] = r.params;
    j["backend"] = r.backend;
    j["metric"] = r.metric;
    j["unit"] = r.unit;
    j["exact_semantics"] = r.exact_semantics;
    json m;
    if (r.result.exact) {
        m["exact"] = *r.result.exact;
        m["exact_method"] = r.result.exact_method;
    }
    if (r.result.lower) {
        m["lower"] = *r.result.lower;
        m["lower_method"] = r.result.lower_method;
    }
    if (r.result.upper) {
        m["upper"] = *r.result.upper;
        m["upper_method"] = r.result.upper_method;
    }
    j["result"] = m;
    if (r.evidence) j["evidence"] = *r.evidence;
    json ref;
    if (r.ref_exact) {
        ref["exact"] = *r.ref_exact;
        if (r.result.exact) ref["delta_exact"] = *r.result.exact - *r.ref_exact;
    }
    if (r.ref_lower) {
        ref["lower"] = *r.ref_lower;
        if (r.result.lower) ref["delta_lower"] = *r.result.lower - *r.ref_lower;
    }
    if (r.ref_upper) {
        ref["upper"] = *r.ref_upper;
        if (r.result.upper) ref["delta_upper"] = *r.result.upper - *r.ref_upper;
    }
    if (!ref.empty()) j["reference"] = ref;
    if (!r.error.empty()) j["error"] = r.error;
    j["millis"] = r.millis;
    return j;
}

Row row_from_json(const json& j) {
    Row r;
    r.label = j.value("label", "");
    for (auto& [k, v] : j.at("params").items()) r.params[k] = v.get<double>();
    r.backend = j.value("backend", "");
    r.metric = j.value("metric", "");
    r.unit = j.value("unit", "");
    r.exact_semantics = j.value("exact_semantics", true);
    const json& m = j.at("result");
    if (m.contains("exact")) {
        r.result.exact = m["exact"].get<double>();
        r.result.exact_method = m.value("exact_method", "");
    }
    if (m.contains("lower")) {
        r.result.lower = m["lower"].get<double>();
        r.result.lower_method = m.value("lower_method", "");
    }
    if (m.contains("upper")) {
        r.result.upper = m["upper"].get<double>();
        r.result.upper_method = m.value("upper_method", "");
    }
    if (j.contains("evidence")) r.evidence = j["evidence"].get<double>();
    if (j.contains("reference")) {
        const json& ref = j["reference"];
        if (ref.contains("exact")) r.ref_exact = ref["exact"].get<double>();
        if (ref.contains("lower")) r.ref_lower = ref["lower"].get<double>();
        if (ref.contains("upper")) r.ref_upper = ref["upper"].get<double>();
    }
    r.error = j.value("error", "");
    r.millis = j.value("millis", 0.0);
    return r;
}

}  // namespace

const char* semantics_name(Semantics s) {
    switch (s) {
        case Semantics::Wpe: return "wpe";
        case Semantics::Soga: return "soga";
        case Semantics::Auto: return "auto";
    }
    return "?";
}

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::Entropy: return "entropy";
        case Metric::CondEntropy: return "cond-entropy";
        case Metric::Kl: return "kl";
        case Metric::Mi: return "mi";
    }
    return "?";
}

Semantics parse_semantics(const std::string& s) {
    if (s == "wpe") return Semantics::Wpe;
    if (s == "soga") return Semantics::Soga;
    if (s == "auto") return Semantics::Auto;
    throw Error("unknown semantics '" + s + "' (expected wpe, soga, or auto)");
}

Metric parse_metric(const std::string& s) {
    if (s == "entropy") return Metric::Entropy;
    if (s == "cond-entropy") return Metric::CondEntropy;
    if (s == "kl") return Metric::Kl;
    if (s == "mi") return Metric::Mi;
    throw Error("unknown metric '" + s + "' (expected entropy, cond-entropy, kl, or mi)");
}

CheckResult check(const Program& p) {
    CheckResult r;
    r.variables = lang::program_variables(p);
    r.static_report = lang::classify(p);
    r.exactness = lang::check_exactness(p);
    return r;
}

Report analyze(const Program& p, const AnalysisRequest& req) {
    Report rep;
    rep.tool_version = kToolVersion;
    rep.seed = req.seed;
    if (req.sweep.size() > 2) throw Error("at most two sweep axes are supported");

    std::vector<std::map<std::string, double>> grid{req.params};
    for (const auto& axis : req.sweep) {
        if (axis.steps < 1) throw Error("sweep steps must be >= 1");
        std::vector<std::map<std::string, double>> next;
        for (const auto& base : grid)
            for (int i = 0; i < axis.steps; ++i) {
                auto pt = base;
                pt[axis.param] = axis.steps == 1
                                     ? axis.start
                                     : axis.start + i * (axis.stop - axis.start) / (axis.steps - 1);
                next.push_back(std::move(pt));
            }
        grid = std::move(next);
    }

    bool single = req.sweep.empty();
    for (const auto& pt : grid) {
        try {
            rep.rows.push_back(run_point(p, req, pt));
        } catch (const std::exception& e) {
            if (single) throw;
            Row row;
            row.params = pt;
            row.metric = metric_name(req.metric);
            row.error = e.what();
            rep.rows.push_back(std::move(row));
        }
    }
    return rep;
}

namespace {

Report table_rr(const std::string& corpus_dir) {
    Program alg1 = lang::parse(read_file(corpus_dir + "/alg1.ppl"));
    Report rep;
    rep.tool_version = kToolVersion;
    struct Cell {
        std::string label;
        Metric metric;
        double eps, ref;
    };
    const Cell cells[] = {
        {"H(o_1) @ eps=0", Metric::Entropy, 0.0, 1.0},
        {"I(r_1;o_1) @ eps=0", Metric::Mi, 0.0, 0.0},
        {"I(r_1;o_1) @ eps=0.1", Metric::Mi, 0.1, 0.002},
        {"I(r_1;o_1) @ eps=10", Metric::Mi, 10.0, 0.999},
    };
    for (const auto& c : cells) {
        AnalysisRequest req;
        req.semantics = Semantics::Wpe;
        req.metric = c.metric;
        req.target = c.metric == Metric::Entropy ? "o_1" : "r_1";
        if (c.metric != Metric::Entropy) req.given = "o_1";
        req.params = {{"p", 0.5}, {"eps", c.eps}};
        Row row = run_point(alg1, req, req.params);
        row.label = c.label;
        row.ref_exact = c.ref;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

Report table_gdp(const std::string& corpus_dir) {
    Program alg2 = lang::parse(read_file(corpus_dir + "/alg2.ppl"));
    Report rep;
    rep.tool_version = kToolVersion;

    struct Ref {
        double exact;
        std::optional<double> lower, upper;
    };
    // Published reference table, nats; the conditional rows fix the observed
    // release at output = 9 and the audited respondent at fem_1 = 1.
    const std::map<std::pair<std::string, int>, Ref> refs = {
        {{"H(inc_1)", 100}, {1.418938, {}, {}}},
        {{"H(inc_1|output=9)", 100}, {1.386703, 1.234257, 2.249604}},
        {{"H(inc_1|output)", 100}, {1.370381, -0.534517, 3.085123}},
        {{"I(inc_1;output)", 100}, {0.048557, -1.666184, 1.953455}},
        {{"KL(inc_1 posterior||prior)", 100}, {0.072827, -1.221348, 0.225273}},
        {{"H(inc_1)", 0}, {1.418938, {}, {}}},
        {{"H(inc_1|output=9)", 0}, {1.418931, 1.265505, 2.490682}},
        {{"H(inc_1|output)", 0}, {1.418933, -2.593989, 1.733485}},
        {{"I(inc_1;output)", 0}, {5e-6, -0.314547, 4.012927}},
        {{"KL(inc_1 posterior||prior)", 0}, {3e-8, -0.500000, 0.153426}},
    };

    bool exact_sem = lang::check_exactness(alg2).exact;
    for (double eps : {100.0, 0.1}) {
        int key = eps == 100.0 ? 100 : 0;
        lang::ParamEnv P{{"eps", eps}};
        Program cond = with_observe(alg2, "fem_1", 1.0);  // audit a present respondent
        auto plain = soga::run_soga(alg2, P);
        auto prior = soga::run_soga(cond, P);
        auto post = soga::run_soga(with_observe(cond, "output", 9.0), P);

        auto add = [&](const std::string& label, Metric metric, MetricResult result,
                       double evidence) {
            Row row;
            row.label = label;
            row.params = {{"eps", eps}};
            row.backend = "soga";
            row.metric = metric_name(metric);
            row.unit = "nats";
            row.result = std::move(result);
            row.exact_semantics = exact_sem;
            row.evidence = evidence;
            const Ref& ref = refs.at({label, key});
            row.ref_exact = ref.exact;
            row.ref_lower = ref.lower;
            row.ref_upper = ref.upper;
            rep.rows.push_back(std::move(row));
        };

        add("H(inc_1)", Metric::Entropy,
            from_bounded(gm_metrics::entropy_bounds(marginal1(plain.state, "inc_1"))),
            plain.evidence);
        add("H(inc_1|output=9)", Metric::Entropy,
            from_bounded(gm_metrics::entropy_bounds(marginal1(post.state, "inc_1"))),
            post.evidence);
        add("H(inc_1|output)", Metric::CondEntropy,
            from_bounded(gm_metrics::cond_entropy_bounds(prior.state, {"inc_1"}, {"output"})),
            prior.evidence);
        add("I(inc_1;output)", Metric::Mi,
            from_bounded(gm_metrics::mi_bounds(prior.state, {"inc_1"}, {"output"})),
            prior.evidence);
        add("KL(inc_1 posterior||prior)", Metric::Kl,
            from_bounded(gm_metrics::kl_bounds(marginal1(post.state, "inc_1"),
                                               marginal1(prior.state, "inc_1"))),
            post.evidence);
    }
    return rep;
}

}  // namespace

Report table(const std::string& case_id, const std::string& corpus_dir) {
    if (case_id == "rr") return table_rr(corpus_dir);
    if (case_id == "gdp") return table_gdp(corpus_dir);
    throw Error("unknown table case '" + case_id + "' (expected rr or gdp)");
}

std::string to_json(const Report& r) {
    json j;
    j["tool_version"] = r.tool_version;
    j["seed"] = r.seed;
    j["rows"] = json::array();
    for (const auto& row : r.rows) j["rows"].push_back(row_to_json(row));
    return j.dump(2);
}

Report from_json(const std::string& text) {
    json j = json::parse(text);
    Report r;
    r.tool_version = j.value("tool_version", "");
    r.seed = j.value("seed", std::uint64_t{0});
    for (const auto& row : j.at("rows")) r.rows.push_back(row_from_json(row));
    return r;
}

std::string to_csv(const Report& r) {
    bool any_label = false, any_error = false;
    std::vector<std::string> param_cols;
    for (const auto& row : r.rows) {
        any_label |= !row.label.empty();
        any_error |= !row.error.empty();
        for (const auto& [k, _] : row.params)
            if (std::find(param_cols.begin(), param_cols.end(), k) == param_cols.end())
                param_cols.push_back(k);
    }
    std::sort(param_cols.begin(), param_cols.end());

    std::ostringstream os;
    bool first = true;
    auto col = [&](const std::string& s) {
        os << (first ? "" : ",") << s;
        first = false;
    };
    if (any_label) col("row");
    for (const auto& k : param_cols) col(k);
    col("exact");
    col("lower");
    col("upper");
    col("exactness");
    col("evidence");
    if (any_error) col("error");
    os << "\n";

    for (const auto& row : r.rows) {
        first = true;
        if (any_label) col(row.label);
        for (const auto& k : param_cols) {
            auto it = row.params.find(k);
            col(it == row.params.end() ? "" : fmt(it->second));
        }
        col(row.result.exact ? fmt(*row.result.exact) : "");
        col(row.result.lower ? fmt(*row.result.lower) : "");
        col(row.result.upper ? fmt(*row.result.upper) : "");
        col(row.exact_semantics ? "true" : "false");
        col(row.evidence ? fmt(*row.evidence) : "");
        if (any_error) col(row.error);
        os << "\n";
    }
    return os.str();
}

}  // namespace leakscope::analysis
