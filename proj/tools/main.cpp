#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "leakscope/analysis.hpp"
#include "leakscope/parser.hpp"

namespace {

using namespace leakscope;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw lang::Error("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

lang::ParamEnv parse_bindings(const std::vector<std::string>& raw) {
    lang::ParamEnv env;
    for (const auto& b : raw) {
        auto eq = b.find('=');
        if (eq == std::string::npos) throw lang::Error("expected NAME=VALUE, got '" + b + "'");
        env[b.substr(0, eq)] = std::stod(b.substr(eq + 1));
    }
    return env;
}

std::optional<std::pair<std::string, double>> parse_observe(const std::string& raw) {
    if (raw.empty()) return std::nullopt;
    auto eq = raw.find('=');
    if (eq == std::string::npos) throw lang::Error("expected VAR=VALUE, got '" + raw + "'");
    return std::make_pair(raw.substr(0, eq), std::stod(raw.substr(eq + 1)));
}

void emit(const analysis::Report& rep, const std::string& format, const std::string& out_path) {
    std::string text = format == "csv" ? analysis::to_csv(rep) : analysis::to_json(rep);
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw lang::Error("cannot write file: " + out_path);
        out << text;
    }
}

int cmd_check(const std::string& path) {
    lang::Program p;
    try {
        p = lang::parse(read_file(path));
    } catch (const std::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    }
    auto r = analysis::check(p);
    std::cout << "parse: ok\n";
    std::cout << "variables:";
    for (const auto& v : r.variables)
        std::cout << " " << v << ":"
                  << (r.static_report.tags.at(v) == lang::VarTag::Discrete ? "discrete"
                                                                           : "continuous");
    std::cout << "\n";
    std::cout << "discrete-only: " << (r.static_report.discrete_only ? "true" : "false") << "\n";
    std::cout << "exact: " << (r.exactness.exact ? "true" : "false") << "\n";
    for (const auto& v : r.exactness.violations)
        std::cout << "warning: " << lang::condition_name(v.condition) << " (line " << v.loc.line
                  << "): " << v.message << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"leakscope: information-leakage analysis for probabilistic programs"};
    app.require_subcommand(1);

    std::string path, semantics = "auto", metric = "entropy", target, given, observe_raw;
    std::string log_base_raw = "", format = "json", out_path, table_case, corpus_dir = "corpus";
    std::vector<std::string> sweep_raw, bindings;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--semantics", semantics, "wpe | soga | auto")->default_str("auto");
        c->add_option("--metric", metric, "entropy | cond-entropy | kl | mi");
        c->add_option("--target", target, "target variable");
        c->add_option("--given", given, "conditioning variable (cond-entropy/kl/mi)");
        c->add_option("--observe", observe_raw, "append observe(VAR = VAL) to the program");
        c->add_option("-P,--param", bindings, "parameter binding NAME=VALUE");
        c->add_option("--log-base", log_base_raw, "2 | e (default: 2 for wpe, e for soga)");
        c->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
        c->add_option("--seed", seed, "RNG seed recorded in the report");
        c->add_option("--out", out_path, "write the report to a file instead of stdout");
    };

    auto* check_cmd = app.add_subcommand("check", "parse and static diagnostics");
    check_cmd->add_option("program", path, "program file")->required();

    auto* analyze_cmd = app.add_subcommand("analyze", "single-point analysis");
    analyze_cmd->add_option("program", path, "program file")->required();
    add_common(analyze_cmd);

    auto* sweep_cmd = app.add_subcommand("sweep", "parameter-grid analysis");
    sweep_cmd->add_option("program", path, "program file")->required();
    add_common(sweep_cmd);
    sweep_cmd
        ->add_option("--sweep", sweep_raw, "axis PARAM=START:STOP:STEPS (one or two)")
        ->required();

    auto* table_cmd = app.add_subcommand("table", "bundled case-study tables");
    table_cmd->add_option("case", table_case, "rr | gdp")->required();
    table_cmd->add_option("--corpus", corpus_dir, "corpus directory")->default_str("corpus");
    table_cmd->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    table_cmd->add_option("--out", out_path, "write the report to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    try {
        if (check_cmd->parsed()) return cmd_check(path);

        if (table_cmd->parsed()) {
            emit(analysis::table(table_case, corpus_dir), format, out_path);
            return 0;
        }

        analysis::AnalysisRequest req;
        req.semantics = analysis::parse_semantics(semantics);
        req.metric = analysis::parse_metric(metric);
        req.target = target;
        req.given = given;
        req.observe = parse_observe(observe_raw);
        req.params = parse_bindings(bindings);
        req.seed = seed;
        if (!log_base_raw.empty()) {
            if (log_base_raw == "2")
                req.log_base = 2.0;
            else if (log_base_raw == "e")
                req.log_base = std::exp(1.0);
            else
                throw lang::Error("--log-base must be 2 or e");
        }
        for (const auto& axis_raw : sweep_raw) {
            auto eq = axis_raw.find('=');
            if (eq == std::string::npos)
                throw lang::Error("expected PARAM=START:STOP:STEPS, got '" + axis_raw + "'");
            analysis::SweepAxis axis;
            axis.param = axis_raw.substr(0, eq);
            std::string spec = axis_raw.substr(eq + 1);
            auto c1 = spec.find(':'), c2 = spec.rfind(':');
            if (c1 == std::string::npos || c2 == c1)
                throw lang::Error("expected PARAM=START:STOP:STEPS, got '" + axis_raw + "'");
            axis.start = std::stod(spec.substr(0, c1));
            axis.stop = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
            axis.steps = std::stoi(spec.substr(c2 + 1));
            req.sweep.push_back(axis);
        }

        lang::Program p;
        try {
            p = lang::parse(read_file(path));
        } catch (const std::exception& e) {
            std::cerr << "parse error: " << e.what() << "\n";
            return 2;
        }
        emit(analysis::analyze(p, req), format, out_path);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
