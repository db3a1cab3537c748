#include "leakscope/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "leakscope/checks.hpp"

namespace leakscope::oracle {

using lang::Dist;
using lang::Error;
using lang::Expr;
using lang::Pred;
using lang::Program;
using lang::State;
using lang::Stmt;
using lang::StmtPtr;

namespace {

constexpr std::size_t kPathBudget = std::size_t{1} << 20;

// splitmix64 (Steele, Lea, Flood 2014); full 53-bit uniform doubles.
struct SplitMix64 {
    std::uint64_t s;
    explicit SplitMix64(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        s += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

struct BoxMuller {
    SplitMix64& rng;
    bool have_spare = false;
    double spare = 0.0;
    double operator()() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        double u1 = rng.uniform(), u2 = rng.uniform();
        while (u1 <= 0.0) u1 = rng.uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare = r * std::sin(2.0 * M_PI * u2);
        have_spare = true;
        return r * std::cos(2.0 * M_PI * u2);
    }
};

double const_value(const lang::ExprPtr& e, const char* what) {
    if (!e || e->kind != Expr::Kind::Number)
        throw Error(std::string("oracle: non-constant ") + what +
                    " (parameters must be resolved first)");
    return e->number;
}

std::vector<std::pair<double, double>> finite_support(const Dist& d) {
    std::vector<std::pair<double, double>> out;
    if (d.kind == Dist::Kind::Bernoulli) {
        double p = const_value(d.p, "bernoulli parameter");
        out = {{1.0, p}, {0.0, 1.0 - p}};
    } else if (d.kind == Dist::Kind::Categorical) {
        for (const auto& [v, pe] : d.support) out.emplace_back(v, const_value(pe, "weight"));
    } else {
        throw Error("oracle.enumerate: continuous distribution encountered");
    }
    return out;
}

using Sink = std::function<void(const State&, double)>;

void exec_paths(const StmtPtr& s, const State& sigma, double w, std::size_t& leaves,
                const Sink& k) {
    static const lang::ParamEnv kEmpty;
    switch (s->kind) {
        case Stmt::Kind::Skip:
            k(sigma, w);
            return;
        case Stmt::Kind::Seq:
            exec_paths(s->first, sigma, w, leaves,
                       [&](const State& s2, double w2) { exec_paths(s->second, s2, w2, leaves, k); });
            return;
        case Stmt::Kind::Assign: {
            State next = sigma;
            next[s->var] = lang::eval_expr(*s->expr, sigma, kEmpty);
            k(next, w);
            return;
        }
        case Stmt::Kind::Sample: {
            for (const auto& [v, p] : finite_support(*s->dist)) {
                if (p <= 0.0) continue;
                if (++leaves > kPathBudget) throw Error("oracle.enumerate: path budget exceeded");
                State next = sigma;
                next[s->var] = v;
                k(next, w * p);
            }
            return;
        }
        case Stmt::Kind::Observe:
            if (lang::eval_pred(*s->pred, sigma, kEmpty)) k(sigma, w);
            return;
        case Stmt::Kind::If:
            exec_paths(lang::eval_pred(*s->pred, sigma, kEmpty) ? s->first : s->second, sigma, w,
                       leaves, k);
            return;
        case Stmt::Kind::For:
            exec_paths(lang::unroll_stmt(s), sigma, w, leaves, k);
            return;
    }
    throw Error("oracle: unreachable statement kind");
}

void collect_pred_vars(const Pred& p, bool& has_eq, std::set<std::string>& eq_vars) {
    if (p.kind == Pred::Kind::Cmp) {
        std::function<void(const Expr&)> walk = [&](const Expr& e) {
            if (e.kind == Expr::Kind::VarRef) eq_vars.insert(e.name);
            if (e.lhs) walk(*e.lhs);
            if (e.rhs) walk(*e.rhs);
        };
        if (p.op == Pred::CmpOp::Eq) {
            has_eq = true;
            walk(*p.lhs);
            walk(*p.rhs);
        }
        return;
    }
    if (p.a) collect_pred_vars(*p.a, has_eq, eq_vars);
    if (p.b) collect_pred_vars(*p.b, has_eq, eq_vars);
}

void reject_measure_zero_observes(const StmtPtr& s, const std::map<std::string, lang::VarTag>& tags) {
    switch (s->kind) {
        case Stmt::Kind::Seq:
            reject_measure_zero_observes(s->first, tags);
            reject_measure_zero_observes(s->second, tags);
            return;
        case Stmt::Kind::If:
            reject_measure_zero_observes(s->first, tags);
            reject_measure_zero_observes(s->second, tags);
            return;
        case Stmt::Kind::For:
            reject_measure_zero_observes(s->first, tags);
            return;
        case Stmt::Kind::Observe: {
            bool has_eq = false;
            std::set<std::string> vars;
            collect_pred_vars(*s->pred, has_eq, vars);
            if (!has_eq) return;
            for (const auto& v : vars) {
                auto it = tags.find(v);
                if (it != tags.end() && it->second == lang::VarTag::Continuous)
                    throw Error("oracle.mc_run: equality observation on continuous variable '" + v +
                                "' is a measure-zero event; rejection sampling cannot condition on it");
            }
            return;
        }
        default:
            return;
    }
}

// Executes one forward run; returns false when an observe fails.
bool exec_sample(const StmtPtr& s, State& sigma, SplitMix64& rng, BoxMuller& gauss) {
    static const lang::ParamEnv kEmpty;
    switch (s->kind) {
        case Stmt::Kind::Skip:
            return true;
        case Stmt::Kind::Seq:
            return exec_sample(s->first, sigma, rng, gauss) &&
                   exec_sample(s->second, sigma, rng, gauss);
        case Stmt::Kind::Assign:
            sigma[s->var] = lang::eval_expr(*s->expr, sigma, kEmpty);
            return true;
        case Stmt::Kind::Sample: {
            const Dist& d = *s->dist;
            if (d.finite_support()) {
                double u = rng.uniform(), acc = 0.0;
                auto sup = finite_support(d);
                sigma[s->var] = sup.back().first;
                for (const auto& [v, p] : sup) {
                    acc += p;
                    if (u < acc) {
                        sigma[s->var] = v;
                        break;
                    }
                }
            } else if (d.kind == Dist::Kind::Gauss) {
                double m = const_value(d.mean, "mean");
                double var = const_value(d.variance, "variance");
                sigma[s->var] = m + std::sqrt(var) * gauss();
            } else {
                double u = rng.uniform(), acc = 0.0;
                const auto& comp = d.gm.back();
                double m = const_value(comp.mean, "mean"), var = const_value(comp.variance, "variance");
                for (const auto& c : d.gm) {
                    acc += const_value(c.weight, "weight");
                    if (u < acc) {
                        m = const_value(c.mean, "mean");
                        var = const_value(c.variance, "variance");
                        break;
                    }
                }
                sigma[s->var] = m + std::sqrt(var) * gauss();
            }
            return true;
        }
        case Stmt::Kind::Observe:
            return lang::eval_pred(*s->pred, sigma, kEmpty);
        case Stmt::Kind::If:
            return exec_sample(lang::eval_pred(*s->pred, sigma, kEmpty) ? s->first : s->second,
                               sigma, rng, gauss);
        default:
            throw Error("oracle: unreachable statement kind");
    }
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double scale(double nats, double log_base) { return nats / std::log(log_base); }

}  // namespace

int JointPmf::index(const std::string& var) const {
    auto it = std::find(vars.begin(), vars.end(), var);
    if (it == vars.end()) throw Error("oracle: unknown variable '" + var + "'");
    return static_cast<int>(it - vars.begin());
}

JointPmf enumerate(const Program& p, const lang::ParamEnv& overrides) {
    auto env = lang::bind_params(p.params, overrides);
    Program u = lang::unroll(p);
    StmtPtr body = lang::resolve_params(u.body, env);

    JointPmf out;
    out.vars = lang::program_variables(p);
    State sigma0;
    for (const auto& v : out.vars) sigma0[v] = 0.0;

    double surviving = 0.0;
    std::size_t leaves = 0;
    exec_paths(body, sigma0, 1.0, leaves, [&](const State& sigma, double w) {
        std::vector<double> key;
        key.reserve(out.vars.size());
        for (const auto& v : out.vars) key.push_back(sigma.at(v));
        out.pmf[key] += w;
        surviving += w;
    });
    if (surviving <= 0.0) throw Error("oracle.enumerate: unsatisfiable observations");
    out.evidence = surviving;
    for (auto& [_, prob] : out.pmf) prob /= surviving;
    return out;
}

PmfMetrics pmf_metrics(const JointPmf& j, const std::string& x, const std::string& y,
                       double log_base) {
    int xi = j.index(x), yi = j.index(y);
    std::map<double, double> px, py;
    std::map<std::pair<double, double>, double> pxy;
    for (const auto& [key, prob] : j.pmf) {
        px[key[xi]] += prob;
        py[key[yi]] += prob;
        pxy[{key[xi], key[yi]}] += prob;
    }
    auto entropy = [](const auto& dist) {
        double h = 0.0;
        for (const auto& [_, prob] : dist)
            if (prob > 0.0) h -= prob * std::log(prob);
        return h;
    };
    double hx = entropy(px), hy = entropy(py), hxy = entropy(pxy);
    double kl = 0.0;
    for (const auto& [v, prob] : px) {
        if (prob <= 0.0) continue;
        auto it = py.find(v);
        if (it == py.end() || it->second <= 0.0) {
            kl = std::numeric_limits<double>::infinity();
            break;
        }
        kl += prob * std::log(prob / it->second);
    }
    PmfMetrics m;
    m.H = scale(hx, log_base);
    m.H_cond = scale(hxy - hy, log_base);
    m.KL = scale(kl, log_base);
    m.MI = scale(hx + hy - hxy, log_base);
    return m;
}

std::vector<double> McResult::column(const std::string& var) const {
    auto it = std::find(vars.begin(), vars.end(), var);
    if (it == vars.end()) throw Error("oracle: unknown variable '" + var + "'");
    std::size_t i = static_cast<std::size_t>(it - vars.begin());
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& row : samples) out.push_back(row[i]);
    return out;
}

double McResult::mean(const std::string& var) const {
    auto col = column(var);
    return std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
}

double McResult::covariance(const std::string& a, const std::string& b) const {
    auto ca = column(a), cb = column(b);
    double ma = mean(a), mb = mean(b), acc = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) acc += (ca[i] - ma) * (cb[i] - mb);
    return acc / static_cast<double>(ca.size() - 1);
}

double McResult::variance(const std::string& var) const { return covariance(var, var); }

McResult mc_run(const Program& p, std::size_t n, std::uint64_t seed,
                const lang::ParamEnv& overrides) {
    auto env = lang::bind_params(p.params, overrides);
    Program u = lang::unroll(p);
    StmtPtr body = lang::resolve_params(u.body, env);
    reject_measure_zero_observes(body, lang::classify(p).tags);

    McResult out;
    out.vars = lang::program_variables(p);
    out.seed = seed;
    out.samples.reserve(n);

    SplitMix64 rng(seed);
    BoxMuller gauss{rng};
    std::size_t attempts = 0;
    while (out.samples.size() < n) {
        ++attempts;
        State sigma;
        for (const auto& v : out.vars) sigma[v] = 0.0;
        if (exec_sample(body, sigma, rng, gauss)) {
            std::vector<double> row;
            row.reserve(out.vars.size());
            for (const auto& v : out.vars) row.push_back(sigma.at(v));
            out.samples.push_back(std::move(row));
        }
        if (attempts >= 10000 &&
            static_cast<double>(out.samples.size()) / static_cast<double>(attempts) < 1e-4)
            throw Error("oracle.mc_run: acceptance rate below 1e-4 after " +
                        std::to_string(attempts) + " attempts; observations too restrictive");
    }
    out.acceptance = static_cast<double>(n) / static_cast<double>(attempts);
    return out;
}

std::string to_csv(const McResult& r) {
    std::ostringstream os;
    for (std::size_t i = 0; i < r.vars.size(); ++i) os << (i ? "," : "") << r.vars[i];
    os << "\n";
    for (const auto& row : r.samples) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
        os << "\n";
    }
    return os.str();
}

double histogram_entropy(const std::vector<double>& samples, int bins) {
    if (samples.size() < 2 || bins < 1) throw Error("oracle: histogram needs >= 2 samples");
    auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
    double mn = *mn_it, mx = *mx_it;
    if (mx <= mn) return -std::numeric_limits<double>::infinity();
    double width = (mx - mn) / bins;
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (double v : samples) {
        int b = std::min(bins - 1, static_cast<int>((v - mn) / width));
        ++counts[static_cast<std::size_t>(b)];
    }
    double n = static_cast<double>(samples.size()), h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h + std::log(width);
}

BootstrapEntropy histogram_entropy_bootstrap(const std::vector<double>& samples, int bins,
                                             int reps, std::uint64_t seed) {
    BootstrapEntropy out;
    out.estimate = histogram_entropy(samples, bins);
    SplitMix64 rng(seed);
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(reps));
    std::vector<double> resample(samples.size());
    for (int r = 0; r < reps; ++r) {
        for (auto& v : resample) v = samples[rng.next() % samples.size()];
        vals.push_back(histogram_entropy(resample, bins));
    }
    double m = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
    double ss = 0.0;
    for (double v : vals) ss += (v - m) * (v - m);
    out.se = std::sqrt(ss / (vals.size() - 1));
    return out;
}

}  // namespace leakscope::oracle
