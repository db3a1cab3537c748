#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "leakscope/soga.hpp"

using namespace leakscope;
using gm::Component;
using gm::GaussianMixture;
using lang::Expr;
using lang::Pred;

namespace {

GaussianMixture gauss2(Eigen::Vector2d mu, Eigen::Matrix2d cov,
                       std::vector<std::string> names = {"x", "y"}) {
    GaussianMixture g;
    g.varnames = std::move(names);
    Component c;
    c.w = 1.0;
    c.mean = mu;
    c.cov = cov;
    g.components = {c};
    return g;
}

}  // namespace

TEST_CASE("moment matching of distribution literals") {
    lang::Dist b;
    b.kind = lang::Dist::Kind::Bernoulli;
    b.p = Expr::num(0.3);
    auto mb = soga::moment_match(b);
    REQUIRE(mb.size() == 2);
    CHECK(mb[0].w + mb[1].w == doctest::Approx(1.0));
    CHECK(mb[0].var == 0.0);  // Dirac components

    lang::Dist g;
    g.kind = lang::Dist::Kind::Gauss;
    g.mean = Expr::num(5);
    g.variance = Expr::num(2);
    auto mg = soga::moment_match(g);
    REQUIRE(mg.size() == 1);
    CHECK(mg[0].mean == 5.0);
    CHECK(mg[0].var == 2.0);

    // non-constant arguments are rejected
    lang::Dist bad;
    bad.kind = lang::Dist::Kind::Gauss;
    bad.mean = Expr::var("x");
    bad.variance = Expr::num(1);
    CHECK_THROWS_AS(soga::moment_match(bad), lang::Error);
}

TEST_CASE("linear assignment transforms moments exactly") {
    // N((1,2), I); y := x + y
    auto g = gauss2(Eigen::Vector2d(1, 2), Eigen::Matrix2d::Identity());
    auto out = soga::assign_linear(g, "y", {{"x", 1.0}, {"y", 1.0}}, 0.0);
    CHECK(out.components[0].mean(0) == doctest::Approx(1.0));
    CHECK(out.components[0].mean(1) == doctest::Approx(3.0));
    CHECK(out.components[0].cov(1, 1) == doctest::Approx(2.0));
    CHECK(out.components[0].cov(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("product assignment matches the Gaussian product moments") {
    // independent x ~ N(a, s1), y ~ N(b, s2): E[xy] = ab, Var(xy) = a^2 s2 + b^2 s1 + s1 s2
    double a = 1.5, b = -2.0, s1 = 0.7, s2 = 1.3;
    GaussianMixture g;
    g.varnames = {"x", "y", "z"};
    Component c;
    c.w = 1.0;
    c.mean = Eigen::Vector3d(a, b, 0);
    c.cov = Eigen::Vector3d(s1, s2, 0).asDiagonal();
    g.components = {c};
    auto out = soga::assign_product(g, "z", "x", "y");
    CHECK(out.components[0].mean(2) == doctest::Approx(a * b));
    CHECK(out.components[0].cov(2, 2) == doctest::Approx(a * a * s2 + b * b * s1 + s1 * s2));
    // Cov(z, x) = b * Var(x) for independent inputs
    CHECK(out.components[0].cov(2, 0) == doctest::Approx(b * s1));
}

TEST_CASE("conditioning on a continuous equality is exact Gaussian conditioning") {
    // N(0, [[1, .5], [.5, 1]]), observe y = 1  =>  x | y=1 ~ N(0.5, 0.75)
    auto g = gauss2(Eigen::Vector2d(0, 0),
                    (Eigen::Matrix2d() << 1, 0.5, 0.5, 1).finished());
    auto out = soga::observe_eq(g, "y", 1.0);
    REQUIRE(out.components.size() == 1);
    const auto& c = out.components[0];
    CHECK(c.mean(0) == doctest::Approx(0.5));
    CHECK(c.cov(0, 0) == doctest::Approx(0.75));
    CHECK(c.mean(1) == 1.0);      // observed coordinate pinned
    CHECK(c.cov(1, 1) == 0.0);
    // weight scaled by the likelihood phi(1; 0, 1)
    CHECK(c.w == doctest::Approx(std::exp(-0.5) / std::sqrt(2 * M_PI)));
}

TEST_CASE("discrete observation filters components and leaves evidence mass") {
    GaussianMixture g;
    g.varnames = {"fem_0", "v"};
    Component yes, no;
    yes.w = 0.75;
    yes.mean = Eigen::Vector2d(1, 0);
    yes.cov = Eigen::Vector2d(0, 1).asDiagonal();
    no.w = 0.25;
    no.mean = Eigen::Vector2d(0, 0);
    no.cov = Eigen::Vector2d(0, 1).asDiagonal();
    g.components = {yes, no};
    auto out = soga::observe_discrete(
        g, Pred::cmp(Pred::CmpOp::Eq, Expr::var("fem_0"), Expr::num(1)));
    REQUIRE(out.components.size() == 1);
    CHECK(out.total_mass() == doctest::Approx(0.75));
    // observing an impossible value empties the state
    CHECK_THROWS_AS(soga::observe_discrete(
                        g, Pred::cmp(Pred::CmpOp::Eq, Expr::var("fem_0"), Expr::num(7))),
                    lang::Error);
    // predicates over non-Dirac coordinates are rejected
    CHECK_THROWS_AS(soga::observe_discrete(
                        g, Pred::cmp(Pred::CmpOp::Gt, Expr::var("v"), Expr::num(0))),
                    lang::Error);
}

TEST_CASE("if-branching recombines mass exactly") {
    auto p = lang::parse(
        "c ~ bernoulli(0.3); x := 0; if (c == 1) { x ~ gauss(1, 1); } else { x := 5; }");
    auto r = soga::run_soga(p, {});
    CHECK(r.evidence == doctest::Approx(1.0));
    CHECK(r.state.total_mass() == doctest::Approx(1.0));
    REQUIRE(r.state.components.size() == 2);
    // mean of x: 0.3 * 1 + 0.7 * 5
    int xi = r.state.index("x");
    double mean = 0.0;
    for (const auto& c : r.state.components) mean += c.w * c.mean(xi);
    CHECK(mean == doctest::Approx(0.3 * 1 + 0.7 * 5));
}

TEST_CASE("prop 4 straight-line programs") {
    // S2: sum of standard normals is N(0, 2), exactly
    auto s2 = soga::run_soga(testutil::corpus_program("s2.ppl"), {});
    auto m2 = gm::marginal(s2.state, {"x3"});
    REQUIRE(m2.components.size() == 1);
    CHECK(m2.components[0].mean(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m2.components[0].cov(0, 0) == doctest::Approx(2.0).epsilon(1e-12));

    // S1: product of standard normals moment-matches to N(0, 1)
    auto s1 = soga::run_soga(testutil::corpus_program("s1.ppl"), {});
    auto m1 = gm::lump(gm::marginal(s1.state, {"x3"}));
    REQUIRE(m1.components.size() == 1);
    CHECK(m1.components[0].mean(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m1.components[0].cov(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nonlinear assignments beyond products are rejected") {
    auto p = lang::parse("x ~ gauss(0, 1); y := x * x * x;");
    CHECK_THROWS_AS(soga::run_soga(p, {}), lang::Error);
}
