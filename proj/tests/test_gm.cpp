#include <doctest.h>

#include <json.hpp>

#include "leakscope/gm.hpp"

using namespace leakscope;
using gm::Component;
using gm::GaussianMixture;

namespace {

GaussianMixture two_comp() {
    GaussianMixture g;
    g.varnames = {"x", "y"};
    Component a, b;
    a.w = 0.25;
    a.mean = Eigen::Vector2d(0, 1);
    a.cov = Eigen::Matrix2d::Identity();
    b.w = 0.75;
    b.mean = Eigen::Vector2d(2, 3);
    b.cov = (Eigen::Matrix2d() << 2, 0.5, 0.5, 1).finished();
    g.components = {a, b};
    return g;
}

}  // namespace

TEST_CASE("init is a Dirac delta at zero") {
    auto g = gm::init({"a", "b"});
    REQUIRE(g.components.size() == 1);
    CHECK(g.components[0].w == 1.0);
    CHECK(g.components[0].mean.isZero());
    CHECK(g.components[0].cov.isZero());
    CHECK(gm::is_dirac(g.components[0], 0));
    CHECK(gm::is_dirac(g.components[0], 1));
    CHECK_THROWS_AS(gm::init({}), lang::Error);
}

TEST_CASE("validate enforces mass, symmetry, and PSD") {
    auto g = two_comp();
    gm::validate(g);  // no throw
    auto bad_mass = g;
    bad_mass.components[0].w = 0.5;
    CHECK_THROWS_AS(gm::validate(bad_mass), lang::Error);
    gm::validate(bad_mass, 1.25);  // explicit expected mass passes
    auto bad_sym = g;
    bad_sym.components[1].cov(0, 1) = 0.9;
    CHECK_THROWS_AS(gm::validate(bad_sym), lang::Error);
    auto bad_psd = g;
    bad_psd.components[1].cov = (Eigen::Matrix2d() << 1, 2, 2, 1).finished();
    CHECK_THROWS_AS(gm::validate(bad_psd), lang::Error);
}

TEST_CASE("marginal selects coordinates in the requested order") {
    auto g = two_comp();
    auto m = gm::marginal(g, {"y"});
    CHECK(m.varnames == std::vector<std::string>{"y"});
    CHECK(m.components[1].mean(0) == 3.0);
    CHECK(m.components[1].cov(0, 0) == 1.0);
    auto swapped = gm::marginal(g, {"y", "x"});
    CHECK(swapped.components[0].mean(0) == 1.0);
    CHECK(swapped.components[0].mean(1) == 0.0);
    CHECK(swapped.components[1].cov(0, 1) == 0.5);
    CHECK_THROWS_AS(gm::marginal(g, {"nope"}), lang::Error);
}

TEST_CASE("lump merges identical components and prunes dust") {
    auto g = two_comp();
    auto dup = g;
    dup.components.push_back(g.components[0]);  // exact duplicate of the first
    dup.components[0].w = 0.1;
    dup.components[2].w = 0.15;
    auto merged = gm::lump(dup);
    CHECK(merged.components.size() == 2);
    CHECK(merged.total_mass() == doctest::Approx(1.0));

    auto dusty = g;
    Component dust = g.components[0];
    dust.w = 1e-15;
    dust.mean = Eigen::Vector2d(50, 50);
    dusty.components.push_back(dust);
    auto pruned = gm::lump(dusty);
    CHECK(pruned.components.size() == 2);
    // pruning redistributes the lost mass
    CHECK(pruned.total_mass() == doctest::Approx(dusty.total_mass()).epsilon(1e-12));
}

TEST_CASE("normalize returns the prior mass") {
    auto g = two_comp();
    for (auto& c : g.components) c.w *= 0.2;
    double mass = gm::normalize(g);
    CHECK(mass == doctest::Approx(0.2));
    CHECK(g.total_mass() == doctest::Approx(1.0));
    GaussianMixture empty;
    empty.varnames = {"x"};
    CHECK_THROWS_AS(gm::normalize(empty), lang::Error);
}

TEST_CASE("json serialization carries full numeric precision") {
    auto g = two_comp();
    g.components[0].mean(0) = 1.0 / 3.0;
    auto j = nlohmann::json::parse(gm::to_json(g));
    CHECK(j["varnames"] == nlohmann::json({"x", "y"}));
    REQUIRE(j["components"].size() == 2);
    CHECK(j["components"][0]["mean"][0].get<double>() == 1.0 / 3.0);
    CHECK(j["components"][1]["cov"][0][1].get<double>() == 0.5);  // full matrix, row by row
}
