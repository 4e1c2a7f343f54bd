#include <catch_amalgamated.hpp>

#include <random>

#include "rydroute/analysis.hpp"

using namespace rydroute;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<FitPoint> sample(FitModel m, std::vector<double> p, double t_max, int n, double noise = 0.0,
                             std::uint64_t seed = 1) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> eps(0.0, noise > 0.0 ? noise : 1.0);
    const Eigen::VectorXd q = Eigen::Map<Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    std::vector<FitPoint> out;
    for (int i = 0; i < n; ++i) {
        const double t = t_max * i / (n - 1);
        out.push_back({t, detail::model_value(m, q, t) + (noise > 0.0 ? eps(gen) : 0.0), 1.0});
    }
    return out;
}

}  // namespace

TEST_CASE("model names round trip", "[analysis]") {
    for (auto m : {FitModel::gaussian, FitModel::exponential, FitModel::rabi})
        CHECK(parse_fit_model(to_string(m)) == m);
    CHECK_THROWS_AS(parse_fit_model("lorentzian"), std::invalid_argument);
}

TEST_CASE("exact data is recovered", "[analysis]") {
    SECTION("gaussian") {
        const auto r = fit(FitModel::gaussian, sample(FitModel::gaussian, {0.02, 0.95, 3.11}, 7.6, 20));
        REQUIRE(r.converged);
        CHECK_THAT(r.tau(), WithinRel(3.11, 1e-8));
        CHECK_THAT(r.parameters[0], WithinAbs(0.02, 1e-8));
    }
    SECTION("exponential") {
        const auto r = fit(FitModel::exponential, sample(FitModel::exponential, {0.0, 1.0, 14.86}, 30.0, 25));
        REQUIRE(r.converged);
        CHECK_THAT(r.tau(), WithinRel(14.86, 1e-8));
    }
    SECTION("rabi") {
        const double omega = 3.14159265 / 0.568;
        const auto r = fit(FitModel::rabi, sample(FitModel::rabi, {0.9, omega}, 1.2, 25));
        REQUIRE(r.converged);
        CHECK_THAT(r.omega(), WithinRel(omega, 1e-8));
        CHECK_THAT(r.parameters[0], WithinRel(0.9, 1e-8));
    }
}

TEST_CASE("noisy exponential recovers tau within its uncertainty", "[analysis][property]") {
    int inside = 0;
    const int trials = 40;
    for (int k = 0; k < trials; ++k) {
        const auto data = sample(FitModel::exponential, {0.0, 1.0, 14.86}, 30.0, 30, 0.01, 100 + k);
        const auto r = fit(FitModel::exponential, data);
        REQUIRE(r.converged);
        REQUIRE_THAT(r.tau(), WithinRel(14.86, 0.05));
        REQUIRE(r.uncertainties[2] > 0.0);
        if (std::abs(r.tau() - 14.86) < 2.0 * r.uncertainties[2]) ++inside;
    }
    CHECK(inside >= trials * 8 / 10);
}

TEST_CASE("time rescaling rescales tau", "[analysis][property]") {
    const auto base = sample(FitModel::gaussian, {0.0, 1.0, 3.0}, 8.0, 20, 0.005, 9);
    const double t0 = fit(FitModel::gaussian, base).tau();
    for (double s : {1e-6, 0.1, 10.0}) {
        auto scaled = base;
        for (auto& p : scaled) p.t *= s;
        CHECK_THAT(fit(FitModel::gaussian, scaled).tau(), WithinRel(s * t0, 1e-6));
    }
}

TEST_CASE("constant data is degenerate", "[analysis]") {
    std::vector<FitPoint> flat;
    for (int i = 0; i < 10; ++i) flat.push_back({double(i), 0.4, 1.0});
    const auto r = fit(FitModel::gaussian, flat);
    CHECK(r.degenerate);
    CHECK_FALSE(r.converged);
    CHECK_THAT(r.parameters[0], WithinAbs(0.4, 1e-15));
    CHECK(std::isinf(r.uncertainties[2]));
}

TEST_CASE("initial guess lands near the 1/e crossing", "[analysis]") {
    const auto g = initial_guess(FitModel::exponential, sample(FitModel::exponential, {0.0, 1.0, 2.0}, 10.0, 101));
    CHECK_THAT(g[2], WithinRel(2.0, 0.02));
}

TEST_CASE("weights from standard errors", "[analysis]") {
    CHECK_THAT(weight_from_stderr(0.1), WithinRel(100.0, 1e-12));
    CHECK(weight_from_stderr(0.0) == 1e6);
}

TEST_CASE("invalid fit input", "[analysis]") {
    CHECK_THROWS_AS(fit(FitModel::gaussian, std::vector<FitPoint>{{0.0, 1.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(fit(FitModel::gaussian, std::vector<FitPoint>{{1.0, 1.0, 1.0}, {1.0, 2.0, 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit(FitModel::gaussian, std::vector<FitPoint>{{0.0, 1.0, 1.0}, {1.0, NAN, 1.0}}),
                    std::invalid_argument);
}
