#include <catch_amalgamated.hpp>

#include "rydroute/geometry.hpp"
#include "rydroute/protocol.hpp"

using namespace rydroute;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

WavevectorSet case7() {
    static const LevelTable t = load_level_table(default_data_path());
    return build_wavevectors(case_wavelengths(7, 65, 70, t), {});
}

}  // namespace

TEST_CASE("effective Rabi frequency from the Raman legs", "[protocol]") {
    const double w = effective_rabi(units::two_pi_MHz(28), units::two_pi_MHz(21), units::two_pi_MHz(335));
    CHECK_THAT(w / units::two_pi_MHz(1), WithinAbs(0.877611940, 1e-9));
    CHECK_THAT(w / units::two_pi_MHz(1), WithinAbs(0.88, 0.01));
    CHECK_THAT(pi_time(w), WithinRel(5.697278912e-7, 1e-9));

    const double doubled = effective_rabi(units::two_pi_MHz(28), units::two_pi_MHz(21), units::two_pi_MHz(670));
    CHECK_THAT(doubled, WithinRel(0.5 * w, 1e-14));
    CHECK(effective_rabi(1.0, 0.0, 1.0) == 0.0);
    CHECK_THROWS_AS(effective_rabi(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("pi time", "[protocol]") {
    CHECK_THAT(pi_time(units::two_pi_MHz(0.88)) / units::us, WithinAbs(0.568182, 1e-6));
    CHECK_THAT(pi_time(units::two_pi_MHz(0.88)) / units::us, WithinAbs(0.56, 0.02));
    CHECK_THAT(pi_time(units::two_pi_MHz(1.0)) / units::us, WithinRel(0.5, 1e-14));
    CHECK_THROWS(pi_time(0.0));
}

TEST_CASE("leg construction warns on small detuning", "[protocol]") {
    CHECK(RamanPulse::from_legs(1.0, 1.0, 100.0).warnings.empty());
    CHECK(RamanPulse::from_legs(1.0, 1.0, 2.0).warnings.size() == 1);
}

TEST_CASE("wait time for the flagship case", "[protocol]") {
    const auto ws = case7();
    CHECK_THAT(ws.k / ws.k_r, WithinAbs(0.201364194, 1e-9));
    const double w = units::two_pi_MHz(0.88);
    CHECK_THAT(wait_time(7 * units::us, ws.k, ws.k_r, w), WithinRel(5.306359734e-6, 1e-9));
    CHECK_THAT(min_storage_time(ws.k, ws.k_r, w), WithinRel(3.557202256e-7, 1e-9));
}

TEST_CASE("storage below the minimum is a timing violation", "[protocol]") {
    const auto ws = case7();
    const double w = units::two_pi_MHz(0.88);
    const double t_min = min_storage_time(ws.k, ws.k_r, w);
    CHECK_NOTHROW(wait_time(t_min * (1 + 1e-12), ws.k, ws.k_r, w));
    try {
        wait_time(0.5 * t_min, ws.k, ws.k_r, w);
        FAIL("expected TimingViolation");
    } catch (const TimingViolation& e) {
        CHECK_THAT(e.minimum_storage(), WithinRel(t_min, 1e-14));
    }
    CHECK_THROWS_AS(wait_time(1e-6, 2.0, 1.0, w), std::invalid_argument);
}

TEST_CASE("planned timing satisfies the matching condition", "[protocol][property]") {
    const auto ws = case7();
    for (double f : {0.5, 0.88, 2.0}) {
        const double w = units::two_pi_MHz(f);
        for (double ts = min_storage_time(ws.k, ws.k_r, w) * 1.01; ts < 50e-6; ts *= 1.3) {
            const auto t = plan_timing(ts, ws.k, ws.k_r, w);
            REQUIRE(t.t_prime >= 0.0);
            REQUIRE(check_matching(t) < 1e-12);
        }
    }
}

TEST_CASE("wait time grows linearly with storage time", "[protocol][property]") {
    const auto ws = case7();
    const double w = units::two_pi_MHz(0.88);
    const double slope = 1.0 - ws.k / ws.k_r;
    const double t1 = wait_time(5e-6, ws.k, ws.k_r, w);
    const double t2 = wait_time(9e-6, ws.k, ws.k_r, w);
    CHECK_THAT((t2 - t1) / 4e-6, WithinRel(slope, 1e-10));
}

TEST_CASE("overlap flag", "[protocol]") {
    const auto ws = case7();
    const double w = units::two_pi_MHz(0.88);
    CHECK(plan_timing(0.5e-6, ws.k, ws.k_r, w).pulse_overlaps_retrieval());
    CHECK_FALSE(plan_timing(7e-6, ws.k, ws.k_r, w).pulse_overlaps_retrieval());
}

TEST_CASE("differential Stark shift", "[protocol]") {
    CHECK(differential_stark_shift(2.0, 2.0, 10.0) == 0.0);
    CHECK_THAT(differential_stark_shift(4.0, 2.0, 3.0), WithinRel(1.0, 1e-14));
    CHECK(RamanPulse::pi_pulse(1.0).stark_shift() == 0.0);
}
