#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cstring>

#include "rydroute/ensemble.hpp"

using namespace rydroute;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const LevelTable& table() {
    static const LevelTable t = load_level_table(default_data_path());
    return t;
}

SweepSetup small_setup(int case_id = 7) {
    SweepSetup s;
    s.scheme = case_wavelengths(case_id, 65, 70, table());
    s.pulse = RamanPulse::pi_pulse(units::two_pi_MHz(0.88));
    s.thermal.atom_count = 500;
    s.repetitions = 8;
    return s;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("counter RNG is a pure function of key and counter", "[rng]") {
    const CounterRng a(derive_key(42, {1, 2})), b(derive_key(42, {1, 2})), c(derive_key(42, {2, 1}));
    CHECK(a.bits(17) == b.bits(17));
    CHECK(a.bits(17) != c.bits(17));
    CHECK(derive_key(1, {}) != derive_key(2, {}));
    CHECK(derive_key(1, {0}) != derive_key(1, {}));
}

TEST_CASE("uniforms lie in the open unit interval", "[rng][property]") {
    const CounterRng r(123);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform(static_cast<std::uint64_t>(i));
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK_THAT(sum / n, WithinAbs(0.5, 0.005));
}

TEST_CASE("normal deviates have unit variance", "[rng][property]") {
    const CounterRng r(99);
    double s1 = 0.0, s2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto [x, y] = r.normal_pair(static_cast<std::uint64_t>(i));
        s1 += x + y;
        s2 += x * x + y * y;
    }
    CHECK_THAT(s1 / (2 * n), WithinAbs(0.0, 0.01));
    CHECK_THAT(s2 / (2 * n), WithinAbs(1.0, 0.02));
}

TEST_CASE("thermal velocity scale", "[ensemble]") {
    ThermalConfig cfg;
    cfg.atom_mass = 132.905451933 * constants::atomic_mass_unit;
    CHECK_THAT(cfg.sigma_v(), WithinRel(0.064693218, 1e-7));
    const auto ws = build_wavevectors(case_wavelengths(7, 65, 70, table()), {});
    CHECK_THAT(1.0 / (ws.k * cfg.sigma_v()), WithinRel(3.109265707e-6, 1e-7));

    cfg.atom_count = 200000;
    const auto ens = sample_ensemble(cfg, 3);
    double s2 = 0.0;
    for (const auto& v : ens.velocities) s2 += v.squaredNorm();
    CHECK_THAT(std::sqrt(s2 / static_cast<double>(ens.size())), WithinRel(cfg.sigma_v(), 0.01));
}

TEST_CASE("sampling is deterministic per stream", "[ensemble]") {
    ThermalConfig cfg;
    cfg.atom_count = 100;
    cfg.dimensions = 3;
    const auto a = sample_ensemble(cfg, 5), b = sample_ensemble(cfg, 5), c = sample_ensemble(cfg, 6);
    for (std::size_t j = 0; j < a.size(); ++j) {
        REQUIRE(a.positions[j] == b.positions[j]);
        REQUIRE(a.velocities[j] == b.velocities[j]);
    }
    CHECK(a.positions[0] != c.positions[0]);

    ThermalConfig bigger = cfg;
    bigger.atom_count = 200;
    const auto d = sample_ensemble(bigger, 5);
    CHECK(d.positions[99] == a.positions[99]);
}

TEST_CASE("compensated phases vanish for matched timing", "[ensemble][property]") {
    const auto ws = build_wavevectors(case_wavelengths(7, 65, 70, table()), {});
    const RamanPulse pulse = RamanPulse::pi_pulse(units::two_pi_MHz(0.88));
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        ThermalConfig cfg;
        cfg.atom_count = 2000;
        cfg.temperature = 1e-3;
        cfg.seed = seed;
        const auto ens = sample_ensemble(cfg);
        for (double ts : {1.5e-6, 7e-6, 20e-6}) {
            const double tp = wait_time(ts, ws.k, ws.k_r, pulse.omega_r);
            const auto s = apply_raman_pi(store(ens, ws.k), ens, pulse, ws.k_r, tp);
            const auto ph = readout_phases(s, ens, Vec3((ws.k - ws.k_r) * ens.axis), ts, -1);
            double worst = 0.0;
            for (double p : ph) worst = std::max(worst, std::abs(p));
            REQUIRE(worst < 1e-9);
            REQUIRE_THAT(retrieval_efficiency(s, ens, ws.k_r - ws.k, ts), WithinAbs(1.0, 1e-12));
        }
    }
}

TEST_CASE("free decay follows the Gaussian envelope", "[ensemble]") {
    const auto ws = build_wavevectors(case_wavelengths(7, 65, 70, table()), {});
    ThermalConfig cfg;
    cfg.atom_count = 200000;
    const auto ens = sample_ensemble(cfg);
    const auto s = store(ens, ws.k);
    const double tau = 1.0 / (ws.k * cfg.sigma_v());
    for (double f : {0.5, 1.0, 1.5}) {
        const double eta = retrieval_efficiency(s, ens, ws.k, f * tau);
        CHECK_THAT(eta, WithinAbs(std::exp(-f * f), 0.01));
    }
}

TEST_CASE("efficiency is invariant under uniform acceleration and translation", "[ensemble][property]") {
    const auto ws = build_wavevectors(case_wavelengths(4, 65, 70, table()), {});
    const Vec3 mode = readout_mode(ws.K1, case_wavelengths(4, 65, 70, table()).lambda2, 852.347276,
                                   RetrievalDirection::matched);
    ThermalConfig cfg;
    cfg.atom_count = 3000;
    cfg.dimensions = 3;
    const auto ens = sample_ensemble(cfg);
    const auto s = store(ens, ws.K1);
    const double ref = retrieval_efficiency(s, ens, mode, 2e-6);

    AtomEnsemble falling = ens;
    falling.acceleration = Vec3(0.3, -9.81, 2.0);
    CHECK_THAT(retrieval_efficiency(s, falling, mode, 2e-6), WithinAbs(ref, 1e-12));

    AtomEnsemble shifted = ens;
    for (auto& r : shifted.positions) r += Vec3(3e-6, -1e-5, 7e-6);
    CHECK_THAT(retrieval_efficiency(store(shifted, ws.K1), shifted, mode, 2e-6), WithinAbs(ref, 1e-12));
}

TEST_CASE("efficiency is invariant under atom relabelling", "[ensemble][property]") {
    const auto ws = build_wavevectors(case_wavelengths(7, 65, 70, table()), {});
    ThermalConfig cfg;
    cfg.atom_count = 1000;
    const auto ens = sample_ensemble(cfg);
    AtomEnsemble rev = ens;
    std::reverse(rev.positions.begin(), rev.positions.end());
    std::reverse(rev.velocities.begin(), rev.velocities.end());
    const double a = retrieval_efficiency(store(ens, ws.k), ens, ws.k, 2e-6);
    const double b = retrieval_efficiency(store(rev, ws.k), rev, ws.k, 2e-6);
    CHECK_THAT(a, WithinAbs(b, 1e-12));
}

TEST_CASE("decay channels only remove efficiency", "[ensemble][property]") {
    const auto ws = build_wavevectors(case_wavelengths(7, 65, 70, table()), {});
    const RamanPulse pulse = RamanPulse::pi_pulse(units::two_pi_MHz(0.88));
    ThermalConfig cfg;
    cfg.atom_count = 500;
    const auto ens = sample_ensemble(cfg);
    const double ts = 7e-6;
    const double tp = wait_time(ts, ws.k, ws.k_r, pulse.omega_r);
    double prev = 2.0;
    for (double tau : {1e-3, 1e-4, 3e-5, 1e-5, 3e-6}) {
        DecayChannels d;
        d.tau_r1 = tau;
        d.tau_r2 = tau;
        const auto s = apply_raman_pi(store(ens, ws.k), ens, pulse, ws.k_r, tp, d);
        const double eta = retrieval_efficiency(s, ens, ws.k_r - ws.k, ts, d);
        REQUIRE(eta < prev);
        REQUIRE_THAT(eta, WithinRel(std::exp(-ts / tau), 1e-9));
        prev = eta;
    }
    DecayChannels scatter;
    scatter.raman_scatter_prob = 0.25;
    const auto s = apply_raman_pi(store(ens, ws.k), ens, pulse, ws.k_r, tp, scatter);
    CHECK_THAT(retrieval_efficiency(s, ens, ws.k_r - ws.k, ts, scatter), WithinAbs(0.75, 1e-12));
}

TEST_CASE("a second transfer is rejected", "[ensemble]") {
    ThermalConfig cfg;
    cfg.atom_count = 10;
    const auto ens = sample_ensemble(cfg);
    const RamanPulse pulse = RamanPulse::pi_pulse(1e6);
    const auto s = apply_raman_pi(store(ens, 1.0), ens, pulse, 2.0, 0.0);
    CHECK_THROWS_AS(apply_raman_pi(s, ens, pulse, 2.0, 0.0), std::logic_error);
    CHECK_THROWS_AS(retrieval_efficiency(s, ens, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("parallel and serial sweeps agree bit for bit", "[ensemble]") {
    SweepSetup s = small_setup();
    std::vector<double> grid;
    for (int i = 0; i < 9; ++i) grid.push_back(i * 1e-6);
    const auto serial = sweep_storage(s, grid, true);
    s.threads = 4;
    const auto parallel = sweep_storage(s, grid, true);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(bit_equal(serial[i].efficiency, parallel[i].efficiency));
        CHECK(bit_equal(serial[i].std_error, parallel[i].std_error));
        CHECK(serial[i].note == parallel[i].note);
    }
    CHECK(serial[0].note == "below_min_storage");
    CHECK(std::isnan(serial[0].efficiency));
    CHECK(serial[1].note == "pulse_overlaps_retrieval");
    CHECK(serial[8].note.empty());
}

TEST_CASE("protocol preserves efficiency while free decay does not", "[ensemble]") {
    const SweepSetup s = small_setup();
    const std::vector<double> grid{7e-6};
    CHECK_THAT(sweep_storage(s, grid, true)[0].efficiency, WithinAbs(1.0, 1e-9));
    CHECK(sweep_storage(s, grid, false)[0].efficiency < 0.01);
}

TEST_CASE("reversed retrieval collects nothing", "[ensemble]") {
    SweepSetup s = small_setup();
    s.retrieval = RetrievalDirection::reversed;
    s.thermal.atom_count = 2000;
    const std::vector<double> grid{2e-6, 5e-6, 7e-6};
    for (const auto& p : sweep_storage(s, grid, true)) CHECK(p.efficiency < 10.0 / 2000);
}

TEST_CASE("duration sweep follows the Rabi envelope", "[ensemble]") {
    const SweepSetup s = small_setup();
    const double tpi = s.pulse.duration;
    const std::vector<double> grid{0.0, 0.5 * tpi, tpi, 2.0 * tpi};
    const auto pts = sweep_raman_duration(s, grid, 7e-6);
    CHECK(pts[0].efficiency < 1e-12);
    CHECK_THAT(pts[2].efficiency, WithinAbs(1.0, 1e-6));
    CHECK(pts[1].efficiency < pts[2].efficiency);
    CHECK(pts[3].efficiency < 1e-6);
    const std::vector<double> late{13e-6};
    CHECK(sweep_raman_duration(s, late, 7e-6)[0].note == "pulse_after_retrieval");
}
