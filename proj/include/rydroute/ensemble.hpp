#pragma once

// Monte Carlo model of a single collective Rydberg excitation stored in a
// thermal cloud.
//
// Atom j carries a phase phi_j and an amplitude weight w_j. Storage imprints
// phi_j = K1 . r_j(0). The Raman pi pulse is an instantaneous kick at the pulse
// midpoint t_mid = t' + t_r / 2 and adds Kr . (r_j(0) + v_j t_mid). Retrieval at
// t_s projects onto a plane-wave mode k_target,
//
//     eta = | (1/N) sum_j w_j exp(i (phi_j -/+ k_target . r_j(t_s))) |^2,
//
// maximized over the two signs, times survival factors from DecayChannels.
// With the vector convention of geometry.hpp the matched mode uses the minus
// sign; scalar callers that write the stored phase as (k - k_r) z and the mode
// as +k' z land on the plus sign, hence the maximum.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rydroute/constants.hpp"
#include "rydroute/error.hpp"
#include "rydroute/geometry.hpp"
#include "rydroute/levels.hpp"
#include "rydroute/protocol.hpp"
#include "rydroute/rng.hpp"

namespace rydroute {

struct ThermalConfig {
    std::size_t atom_count = 10000;
    double temperature = 66.9 * units::uK;
    double atom_mass = constants::cesium_mass;
    double cloud_sigma_z = 10.0 * units::um;  // axial rms
    double cloud_sigma_r = 4.3 * units::um;   // transverse rms, 3D mode only
    double gravity = 0.0;                     // m/s^2
    Vec3 gravity_axis{0.0, -1.0, 0.0};
    Vec3 beam_axis{0.0, 0.0, 1.0};
    int dimensions = 1;  // 1: atoms move along beam_axis only, 3: full 3D
    std::uint64_t seed = 1;

    double sigma_v() const { return std::sqrt(constants::boltzmann * temperature / atom_mass); }

    void validate() const {
        if (atom_count < 2) throw std::invalid_argument("ThermalConfig: need at least 2 atoms");
        if (!(temperature >= 0.0) || !std::isfinite(temperature))
            throw std::invalid_argument("ThermalConfig: temperature must be finite and >= 0");
        if (!(atom_mass > 0.0)) throw std::invalid_argument("ThermalConfig: atom mass must be positive");
        if (!(cloud_sigma_z >= 0.0) || !(cloud_sigma_r >= 0.0))
            throw std::invalid_argument("ThermalConfig: cloud sizes must be >= 0");
        if (dimensions != 1 && dimensions != 3)
            throw std::invalid_argument("ThermalConfig: dimensions must be 1 or 3");
        if (!std::isfinite(sigma_v())) throw std::invalid_argument("ThermalConfig: sigma_v not finite");
        if (beam_axis.norm() == 0.0 || (gravity != 0.0 && gravity_axis.norm() == 0.0))
            throw std::invalid_argument("ThermalConfig: zero-length axis");
    }
};

struct AtomEnsemble {
    std::vector<Vec3> positions;   // m, at t = 0
    std::vector<Vec3> velocities;  // m/s
    Vec3 axis{0.0, 0.0, 1.0};
    Vec3 acceleration = Vec3::Zero();

    std::size_t size() const { return positions.size(); }

    Vec3 position_at(std::size_t j, double t) const {
        return positions[j] + velocities[j] * t + 0.5 * t * t * acceleration;
    }
};

/// Samples positions and Maxwell-Boltzmann velocities; `stream` selects an
/// independent sub-stream of config.seed.
inline AtomEnsemble sample_ensemble(const ThermalConfig& config, std::uint64_t stream = 0) {
    config.validate();
    const CounterRng rng(derive_key(config.seed, {stream}));
    const Vec3 u = config.beam_axis.normalized();
    const auto [e1, e2] = perpendicular_basis(u);
    const double sv = config.sigma_v();
    const bool full = config.dimensions == 3;

    AtomEnsemble ens;
    ens.axis = u;
    if (config.gravity != 0.0) ens.acceleration = config.gravity * config.gravity_axis.normalized();
    ens.positions.resize(config.atom_count);
    ens.velocities.resize(config.atom_count);
    for (std::size_t j = 0; j < config.atom_count; ++j) {
        const std::uint64_t base = 4 * static_cast<std::uint64_t>(j);
        const auto [z, vz] = rng.normal_pair(base);
        Vec3 r = config.cloud_sigma_z * z * u;
        Vec3 v = sv * vz * u;
        if (full) {
            const auto [x, y] = rng.normal_pair(base + 1);
            const auto [vx, vy] = rng.normal_pair(base + 2);
            r += config.cloud_sigma_r * (x * e1 + y * e2);
            v += sv * (vx * e1 + vy * e2);
        }
        ens.positions[j] = r;
        ens.velocities[j] = v;
    }
    return ens;
}

enum class RydbergTag { r1, r2 };

struct SpinWaveState {
    std::vector<double> phase;   // rad
    std::vector<double> weight;  // in [0, 1]
    RydbergTag level = RydbergTag::r1;
    double elapsed = 0.0;                // s, time of the last operation
    std::optional<double> transfer_time;  // s, Raman kick time if applied
};

struct DecayChannels {
    double tau_r1 = std::numeric_limits<double>::infinity();  // s
    double tau_r2 = std::numeric_limits<double>::infinity();  // s
    double raman_scatter_prob = 0.0;                          // per pulse
    double extra_dephasing_rate = 0.0;                        // 1/s

    void validate() const {
        if (!(tau_r1 > 0.0) || !(tau_r2 > 0.0))
            throw std::invalid_argument("DecayChannels: lifetimes must be > 0 (use inf to disable)");
        if (!(raman_scatter_prob >= 0.0 && raman_scatter_prob <= 1.0))
            throw std::invalid_argument("DecayChannels: scatter probability must be in [0, 1]");
        if (!(extra_dephasing_rate >= 0.0))
            throw std::invalid_argument("DecayChannels: dephasing rate must be >= 0");
    }

    /// exp(-t_r1/tau_r1 - t_r2/tau_r2 - rate * t_total)
    double survival(double time_in_r1, double time_in_r2, double total) const {
        return std::exp(-time_in_r1 / tau_r1 - time_in_r2 / tau_r2 - extra_dephasing_rate * total);
    }
};

inline SpinWaveState store(const AtomEnsemble& ens, const Vec3& K1) {
    SpinWaveState s;
    s.phase.resize(ens.size());
    s.weight.assign(ens.size(), 1.0);
    for (std::size_t j = 0; j < ens.size(); ++j) s.phase[j] = K1.dot(ens.positions[j]);
    return s;
}

/// Scalar form: phase k * z_j(0) along the ensemble axis.
inline SpinWaveState store(const AtomEnsemble& ens, double k) { return store(ens, k * ens.axis); }

/// Amplitude left in |r2> after a resonant Raman pulse of the given duration.
inline double raman_transfer_amplitude(const RamanPulse& pulse) {
    return std::abs(std::sin(0.5 * pulse.omega_r * pulse.duration));
}

inline SpinWaveState apply_raman_pi(SpinWaveState state, const AtomEnsemble& ens, const RamanPulse& pulse,
                                    const Vec3& Kr, double t_prime, const DecayChannels& decay = {}) {
    if (state.level != RydbergTag::r1) throw std::logic_error("apply_raman_pi: state already in r2");
    if (t_prime < 0.0) throw std::invalid_argument("apply_raman_pi: t' must be >= 0");
    if (state.phase.size() != ens.size()) throw std::invalid_argument("apply_raman_pi: size mismatch");

    const double t_mid = t_prime + 0.5 * pulse.duration;
    const double w = raman_transfer_amplitude(pulse) * std::sqrt(1.0 - decay.raman_scatter_prob);
    for (std::size_t j = 0; j < ens.size(); ++j) {
        state.phase[j] += Kr.dot(ens.positions[j] + ens.velocities[j] * t_mid);
        state.weight[j] *= w;
    }
    state.level = RydbergTag::r2;
    state.elapsed = t_mid;
    state.transfer_time = t_mid;
    return state;
}

/// Scalar form: phase becomes (k - k_r) z_j(0) - k_r v_j t_mid.
inline SpinWaveState apply_raman_pi(SpinWaveState state, const AtomEnsemble& ens, const RamanPulse& pulse,
                                    double k_r, double t_prime, const DecayChannels& decay = {}) {
    return apply_raman_pi(std::move(state), ens, pulse, Vec3(-k_r * ens.axis), t_prime, decay);
}

/// Per-atom phase phi_j + sign * k_target . r_j(t_s), wrapped to (-pi, pi].
inline std::vector<double> readout_phases(const SpinWaveState& state, const AtomEnsemble& ens,
                                          const Vec3& k_target, double t_s, int sign) {
    std::vector<double> out(ens.size());
    for (std::size_t j = 0; j < ens.size(); ++j)
        out[j] = std::remainder(state.phase[j] + sign * k_target.dot(ens.position_at(j, t_s)), constants::two_pi);
    return out;
}

struct Overlap {
    double plus = 0.0;   // |S+|^2
    double minus = 0.0;  // |S-|^2
};

inline Overlap collective_overlap(const SpinWaveState& state, const AtomEnsemble& ens, const Vec3& k_target,
                                  double t_s) {
    double cp = 0.0, sp = 0.0, cm = 0.0, sm = 0.0;
    for (std::size_t j = 0; j < ens.size(); ++j) {
        const double phi = state.phase[j];
        const double theta = k_target.dot(ens.position_at(j, t_s));
        const double w = state.weight[j];
        cp += w * std::cos(phi + theta);
        sp += w * std::sin(phi + theta);
        cm += w * std::cos(phi - theta);
        sm += w * std::sin(phi - theta);
    }
    const double n = static_cast<double>(ens.size());
    return {(cp * cp + sp * sp) / (n * n), (cm * cm + sm * sm) / (n * n)};
}

inline double retrieval_efficiency(const SpinWaveState& state, const AtomEnsemble& ens, const Vec3& k_target,
                                   double t_s, const DecayChannels& decay = {}) {
    if (t_s < state.elapsed) throw std::invalid_argument("retrieval_efficiency: t_s precedes the last operation");
    const Overlap o = collective_overlap(state, ens, k_target, t_s);
    double in_r1 = t_s;
    double in_r2 = 0.0;
    if (state.transfer_time) {
        in_r1 = *state.transfer_time;
        in_r2 = t_s - *state.transfer_time;
    }
    return std::max(o.plus, o.minus) * decay.survival(in_r1, in_r2, t_s);
}

inline double retrieval_efficiency(const SpinWaveState& state, const AtomEnsemble& ens, double k_target,
                                   double t_s, const DecayChannels& decay = {}) {
    return retrieval_efficiency(state, ens, Vec3(k_target * ens.axis), t_s, decay);
}

// ---------------------------------------------------------------------------
// Sweeps

enum class RetrievalDirection {
    matched,   // closes the readout triangle
    reversed,  // retrieval beam flipped, output direction kept
};

struct SweepSetup {
    LevelScheme scheme;
    BeamGeometry beams = BeamGeometry::counter_propagating();
    RamanPulse pulse;
    ThermalConfig thermal;
    DecayChannels decay;
    RetrievalDirection retrieval = RetrievalDirection::matched;
    std::optional<double> lambda_out;  // nm, defaults to lambda1
    int repetitions = 100;
    int threads = 1;

    void validate() const {
        thermal.validate();
        decay.validate();
        if (repetitions < 1) throw std::invalid_argument("SweepSetup: repetitions must be >= 1");
        if (threads < 1) throw std::invalid_argument("SweepSetup: threads must be >= 1");
        if (!(pulse.omega_r > 0.0)) throw std::invalid_argument("SweepSetup: Omega_r must be positive");
    }
};

struct SweepPoint {
    double t = 0.0;  // s: storage time or Raman duration
    double efficiency = 0.0;
    double std_error = 0.0;
    std::string note;
};

/// Plane-wave mode collected by the retrieval beam for a stored spin wave.
inline Vec3 readout_mode(const Vec3& spin_wave, double retrieval_nm, double output_nm, RetrievalDirection dir) {
    const TriangleSolution sol = solve_retrieval_triangle(spin_wave.norm(), retrieval_nm, output_nm);
    const auto d = readout_directions(sol, spin_wave, 0.0);
    const double sign = dir == RetrievalDirection::matched ? 1.0 : -1.0;
    return sign * sol.retrieval_k * d.retrieval + sol.output_k * d.output;
}

namespace detail {

template <class F>
void for_each_point(std::size_t count, int threads, F&& f) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) f(i);
        });
    }
}

struct Moments {
    double mean_ = 0.0;
    double m2 = 0.0;
    int n = 0;

    void add(double x) {
        ++n;
        const double d = x - mean_;
        mean_ += d / n;
        m2 += d * (x - mean_);
    }
    double mean() const { return mean_; }
    double std_error() const {
        if (n < 2) return 0.0;
        return std::sqrt(std::max(0.0, m2) / (n - 1) / n);
    }
};

}  // namespace detail

/// Retrieval efficiency versus storage time, with or without the redirection pulse.
inline std::vector<SweepPoint> sweep_storage(const SweepSetup& setup, std::span<const double> storage_times,
                                             bool protocol_on) {
    setup.validate();
    const WavevectorSet ws = build_wavevectors(setup.scheme, setup.beams);
    const double out_nm = setup.lambda_out.value_or(setup.scheme.lambda1);
    const Vec3 mode = protocol_on ? readout_mode(ws.K2, setup.scheme.lambda5, out_nm, setup.retrieval)
                                  : readout_mode(ws.K1, setup.scheme.lambda2, out_nm, setup.retrieval);

    std::vector<SweepPoint> out(storage_times.size());
    detail::for_each_point(storage_times.size(), setup.threads, [&](std::size_t i) {
        SweepPoint& p = out[i];
        p.t = storage_times[i];
        double t_prime = 0.0;
        if (protocol_on) {
            try {
                t_prime = wait_time(p.t, ws.k, ws.k_r, setup.pulse.omega_r);
            } catch (const TimingViolation&) {
                p.efficiency = std::numeric_limits<double>::quiet_NaN();
                p.std_error = std::numeric_limits<double>::quiet_NaN();
                p.note = "below_min_storage";
                return;
            }
            if (t_prime + setup.pulse.duration > p.t) p.note = "pulse_overlaps_retrieval";
        }
        detail::Moments m;
        for (int r = 0; r < setup.repetitions; ++r) {
            const AtomEnsemble ens = sample_ensemble(setup.thermal, derive_key(i, {static_cast<std::uint64_t>(r)}));
            SpinWaveState s = store(ens, ws.K1);
            if (protocol_on) s = apply_raman_pi(std::move(s), ens, setup.pulse, ws.Kr, t_prime, setup.decay);
            m.add(retrieval_efficiency(s, ens, mode, p.t, setup.decay));
        }
        p.efficiency = m.mean();
        p.std_error = m.std_error();
    });
    return out;
}

/// Retrieval efficiency versus Raman pulse duration at fixed storage time.
/// The wait t' is planned for the nominal pi pulse.
inline std::vector<SweepPoint> sweep_raman_duration(const SweepSetup& setup, std::span<const double> durations,
                                                    double t_s) {
    setup.validate();
    const WavevectorSet ws = build_wavevectors(setup.scheme, setup.beams);
    const double out_nm = setup.lambda_out.value_or(setup.scheme.lambda1);
    const Vec3 mode = readout_mode(ws.K2, setup.scheme.lambda5, out_nm, setup.retrieval);
    const double t_prime = wait_time(t_s, ws.k, ws.k_r, setup.pulse.omega_r);

    std::vector<SweepPoint> out(durations.size());
    detail::for_each_point(durations.size(), setup.threads, [&](std::size_t i) {
        SweepPoint& p = out[i];
        p.t = durations[i];
        const RamanPulse pulse = setup.pulse.with_duration(p.t);
        if (t_prime + 0.5 * p.t > t_s) {
            p.efficiency = std::numeric_limits<double>::quiet_NaN();
            p.std_error = std::numeric_limits<double>::quiet_NaN();
            p.note = "pulse_after_retrieval";
            return;
        }
        if (t_prime + p.t > t_s) p.note = "pulse_overlaps_retrieval";
        detail::Moments m;
        for (int r = 0; r < setup.repetitions; ++r) {
            const AtomEnsemble ens = sample_ensemble(setup.thermal, derive_key(i, {static_cast<std::uint64_t>(r)}));
            SpinWaveState s = apply_raman_pi(store(ens, ws.K1), ens, pulse, ws.Kr, t_prime, setup.decay);
            m.add(retrieval_efficiency(s, ens, mode, t_s, setup.decay));
        }
        p.efficiency = m.mean();
        p.std_error = m.std_error();
    });
    return out;
}

}  // namespace rydroute
