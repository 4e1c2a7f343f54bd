#pragma once

// Timing of the single Raman pi pulse that redirects the stored spin wave.
//
// With k = |K1|, k_r = |Kr| and effective Raman Rabi frequency Omega_r the
// pulse starts at
//
//     t' = t_s (1 - k / k_r) - pi / (2 Omega_r)
//
// which is the unique solution of the matching condition
//
//     k - k_r = -k_r (pi / (2 Omega_r) + t') / t_s.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rydroute/constants.hpp"
#include "rydroute/error.hpp"

namespace rydroute {

/// Two-photon Rabi frequency Omega3 * Omega4 / (2 Delta) of a far-detuned Raman pair.
inline double effective_rabi(double omega3, double omega4, double detuning) {
    if (detuning == 0.0) throw std::invalid_argument("effective_rabi: zero detuning");
    if (omega3 < 0.0 || omega4 < 0.0 || detuning < 0.0)
        throw std::invalid_argument("effective_rabi: Rabi frequencies and detuning must be positive");
    return omega3 * omega4 / (2.0 * detuning);
}

/// Differential AC-Stark shift (Omega3^2 - Omega4^2) / (4 Delta). Reported only.
inline double differential_stark_shift(double omega3, double omega4, double detuning) {
    if (detuning == 0.0) throw std::invalid_argument("differential_stark_shift: zero detuning");
    return (omega3 * omega3 - omega4 * omega4) / (4.0 * detuning);
}

inline double pi_time(double omega_r) {
    if (!(omega_r > 0.0)) throw std::invalid_argument("pi_time: Omega_r must be positive");
    return constants::pi / omega_r;
}

struct RamanPulse {
    double omega3 = 0.0;     // rad/s, 0 when only Omega_r is known
    double omega4 = 0.0;     // rad/s
    double detuning = 0.0;   // rad/s
    double omega_r = 0.0;    // rad/s
    double duration = 0.0;   // s
    std::vector<std::string> warnings;

    /// Pulse of area pi at the given effective Rabi frequency.
    static RamanPulse pi_pulse(double omega_r) {
        RamanPulse p;
        p.omega_r = omega_r;
        p.duration = pi_time(omega_r);
        return p;
    }

    static RamanPulse from_legs(double omega3, double omega4, double detuning) {
        RamanPulse p;
        p.omega3 = omega3;
        p.omega4 = omega4;
        p.detuning = detuning;
        p.omega_r = effective_rabi(omega3, omega4, detuning);
        p.duration = pi_time(p.omega_r);
        if (detuning < 5.0 * std::max(omega3, omega4))
            p.warnings.push_back("detuning is less than 5x the leg Rabi frequencies; "
                                 "adiabatic elimination of |f> is questionable");
        return p;
    }

    RamanPulse with_duration(double t_r) const {
        if (t_r < 0.0) throw std::invalid_argument("Raman pulse duration must be >= 0");
        RamanPulse p = *this;
        p.duration = t_r;
        return p;
    }

    /// Stark shift of the two-photon resonance, 0 without leg data.
    double stark_shift() const {
        return detuning > 0.0 ? differential_stark_shift(omega3, omega4, detuning) : 0.0;
    }
};

inline double min_storage_time(double k, double k_r, double omega_r) {
    if (!(k_r > k)) throw std::invalid_argument("min_storage_time: requires k_r > k");
    if (!(omega_r > 0.0)) throw std::invalid_argument("min_storage_time: Omega_r must be positive");
    return (constants::pi / (2.0 * omega_r)) / (1.0 - k / k_r);
}

/// Wait t' between the end of storage and the start of the pi pulse.
inline double wait_time(double t_s, double k, double k_r, double omega_r) {
    if (!(k > 0.0 && k_r > k)) throw std::invalid_argument("wait_time: requires k_r > k > 0");
    if (!(omega_r > 0.0)) throw std::invalid_argument("wait_time: Omega_r must be positive");
    const double t_prime = t_s * (1.0 - k / k_r) - constants::pi / (2.0 * omega_r);
    if (t_prime < 0.0) {
        const double t_min = min_storage_time(k, k_r, omega_r);
        throw TimingViolation("storage time below protocol minimum (t_s = " + std::to_string(t_s / units::us) +
                                  " us, minimum = " + std::to_string(t_min / units::us) + " us)",
                              t_min);
    }
    return t_prime;
}

struct ProtocolTiming {
    double t_s = 0.0;      // storage time, retrieval onset
    double t_prime = 0.0;  // wait before the pi pulse
    double t_pi = 0.0;     // pi-pulse duration
    double k = 0.0;
    double k_r = 0.0;

    /// Pi pulse still running at retrieval onset.
    bool pulse_overlaps_retrieval() const { return t_prime + t_pi > t_s; }
};

inline ProtocolTiming plan_timing(double t_s, double k, double k_r, double omega_r) {
    return {t_s, wait_time(t_s, k, k_r, omega_r), pi_time(omega_r), k, k_r};
}

/// Relative violation of the matching condition; ~1e-16 for planned timings.
inline double check_matching(const ProtocolTiming& t) {
    const double half_pi_time = 0.5 * t.t_pi;  // pi / (2 Omega_r)
    return std::abs((t.k - t.k_r) + t.k_r * (half_pi_time + t.t_prime) / t.t_s) / t.k_r;
}

}  // namespace rydroute
