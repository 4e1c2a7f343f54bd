#pragma once

// Run configuration for `rydroute simulate`.
//
// Flat `key = value` lines, `#` comments. Physical quantities carry a unit
// suffix separated by whitespace (`temperature = 66.9 uK`). Frequencies are
// cyclic: `omega_r = 0.88 MHz` means Omega_r = 2 pi x 0.88 MHz. Unknown keys
// and missing or wrong units are errors.

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rydroute/constants.hpp"
#include "rydroute/ensemble.hpp"
#include "rydroute/error.hpp"
#include "rydroute/levels.hpp"

namespace rydroute {

enum class SweepKind { storage, duration };

struct RunConfig {
    int case_id = 7;
    int n1 = 65;
    int n2 = 70;
    std::optional<double> lambda5;     // nm
    std::optional<double> lambda_out;  // nm

    ThermalConfig thermal;
    DecayChannels decay;

    std::optional<double> omega_r;  // rad/s; 2 pi x 0.88 MHz unless legs are given
    std::optional<double> omega3;
    std::optional<double> omega4;
    std::optional<double> detuning;
    std::optional<double> raman_duration;  // s

    SweepKind sweep = SweepKind::storage;
    bool protocol_on = true;
    RetrievalDirection retrieval = RetrievalDirection::matched;
    int repetitions = 100;
    int threads = 1;

    double t_start = 0.0;
    double t_stop = 7.6 * units::us;
    int points = 20;
    double storage_time = 7.0 * units::us;  // fixed t_s of a duration sweep

    std::string format = "csv";
    std::string output;  // empty: stdout

    /// Sets one key from its textual value; throws DataError on bad input.
    void set(std::string_view key, std::string_view value);

    std::vector<double> grid() const {
        std::vector<double> g(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i)
            g[static_cast<std::size_t>(i)] = points == 1 ? t_start : t_start + (t_stop - t_start) * i / (points - 1);
        return g;
    }

    RamanPulse pulse() const {
        RamanPulse p;
        if (omega3 || omega4 || detuning) {
            if (!(omega3 && omega4 && detuning))
                throw DataError("config: omega3, omega4 and detuning must be given together");
            p = RamanPulse::from_legs(*omega3, *omega4, *detuning);
            if (omega_r) {
                p.omega_r = *omega_r;
                p.duration = pi_time(*omega_r);
            }
        } else {
            p = RamanPulse::pi_pulse(omega_r.value_or(units::two_pi_MHz(0.88)));
        }
        if (raman_duration) p.duration = *raman_duration;
        return p;
    }

    void validate() const {
        if (t_start < 0.0 || t_stop < t_start) throw DataError("config: need 0 <= t_start <= t_stop");
        thermal.validate();
        decay.validate();
    }

    SweepSetup setup(const LevelTable& table) const {
        SweepSetup s;
        s.scheme = case_wavelengths(case_id, n1, n2, table);
        if (lambda5) s.scheme.lambda5 = *lambda5;
        s.lambda_out = lambda_out;
        s.pulse = pulse();
        s.thermal = thermal;
        if (table.atomic_mass_u > 0.0) s.thermal.atom_mass = table.atomic_mass_u * constants::atomic_mass_unit;
        s.decay = decay;
        s.retrieval = retrieval;
        s.repetitions = repetitions;
        s.threads = threads;
        return s;
    }
};

namespace detail {

struct Quantity {
    double value;
    std::string unit;
};

inline Quantity split_quantity(std::string_view key, std::string_view text) {
    auto tok = split_ws(text);
    if (tok.empty()) throw DataError("config: empty value for '" + std::string(key) + "'");
    if (tok.size() > 2) throw DataError("config: too many tokens for '" + std::string(key) + "'");
    double v = 0.0;
    if (tok[0] == "inf") {
        v = std::numeric_limits<double>::infinity();
    } else {
        v = parse_double(tok[0], "config key '" + std::string(key) + "'");
    }
    return {v, tok.size() == 2 ? tok[1] : std::string{}};
}

inline double scaled(std::string_view key, const Quantity& q, const std::map<std::string, double>& table,
                     std::string_view kind) {
    auto it = table.find(q.unit);
    if (it == table.end()) {
        std::string allowed;
        for (const auto& [u, f] : table) allowed += (allowed.empty() ? "" : ", ") + u;
        throw DataError("config: '" + std::string(key) + "' needs a " + std::string(kind) + " unit (" + allowed +
                        "), got '" + q.unit + "'");
    }
    return q.value * it->second;
}

inline const std::map<std::string, double> time_units{{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}};
inline const std::map<std::string, double> length_units{{"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
inline const std::map<std::string, double> temperature_units{{"K", 1.0}, {"mK", 1e-3}, {"uK", 1e-6}, {"nK", 1e-9}};
inline const std::map<std::string, double> frequency_units{
    {"Hz", constants::two_pi}, {"kHz", constants::two_pi * 1e3}, {"MHz", constants::two_pi * 1e6}};
inline const std::map<std::string, double> rate_units{{"1/s", 1.0}, {"1/ms", 1e3}, {"1/us", 1e6}};
inline const std::map<std::string, double> accel_units{{"m/s2", 1.0}, {"g", constants::standard_gravity}};
inline const std::map<std::string, double> no_unit{{"", 1.0}};

inline long long integer(std::string_view key, std::string_view text) {
    const auto q = split_quantity(key, text);
    if (!q.unit.empty() || !std::isfinite(q.value) || std::abs(q.value) > 9e15 ||
        q.value != static_cast<double>(static_cast<long long>(q.value)))
        throw DataError("config: '" + std::string(key) + "' must be a plain integer");
    return static_cast<long long>(q.value);
}

inline std::string word(std::string_view key, std::string_view text, std::initializer_list<std::string_view> allowed) {
    auto tok = split_ws(text);
    if (tok.size() == 1) {
        for (auto a : allowed)
            if (tok[0] == a) return tok[0];
    }
    std::string opts;
    for (auto a : allowed) opts += (opts.empty() ? "" : "|") + std::string(a);
    throw DataError("config: '" + std::string(key) + "' must be one of " + opts);
}

}  // namespace detail

inline void RunConfig::set(std::string_view key, std::string_view value) {
    using namespace detail;
    const std::string k(key);
    auto q = [&] { return split_quantity(key, value); };

    if (k == "case") {
        case_id = static_cast<int>(integer(key, value));
        if (case_id < 1 || case_id > 7) throw DataError("config: case must be 1..7");
    } else if (k == "n1" || k == "n2") {
        const auto n = static_cast<int>(integer(key, value));
        if (n < 10) throw DataError("config: principal quantum numbers must be >= 10");
        (k == "n1" ? n1 : n2) = n;
    } else if (k == "lambda5") {
        lambda5 = scaled(key, q(), length_units, "length") / units::nm;
    } else if (k == "lambda_out") {
        lambda_out = scaled(key, q(), length_units, "length") / units::nm;
    } else if (k == "atoms") {
        const auto n = integer(key, value);
        if (n < 2) throw DataError("config: atoms must be >= 2");
        thermal.atom_count = static_cast<std::size_t>(n);
    } else if (k == "temperature") {
        thermal.temperature = scaled(key, q(), temperature_units, "temperature");
    } else if (k == "cloud_sigma_z") {
        thermal.cloud_sigma_z = scaled(key, q(), length_units, "length");
    } else if (k == "cloud_sigma_r") {
        thermal.cloud_sigma_r = scaled(key, q(), length_units, "length");
    } else if (k == "gravity") {
        thermal.gravity = scaled(key, q(), accel_units, "acceleration");
    } else if (k == "dimensions") {
        thermal.dimensions = static_cast<int>(integer(key, value));
        if (thermal.dimensions != 1 && thermal.dimensions != 3) throw DataError("config: dimensions must be 1 or 3");
    } else if (k == "seed") {
        const auto s = integer(key, value);
        if (s < 0) throw DataError("config: seed must be >= 0");
        thermal.seed = static_cast<std::uint64_t>(s);
    } else if (k == "tau_r1") {
        decay.tau_r1 = scaled(key, q(), time_units, "time");
    } else if (k == "tau_r2") {
        decay.tau_r2 = scaled(key, q(), time_units, "time");
    } else if (k == "raman_scatter_prob") {
        decay.raman_scatter_prob = scaled(key, q(), no_unit, "dimensionless");
    } else if (k == "extra_dephasing_rate") {
        decay.extra_dephasing_rate = scaled(key, q(), rate_units, "rate");
    } else if (k == "omega_r") {
        omega_r = scaled(key, q(), frequency_units, "frequency");
    } else if (k == "omega3") {
        omega3 = scaled(key, q(), frequency_units, "frequency");
    } else if (k == "omega4") {
        omega4 = scaled(key, q(), frequency_units, "frequency");
    } else if (k == "detuning") {
        detuning = scaled(key, q(), frequency_units, "frequency");
    } else if (k == "raman_duration") {
        raman_duration = scaled(key, q(), time_units, "time");
    } else if (k == "sweep") {
        sweep = word(key, value, {"storage", "duration"}) == "storage" ? SweepKind::storage : SweepKind::duration;
    } else if (k == "protocol") {
        protocol_on = word(key, value, {"on", "off"}) == "on";
    } else if (k == "retrieval") {
        retrieval = word(key, value, {"matched", "reversed"}) == "matched" ? RetrievalDirection::matched
                                                                          : RetrievalDirection::reversed;
    } else if (k == "repetitions") {
        repetitions = static_cast<int>(integer(key, value));
        if (repetitions < 1) throw DataError("config: repetitions must be >= 1");
    } else if (k == "threads") {
        threads = static_cast<int>(integer(key, value));
        if (threads < 1) throw DataError("config: threads must be >= 1");
    } else if (k == "t_start") {
        t_start = scaled(key, q(), time_units, "time");
    } else if (k == "t_stop") {
        t_stop = scaled(key, q(), time_units, "time");
    } else if (k == "points") {
        points = static_cast<int>(integer(key, value));
        if (points < 1) throw DataError("config: points must be >= 1");
    } else if (k == "t_s") {
        storage_time = scaled(key, q(), time_units, "time");
    } else if (k == "format") {
        format = word(key, value, {"csv", "json"});
    } else if (k == "output") {
        output = std::string(trim(value));
    } else {
        throw DataError("config: unknown key '" + k + "'");
    }
}

/// Applies `key = value` lines from a stream on top of `cfg`.
inline void apply_config(RunConfig& cfg, std::istream& in, const std::string& source = "<config>") {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto body = detail::trim(std::string_view(line).substr(0, line.find('#')));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw DataError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        try {
            cfg.set(detail::trim(body.substr(0, eq)), detail::trim(body.substr(eq + 1)));
        } catch (const DataError& e) {
            throw DataError(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

/// Applies a single `key=value` override as given on the command line.
inline void apply_override(RunConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw DataError("override '" + std::string(assignment) + "' lacks '='");
    cfg.set(detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

}  // namespace rydroute
