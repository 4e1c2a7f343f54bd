#pragma once

// Atomic level energies and transition wavelengths.
//
// Low-lying levels come from a plain-text data file; Rydberg levels are
// generated with the Rydberg-Ritz formula
//
//     E(n) = E_ion - R / (n - delta(n))^2,  delta(n) = d0 + d2 / (n - d0)^2
//
// All energies are vacuum wavenumbers in cm^-1 and all wavelengths are
// vacuum wavelengths in nm.

#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rydroute/constants.hpp"
#include "rydroute/error.hpp"

namespace rydroute {

struct QuantumDefectSeries {
    std::string label;  // e.g. "nS1/2"
    double delta0 = 0.0;
    double delta2 = 0.0;

    double defect(double n) const {
        const double m = n - delta0;
        return delta0 + delta2 / (m * m);
    }
};

struct LevelTable {
    std::string species;
    std::map<std::string, double, std::less<>> entries;  // cm^-1
    std::map<std::string, QuantumDefectSeries, std::less<>> series;
    double ionization_limit = 0.0;  // cm^-1
    double rydberg_constant = 0.0;  // cm^-1, mass corrected
    double atomic_mass_u = 0.0;

    double energy(std::string_view label) const {
        auto it = entries.find(label);
        if (it == entries.end())
            throw DataError("unknown level '" + std::string(label) + "'");
        return it->second;
    }

    const QuantumDefectSeries& find_series(std::string_view label) const {
        auto it = series.find(label);
        if (it == series.end())
            throw DataError("unknown quantum-defect series '" + std::string(label) + "'");
        return it->second;
    }
};

/// A Rydberg level addressed by principal quantum number and series label.
struct RydbergLevel {
    int n = 0;
    std::string series = "nS1/2";
};

using LevelRef = std::variant<std::string, RydbergLevel>;

struct Transition {
    std::string lower;
    std::string upper;
    double vacuum_wavelength = 0.0;  // nm
};

/// Excitation, Raman and retrieval wavelengths for one readout case.
struct LevelScheme {
    int case_id = 0;
    std::string ground = "6S1/2";
    std::string intermediate;   // |e>, also the retrieval intermediate |e'>
    std::string raman_state;    // |f>
    int n1 = 65;
    int n2 = 70;
    std::string series = "nS1/2";

    double lambda1 = 0.0;  // |g>  -> |e>   probe / signal
    double lambda2 = 0.0;  // |e>  -> |r1>  coupling
    double lambda3 = 0.0;  // |f>  -> |r1>  Raman leg a
    double lambda4 = 0.0;  // |f>  -> |r2>  Raman leg b
    double lambda5 = 0.0;  // |e'> -> |r2>  retrieval

    std::array<double, 5> wavelengths() const {
        return {lambda1, lambda2, lambda3, lambda4, lambda5};
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

inline double parse_double(const std::string& tok, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v))
        throw DataError(where + ": invalid number '" + tok + "'");
    return v;
}

}  // namespace detail

/// Parses the level data format (see docs/formats.md).
inline LevelTable parse_level_table(std::istream& in, const std::string& source = "<stream>") {
    LevelTable table;
    bool have_header = false;
    bool have_ion = false;
    bool have_ryd = false;
    std::string section;
    std::string line;
    int lineno = 0;

    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = source + ":" + std::to_string(lineno);
        auto body = detail::trim(std::string_view(line).substr(0, line.find('#')));
        if (body.empty()) continue;

        if (body.front() == '[') {
            if (body.back() != ']') throw DataError(where + ": unterminated section header");
            section = std::string(body.substr(1, body.size() - 2));
            if (section != "constants" && section != "levels" && section != "quantum_defects")
                throw DataError(where + ": unknown section [" + section + "]");
            continue;
        }

        auto tok = detail::split_ws(body);
        if (!have_header) {
            if (tok.size() != 2 || tok[0] != "rydroute-levels" || tok[1] != "1")
                throw DataError(where + ": expected 'rydroute-levels 1' header");
            have_header = true;
            continue;
        }

        if (section.empty()) {
            if (tok.size() == 2 && tok[0] == "species") {
                table.species = tok[1];
                continue;
            }
            throw DataError(where + ": record outside of any section");
        }

        if (section == "constants") {
            if (tok.size() != 2) throw DataError(where + ": expected 'name value'");
            const double v = detail::parse_double(tok[1], where);
            if (tok[0] == "ionization_limit") {
                table.ionization_limit = v;
                have_ion = true;
            } else if (tok[0] == "rydberg_constant") {
                table.rydberg_constant = v;
                have_ryd = true;
            } else if (tok[0] == "atomic_mass_u") {
                table.atomic_mass_u = v;
            } else {
                throw DataError(where + ": unknown constant '" + tok[0] + "'");
            }
        } else if (section == "levels") {
            if (tok.size() != 2) throw DataError(where + ": expected 'label energy'");
            const double v = detail::parse_double(tok[1], where);
            if (v < 0.0) throw DataError(where + ": negative level energy");
            if (!table.entries.emplace(tok[0], v).second)
                throw DataError(where + ": duplicate level '" + tok[0] + "'");
        } else {
            if (tok.size() != 3) throw DataError(where + ": expected 'series delta0 delta2'");
            QuantumDefectSeries s{tok[0], detail::parse_double(tok[1], where),
                                  detail::parse_double(tok[2], where)};
            if (!(s.delta0 > 0.0 && s.delta0 < 5.0))
                throw DataError(where + ": delta0 outside (0, 5)");
            if (!table.series.emplace(s.label, s).second)
                throw DataError(where + ": duplicate series '" + s.label + "'");
        }
    }

    if (!have_header) throw DataError(source + ": empty or missing header");
    if (!have_ion || !have_ryd)
        throw DataError(source + ": ionization_limit and rydberg_constant are required");
    for (const auto& [label, e] : table.entries) {
        if (!(e < table.ionization_limit))
            throw DataError(source + ": level '" + label + "' above the ionization limit");
    }
    return table;
}

inline LevelTable load_level_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open level data file '" + path.string() + "'");
    return parse_level_table(in, path.string());
}

/// Data file location: $RYDROUTE_DATA if set, otherwise the shipped file.
inline std::filesystem::path default_data_path() {
    if (const char* env = std::getenv("RYDROUTE_DATA"); env && *env) return env;
#ifdef RYDROUTE_DEFAULT_DATA
    return RYDROUTE_DEFAULT_DATA;
#else
    return "data/cs_levels.dat";
#endif
}

inline double rydberg_energy(int n, const QuantumDefectSeries& series, const LevelTable& table) {
    if (n < 10) throw std::invalid_argument("rydberg_energy: n must be >= 10");
    if (static_cast<double>(n) <= series.delta0)
        throw std::invalid_argument("rydberg_energy: n <= delta0 gives no physical n*");
    const double n_eff = n - series.defect(n);
    return table.ionization_limit - table.rydberg_constant / (n_eff * n_eff);
}

/// Parses labels like "65S1/2" into a Rydberg reference for series "nS1/2".
inline std::optional<RydbergLevel> parse_rydberg_label(std::string_view label, const LevelTable& table) {
    std::size_t digits = 0;
    while (digits < label.size() && std::isdigit(static_cast<unsigned char>(label[digits]))) ++digits;
    if (digits == 0 || digits == label.size()) return std::nullopt;
    int n = 0;
    std::from_chars(label.data(), label.data() + digits, n);
    std::string series = "n" + std::string(label.substr(digits));
    if (!table.series.contains(series)) return std::nullopt;
    return RydbergLevel{n, series};
}

inline double level_energy(const LevelRef& ref, const LevelTable& table) {
    if (const auto* ryd = std::get_if<RydbergLevel>(&ref))
        return rydberg_energy(ryd->n, table.find_series(ryd->series), table);
    const auto& label = std::get<std::string>(ref);
    if (auto it = table.entries.find(label); it != table.entries.end()) return it->second;
    if (auto ryd = parse_rydberg_label(label, table))
        return rydberg_energy(ryd->n, table.find_series(ryd->series), table);
    throw DataError("unknown level '" + label + "'");
}

inline std::string level_label(const LevelRef& ref) {
    if (const auto* ryd = std::get_if<RydbergLevel>(&ref))
        return std::to_string(ryd->n) + ryd->series.substr(1);
    return std::get<std::string>(ref);
}

/// lambda = 1e7 / dE, with dE in cm^-1 and lambda in nm.
inline double wavelength_from_interval(double delta_cm) {
    if (!(delta_cm > 0.0)) throw std::invalid_argument("transition requires upper > lower energy");
    return 1e7 / delta_cm;
}

inline Transition transition(const LevelRef& lower, const LevelRef& upper, const LevelTable& table) {
    const double dE = level_energy(upper, table) - level_energy(lower, table);
    return {level_label(lower), level_label(upper), wavelength_from_interval(dE)};
}

inline double transition_wavelength(const LevelRef& lower, const LevelRef& upper, const LevelTable& table) {
    return transition(lower, upper, table).vacuum_wavelength;
}

/// Intermediate states |e> and |f> of the seven readout cases.
struct CaseLevels {
    int case_id;
    const char* intermediate;
    const char* raman_state;
};

inline constexpr std::array<CaseLevels, 7> readout_cases{{
    {1, "6P1/2", "7P3/2"},
    {2, "6P1/2", "7P1/2"},
    {3, "6P3/2", "7P3/2"},
    {4, "6P3/2", "7P1/2"},
    {5, "6P1/2", "6P3/2"},
    {6, "6P1/2", "6P1/2"},
    {7, "6P3/2", "6P3/2"},
}};

inline LevelScheme case_wavelengths(int case_id, int n1, int n2, const LevelTable& table,
                                    const std::string& series = "nS1/2") {
    if (case_id < 1 || case_id > static_cast<int>(readout_cases.size()))
        throw std::invalid_argument("unknown case id " + std::to_string(case_id));
    const auto& c = readout_cases[static_cast<std::size_t>(case_id - 1)];

    LevelScheme s;
    s.case_id = case_id;
    s.intermediate = c.intermediate;
    s.raman_state = c.raman_state;
    s.n1 = n1;
    s.n2 = n2;
    s.series = series;

    const RydbergLevel r1{n1, series};
    const RydbergLevel r2{n2, series};
    s.lambda1 = transition_wavelength(s.ground, s.intermediate, table);
    s.lambda2 = transition_wavelength(s.intermediate, r1, table);
    s.lambda3 = transition_wavelength(s.raman_state, r1, table);
    s.lambda4 = transition_wavelength(s.raman_state, r2, table);
    s.lambda5 = transition_wavelength(s.intermediate, r2, table);
    return s;
}

}  // namespace rydroute
