#pragma once

// Command-line front end. `run` is the whole program; tools/rydroute.cpp
// only forwards argv and the standard streams.
//
// Exit codes: 0 success, 2 config/data/usage error, 3 infeasible geometry,
// 4 timing violation, 5 fit non-convergence.

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rydroute/analysis.hpp"
#include "rydroute/config.hpp"
#include "rydroute/ensemble.hpp"
#include "rydroute/error.hpp"
#include "rydroute/geometry.hpp"
#include "rydroute/levels.hpp"
#include "rydroute/protocol.hpp"

namespace rydroute::cli {

enum ExitCode : int {
    ok = 0,
    config_error = 2,
    infeasible = 3,
    timing_violation = 4,
    fit_failed = 5,
};

using Json = nlohmann::ordered_json;

/// Reference (k_r/2k, theta1, theta2) per case, shown by --compare-paper.
struct PublishedCase {
    double ratio;
    double theta1;
    double theta2;
};

inline constexpr std::array<PublishedCase, 7> published_cases{{
    {1.05, 2.58, 0.30},
    {1.07, 2.47, 0.35},
    {1.19, 2.09, 0.54},
    {1.21, 2.04, 0.56},
    {2.18, 0.36, 0.20},
    {2.24, 0.0, 0.0},
    {2.48, 0.0, 0.0},
}};

namespace detail {

/// Locale-independent fixed/general formatting.
inline std::string num(double v, const char* spec = "%.10g") {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::string fixed(double v, int digits) {
    const std::string spec = "%." + std::to_string(digits) + "f";
    return num(v, spec.c_str());
}

/// Rounds to a fixed number of decimals for JSON output.
inline double rounded(double v, int digits) {
    if (!std::isfinite(v)) return v;
    const double s = std::pow(10.0, digits);
    const double r = std::round(v * s) / s;
    return r == 0.0 ? 0.0 : r;
}

struct Common {
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::string data;
};

inline void add_common(CLI::App* cmd, Common& c, bool with_data = true) {
    cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", c.seed, "Master seed (used by stochastic commands)");
    if (with_data) cmd->add_option("--data", c.data, "Level data file (default: $RYDROUTE_DATA or shipped file)");
}

inline LevelTable load_table(const Common& c) {
    return load_level_table(c.data.empty() ? default_data_path() : std::filesystem::path(c.data));
}

inline double to_unit(double radians, bool degrees) { return degrees ? radians * 180.0 / constants::pi : radians; }

}  // namespace detail

// ---------------------------------------------------------------------------
// levels

struct LevelsArgs {
    detail::Common common;
    std::vector<int> cases;
    std::vector<std::string> transition;
    int n1 = 65;
    int n2 = 70;
};

inline int cmd_levels(const LevelsArgs& a, std::ostream& out) {
    using detail::fixed;
    const LevelTable table = detail::load_table(a.common);
    const bool json = a.common.format == "json";

    if (!a.transition.empty()) {
        const Transition t = transition(a.transition[0], a.transition[1], table);
        if (json) {
            Json j;
            j["lower"] = t.lower;
            j["upper"] = t.upper;
            j["wavelength_nm"] = detail::rounded(t.vacuum_wavelength, 4);
            out << j.dump(2) << '\n';
        } else {
            out << "lower,upper,wavelength_nm\n" << t.lower << ',' << t.upper << ',' << fixed(t.vacuum_wavelength, 4) << '\n';
        }
        return ok;
    }

    std::vector<int> ids = a.cases;
    const bool list_levels = ids.empty();
    if (ids.empty())
        for (const auto& c : readout_cases) ids.push_back(c.case_id);

    std::vector<LevelScheme> schemes;
    for (int id : ids) schemes.push_back(case_wavelengths(id, a.n1, a.n2, table));

    struct Row {
        std::string label;
        double energy;
    };
    std::vector<Row> levels;
    for (const auto& [label, e] : table.entries) levels.push_back({label, e});
    std::stable_sort(levels.begin(), levels.end(), [](const Row& x, const Row& y) { return x.energy < y.energy; });
    for (int n : {a.n1, a.n2}) {
        const RydbergLevel r{n, "nS1/2"};
        levels.push_back({level_label(r), level_energy(r, table)});
    }

    if (json) {
        Json j;
        j["species"] = table.species;
        j["ionization_limit_cm-1"] = table.ionization_limit;
        if (list_levels) {
            Json arr = Json::array();
            for (const auto& r : levels)
                arr.push_back({{"label", r.label},
                               {"energy_cm-1", detail::rounded(r.energy, 4)},
                               {"binding_cm-1", detail::rounded(table.ionization_limit - r.energy, 4)}});
            j["levels"] = arr;
        }
        Json arr = Json::array();
        for (const auto& s : schemes) {
            arr.push_back({{"case", s.case_id},
                           {"e", s.intermediate},
                           {"f", s.raman_state},
                           {"lambda1_nm", detail::rounded(s.lambda1, 4)},
                           {"lambda2_nm", detail::rounded(s.lambda2, 4)},
                           {"lambda3_nm", detail::rounded(s.lambda3, 4)},
                           {"lambda4_nm", detail::rounded(s.lambda4, 4)},
                           {"lambda5_nm", detail::rounded(s.lambda5, 4)}});
        }
        j["cases"] = arr;
        out << j.dump(2) << '\n';
        return ok;
    }

    if (list_levels) {
        out << "label,energy_cm-1,binding_cm-1\n";
        for (const auto& r : levels)
            out << r.label << ',' << fixed(r.energy, 4) << ',' << fixed(table.ionization_limit - r.energy, 4) << '\n';
        out << '\n';
    }
    out << "case,e,f,lambda1_nm,lambda2_nm,lambda3_nm,lambda4_nm,lambda5_nm\n";
    for (const auto& s : schemes) {
        out << s.case_id << ',' << s.intermediate << ',' << s.raman_state;
        for (double l : s.wavelengths()) out << ',' << fixed(l, 4);
        out << '\n';
    }
    return ok;
}

// ---------------------------------------------------------------------------
// angles

struct AnglesArgs {
    detail::Common common;
    std::vector<int> cases;
    bool compare_paper = false;
    bool degrees = false;
    bool swap_legs = false;
    std::optional<double> lambda5;
    std::optional<double> lambda_out;
    int n1 = 65;
    int n2 = 70;
};

inline int cmd_angles(const AnglesArgs& a, std::ostream& out, std::ostream& err) {
    using detail::fixed;
    const LevelTable table = detail::load_table(a.common);
    CaseOptions opt;
    opt.n1 = a.n1;
    opt.n2 = a.n2;
    opt.lambda5 = a.lambda5;
    opt.lambda_out = a.lambda_out;
    if (a.swap_legs) opt.beams.legs = RamanLegs::beam_a_drives_r2;

    std::vector<int> ids = a.cases;
    if (ids.empty())
        for (const auto& c : readout_cases) ids.push_back(c.case_id);

    std::vector<CaseAngles> rows;
    for (int id : ids) rows.push_back(solve_case(id, table, opt));

    const std::string unit = a.degrees ? "deg" : "rad";
    const int angle_digits = 4;
    bool any_infeasible = false;

    if (a.common.format == "json") {
        Json arr = Json::array();
        for (const auto& r : rows) {
            Json j;
            j["case"] = r.case_id;
            j["kr_over_2k"] = detail::rounded(r.ratio, 4);
            j["feasible"] = r.solution.feasible;
            j["theta1_" + unit] = r.solution.feasible ? Json(detail::rounded(detail::to_unit(r.solution.theta1, a.degrees), angle_digits)) : Json();
            j["theta2_" + unit] = r.solution.feasible ? Json(detail::rounded(detail::to_unit(r.solution.theta2, a.degrees), angle_digits)) : Json();
            j["defect_rad_per_m"] = r.solution.defect;
            if (a.compare_paper) {
                const auto& p = published_cases[static_cast<std::size_t>(r.case_id - 1)];
                j["published"] = {{"kr_over_2k", p.ratio},
                                  {"theta1_" + unit, detail::to_unit(p.theta1, a.degrees)},
                                  {"theta2_" + unit, detail::to_unit(p.theta2, a.degrees)}};
                j["delta"] = {{"kr_over_2k", detail::rounded(r.ratio - p.ratio, 4)},
                              {"theta1_" + unit, detail::rounded(detail::to_unit(r.solution.theta1 - p.theta1, a.degrees), angle_digits)},
                              {"theta2_" + unit, detail::rounded(detail::to_unit(r.solution.theta2 - p.theta2, a.degrees), angle_digits)}};
            }
            any_infeasible |= !r.solution.feasible;
            arr.push_back(j);
        }
        out << arr.dump(2) << '\n';
    } else {
        out << "case,kr_over_2k,theta1_" << unit << ",theta2_" << unit << ",feasible,defect_rad_per_m";
        if (a.compare_paper)
            out << ",published_kr_over_2k,published_theta1_" << unit << ",published_theta2_" << unit
                << ",delta_kr_over_2k,delta_theta1_" << unit << ",delta_theta2_" << unit;
        out << '\n';
        for (const auto& r : rows) {
            const auto& s = r.solution;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            const double t1 = s.feasible ? detail::to_unit(s.theta1, a.degrees) : nan;
            const double t2 = s.feasible ? detail::to_unit(s.theta2, a.degrees) : nan;
            out << r.case_id << ',' << fixed(r.ratio, 4) << ',' << fixed(t1, angle_digits) << ','
                << fixed(t2, angle_digits) << ',' << (s.feasible ? "true" : "false") << ',' << detail::num(s.defect, "%.6e");
            if (a.compare_paper) {
                const auto& p = published_cases[static_cast<std::size_t>(r.case_id - 1)];
                const double p1 = detail::to_unit(p.theta1, a.degrees);
                const double p2 = detail::to_unit(p.theta2, a.degrees);
                out << ',' << fixed(p.ratio, 2) << ',' << fixed(p1, 2) << ',' << fixed(p2, 2) << ','
                    << fixed(r.ratio - p.ratio, 4) << ',' << fixed(t1 - p1, angle_digits) << ','
                    << fixed(t2 - p2, angle_digits);
            }
            out << '\n';
            any_infeasible |= !s.feasible;
        }
    }

    for (const auto& r : rows) {
        if (!r.solution.feasible)
            err << "case " << r.case_id << ": readout triangle does not close (defect "
                << detail::num(r.solution.defect, "%.6e") << " rad/m)\n";
    }
    return any_infeasible ? infeasible : ok;
}

// ---------------------------------------------------------------------------
// router

struct RouterArgs {
    detail::Common common;
    int case_id = 4;
    int channels = 6;
    double phase_offset = 0.0;
    bool degrees = false;
    std::optional<double> lambda5;
    std::optional<double> lambda_out;
    int n1 = 65;
    int n2 = 70;
};

inline int cmd_router(const RouterArgs& a, std::ostream& out, std::ostream& err) {
    using detail::fixed;
    const LevelTable table = detail::load_table(a.common);
    CaseOptions opt;
    opt.n1 = a.n1;
    opt.n2 = a.n2;
    opt.lambda5 = a.lambda5;
    opt.lambda_out = a.lambda_out;
    const CaseAngles c = solve_case(a.case_id, table, opt);
    if (!c.solution.feasible) {
        err << "case " << a.case_id << ": readout triangle does not close (defect "
            << detail::num(c.solution.defect, "%.6e") << " rad/m)\n";
        return infeasible;
    }
    const RouterFanout fan = router_fanout(c.solution, c.wavevectors.K2, a.channels, a.phase_offset);
    const std::string unit = a.degrees ? "deg" : "rad";

    if (a.common.format == "json") {
        Json j;
        j["case"] = a.case_id;
        j["channels"] = a.channels;
        j["theta1_" + unit] = detail::rounded(detail::to_unit(fan.theta1, a.degrees), 4);
        j["theta2_" + unit] = detail::rounded(detail::to_unit(fan.theta2, a.degrees), 4);
        j["k2_axis"] = {detail::rounded(c.wavevectors.K2.normalized().x(), 6), detail::rounded(c.wavevectors.K2.normalized().y(), 6),
                        detail::rounded(c.wavevectors.K2.normalized().z(), 6)};
        Json arr = Json::array();
        for (std::size_t i = 0; i < fan.size(); ++i) {
            const auto& ch = fan.channels[i];
            arr.push_back({{"channel", i},
                           {"azimuth_" + unit, detail::rounded(detail::to_unit(ch.azimuth, a.degrees), 4)},
                           {"retrieval", {detail::rounded(ch.retrieval.x(), 6), detail::rounded(ch.retrieval.y(), 6), detail::rounded(ch.retrieval.z(), 6)}},
                           {"output", {detail::rounded(ch.output.x(), 6), detail::rounded(ch.output.y(), 6), detail::rounded(ch.output.z(), 6)}},
                           {"closure_residual", ch.residual < 1e-12 ? 0.0 : ch.residual}});
        }
        j["fanout"] = arr;
        out << j.dump(2) << '\n';
        return ok;
    }

    out << "channel,azimuth_" << unit << ",retr_x,retr_y,retr_z,out_x,out_y,out_z,theta1_" << unit << ",theta2_"
        << unit << ",closure_residual\n";
    auto v = [](double x) { return fixed(std::abs(x) < 5e-7 ? 0.0 : x, 6); };
    for (std::size_t i = 0; i < fan.size(); ++i) {
        const auto& ch = fan.channels[i];
        out << i << ',' << fixed(detail::to_unit(ch.azimuth, a.degrees), 4) << ',' << v(ch.retrieval.x()) << ','
            << v(ch.retrieval.y()) << ',' << v(ch.retrieval.z()) << ',' << v(ch.output.x()) << ','
            << v(ch.output.y()) << ',' << v(ch.output.z()) << ',' << fixed(detail::to_unit(fan.theta1, a.degrees), 4)
            << ',' << fixed(detail::to_unit(fan.theta2, a.degrees), 4) << ','
            << (ch.residual < 1e-12 ? std::string("0") : detail::num(ch.residual, "%.1e")) << '\n';
    }
    return ok;
}

// ---------------------------------------------------------------------------
// plan

struct PlanArgs {
    detail::Common common;
    int case_id = 7;
    double t_s_us = 7.0;
    std::optional<double> omega_r_MHz;
    std::optional<double> omega3_MHz;
    std::optional<double> omega4_MHz;
    std::optional<double> detuning_MHz;
    int n1 = 65;
    int n2 = 70;
};

inline int cmd_plan(const PlanArgs& a, std::ostream& out, std::ostream& err) {
    using detail::fixed;
    const LevelTable table = detail::load_table(a.common);
    const LevelScheme scheme = case_wavelengths(a.case_id, a.n1, a.n2, table);
    const WavevectorSet ws = build_wavevectors(scheme, BeamGeometry::counter_propagating());

    RamanPulse pulse;
    if (a.omega3_MHz || a.omega4_MHz || a.detuning_MHz) {
        if (!(a.omega3_MHz && a.omega4_MHz && a.detuning_MHz))
            throw DataError("--omega3, --omega4 and --detuning must be given together");
        pulse = RamanPulse::from_legs(units::two_pi_MHz(*a.omega3_MHz), units::two_pi_MHz(*a.omega4_MHz),
                                      units::two_pi_MHz(*a.detuning_MHz));
        if (a.omega_r_MHz) pulse = RamanPulse::pi_pulse(units::two_pi_MHz(*a.omega_r_MHz));
    } else {
        pulse = RamanPulse::pi_pulse(units::two_pi_MHz(a.omega_r_MHz.value_or(0.88)));
    }
    for (const auto& w : pulse.warnings) err << "warning: " << w << '\n';

    const double t_s = a.t_s_us * units::us;
    const double t_min = min_storage_time(ws.k, ws.k_r, pulse.omega_r);
    ProtocolTiming timing;
    try {
        timing = plan_timing(t_s, ws.k, ws.k_r, pulse.omega_r);
    } catch (const TimingViolation& e) {
        err << "error: " << e.what() << '\n';
        return timing_violation;
    }
    const double residual = check_matching(timing);
    const double omega_r_MHz = pulse.omega_r / units::two_pi_MHz(1.0);
    const double stark_MHz = pulse.stark_shift() / units::two_pi_MHz(1.0);

    if (a.common.format == "json") {
        Json j;
        j["case"] = a.case_id;
        j["t_s_us"] = detail::rounded(t_s / units::us, 6);
        j["t_prime_us"] = detail::rounded(timing.t_prime / units::us, 6);
        j["t_pi_us"] = detail::rounded(timing.t_pi / units::us, 6);
        j["t_min_us"] = detail::rounded(t_min / units::us, 6);
        j["omega_r_2pi_MHz"] = detail::rounded(omega_r_MHz, 6);
        j["stark_shift_2pi_MHz"] = detail::rounded(stark_MHz, 6);
        j["k_rad_per_m"] = detail::rounded(ws.k, 1);
        j["k_r_rad_per_m"] = detail::rounded(ws.k_r, 1);
        j["matching_residual"] = residual < 1e-12 ? 0.0 : residual;
        j["pulse_overlaps_retrieval"] = timing.pulse_overlaps_retrieval();
        out << j.dump(2) << '\n';
    } else {
        out << "case,t_s_us,t_prime_us,t_pi_us,t_min_us,omega_r_2pi_MHz,stark_shift_2pi_MHz,k_rad_per_m,k_r_rad_per_m,"
               "matching_residual,pulse_overlaps_retrieval\n";
        out << a.case_id << ',' << fixed(t_s / units::us, 6) << ',' << fixed(timing.t_prime / units::us, 6) << ','
            << fixed(timing.t_pi / units::us, 6) << ',' << fixed(t_min / units::us, 6) << ',' << fixed(omega_r_MHz, 6)
            << ',' << fixed(stark_MHz, 6) << ',' << fixed(ws.k, 1) << ',' << fixed(ws.k_r, 1) << ','
            << (residual < 1e-12 ? std::string("0") : detail::num(residual, "%.3e")) << ','
            << (timing.pulse_overlaps_retrieval() ? "true" : "false") << '\n';
    }
    return ok;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    detail::Common common;
    bool format_given = false;
    std::string config;
    std::vector<std::string> overrides;
    std::string output;
    std::optional<int> threads;
};

inline void write_sweep(std::ostream& os, const RunConfig& cfg, const std::vector<SweepPoint>& pts) {
    const bool storage = cfg.sweep == SweepKind::storage;
    if (cfg.format == "json") {
        Json j;
        j["sweep"] = storage ? "storage" : "duration";
        j["case"] = cfg.case_id;
        j["protocol"] = storage ? (cfg.protocol_on ? "on" : "off") : "on";
        j["retrieval"] = cfg.retrieval == RetrievalDirection::matched ? "matched" : "reversed";
        j["seed"] = cfg.thermal.seed;
        j["atoms"] = cfg.thermal.atom_count;
        j["repetitions"] = cfg.repetitions;
        if (!storage) j["t_s_us"] = cfg.storage_time / units::us;
        Json arr = Json::array();
        for (const auto& p : pts) {
            Json row;
            row[storage ? "t_us" : "tr_us"] = p.t / units::us;
            row["efficiency"] = p.efficiency;
            if (storage) row["stderr"] = p.std_error;
            row["note"] = p.note;
            arr.push_back(row);
        }
        j["points"] = arr;
        os << j.dump(2) << '\n';
        return;
    }
    os << (storage ? "t_us,efficiency,stderr,note\n" : "tr_us,efficiency,note\n");
    for (const auto& p : pts) {
        os << detail::num(p.t / units::us) << ',' << detail::num(p.efficiency);
        if (storage) os << ',' << detail::num(p.std_error);
        os << ',' << p.note << '\n';
    }
}

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    if (!a.config.empty()) {
        std::ifstream in(a.config);
        if (!in) throw DataError("cannot open config file '" + a.config + "'");
        apply_config(cfg, in, a.config);
    }
    for (const auto& o : a.overrides) apply_override(cfg, o);
    if (a.common.seed) cfg.thermal.seed = *a.common.seed;
    if (a.format_given) cfg.format = a.common.format;
    if (!a.output.empty()) cfg.output = a.output;
    if (a.threads) cfg.threads = *a.threads;
    cfg.validate();

    const LevelTable table = detail::load_table(a.common);
    const SweepSetup setup = cfg.setup(table);
    for (const auto& w : setup.pulse.warnings) err << "warning: " << w << '\n';
    const auto grid = cfg.grid();

    std::vector<SweepPoint> pts;
    if (cfg.sweep == SweepKind::storage) {
        pts = sweep_storage(setup, grid, cfg.protocol_on);
    } else {
        pts = sweep_raman_duration(setup, grid, cfg.storage_time);
    }

    if (cfg.output.empty()) {
        write_sweep(out, cfg, pts);
    } else {
        std::ofstream f(cfg.output, std::ios::binary);
        if (!f) throw DataError("cannot write output file '" + cfg.output + "'");
        write_sweep(f, cfg, pts);
    }
    return ok;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
    detail::Common common;
    std::string input;
    std::string model = "gaussian";
    std::string weights = "auto";
};

/// Reads (t, y, weight) from a sweep CSV: first column is time, `efficiency`
/// (or the second column) is y, an optional `stderr` column sets weights.
inline std::vector<FitPoint> read_fit_csv(std::istream& in, const std::string& weights_mode) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("fit: empty input");
    auto split = [](const std::string& s) {
        std::vector<std::string> cols;
        std::stringstream ss(s);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(std::string(rydroute::detail::trim(c)));
        if (!s.empty() && s.back() == ',') cols.emplace_back();
        return cols;
    };
    const auto header = split(line);
    if (header.size() < 2) throw DataError("fit: need at least two columns");
    std::size_t y_col = 1;
    std::optional<std::size_t> se_col;
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (header[i] == "efficiency") y_col = i;
        if (header[i] == "stderr") se_col = i;
    }
    if (weights_mode == "stderr" && !se_col) throw DataError("fit: --weights stderr needs a stderr column");
    const bool use_se = se_col && weights_mode != "none";

    std::vector<FitPoint> data;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (rydroute::detail::trim(line).empty()) continue;
        const auto cols = split(line);
        if (cols.size() <= y_col) throw DataError("fit: line " + std::to_string(lineno) + " is short");
        if (cols[y_col] == "nan" || cols[y_col].empty()) continue;
        const std::string where = "fit: line " + std::to_string(lineno);
        FitPoint p;
        p.t = rydroute::detail::parse_double(cols[0], where);
        p.y = rydroute::detail::parse_double(cols[y_col], where);
        if (use_se && *se_col < cols.size() && cols[*se_col] != "nan")
            p.weight = weight_from_stderr(rydroute::detail::parse_double(cols[*se_col], where));
        data.push_back(p);
    }
    return data;
}

inline int cmd_fit(const FitArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
    const FitModel model = parse_fit_model(a.model);
    std::vector<FitPoint> data;
    if (a.input.empty() || a.input == "-") {
        data = read_fit_csv(in, a.weights);
    } else {
        std::ifstream f(a.input);
        if (!f) throw DataError("cannot open input file '" + a.input + "'");
        data = read_fit_csv(f, a.weights);
    }
    if (data.size() < 4) throw DataError("fit: need at least 4 data points");
    const DecayFit r = fit(model, data);

    const auto names = parameter_names(model);
    std::vector<std::pair<std::string, std::pair<double, double>>> rows;
    for (std::size_t i = 0; i < names.size(); ++i) {
        std::string name = names[i];
        if (name == "tau") name = "tau_us";
        if (name == "Omega") name = "Omega_rad_per_us";
        rows.push_back({name, {r.parameters[i], r.uncertainties[i]}});
    }
    if (model == FitModel::rabi) {
        const double om = r.parameters[1];
        const double d = r.uncertainties[1];
        rows.push_back({"omega_2pi_MHz", {om / constants::two_pi, d / constants::two_pi}});
        rows.push_back({"t_pi_us", {constants::pi / om, constants::pi * d / (om * om)}});
    }

    if (a.common.format == "json") {
        Json j;
        j["model"] = std::string(to_string(model));
        Json params = Json::object();
        for (const auto& [name, vu] : rows) params[name] = {{"value", vu.first}, {"uncertainty", vu.second}};
        j["parameters"] = params;
        j["residual_sum_squares"] = r.residual_sum_squares;
        j["converged"] = r.converged;
        j["degenerate"] = r.degenerate;
        j["iterations"] = r.iterations;
        j["points"] = data.size();
        out << j.dump(2) << '\n';
    } else {
        out << "parameter,value,uncertainty\n";
        for (const auto& [name, vu] : rows) out << name << ',' << detail::num(vu.first) << ',' << detail::num(vu.second) << '\n';
        out << "residual_sum_squares," << detail::num(r.residual_sum_squares) << ",\n";
        out << "converged," << (r.converged ? 1 : 0) << ",\n";
        out << "degenerate," << (r.degenerate ? 1 : 0) << ",\n";
        out << "iterations," << r.iterations << ",\n";
    }
    if (!r.converged) {
        err << "error: fit did not converge" << (r.degenerate ? " (degenerate: constant data, tau unconstrained)" : "")
            << "; best-so-far parameters printed\n";
        return fit_failed;
    }
    return ok;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Phase-matched readout geometry and spin-wave dephasing simulator", "rydroute"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "rydroute 0.1.0");

    LevelsArgs levels;
    auto* c_levels = app.add_subcommand("levels", "Level energies and readout-case wavelengths");
    detail::add_common(c_levels, levels.common);
    c_levels->add_option("--case", levels.cases, "Case id(s) 1-7")->check(CLI::Range(1, 7));
    c_levels->add_option("--transition", levels.transition, "Lower and upper level labels")->expected(2);
    c_levels->add_option("--n1", levels.n1, "Storage Rydberg n")->check(CLI::Range(10, 1000));
    c_levels->add_option("--n2", levels.n2, "Readout Rydberg n")->check(CLI::Range(10, 1000));

    AnglesArgs angles;
    auto* c_angles = app.add_subcommand("angles", "Readout ratio k_r/2k and angles (theta1, theta2) per case");
    detail::add_common(c_angles, angles.common);
    c_angles->add_option("--case", angles.cases, "Case id(s) 1-7")->check(CLI::Range(1, 7));
    c_angles->add_flag("--compare-paper", angles.compare_paper, "Append published values and deltas");
    c_angles->add_flag("--degrees", angles.degrees, "Report angles in degrees");
    c_angles->add_flag("--swap-raman-legs", angles.swap_legs, "Beam a carries lambda4 instead of lambda3");
    c_angles->add_option("--lambda5", angles.lambda5, "Retrieval wavelength override [nm]")->check(CLI::PositiveNumber);
    c_angles->add_option("--lambda-out", angles.lambda_out, "Output wavelength override [nm]")->check(CLI::PositiveNumber);
    c_angles->add_option("--n1", angles.n1)->check(CLI::Range(10, 1000));
    c_angles->add_option("--n2", angles.n2)->check(CLI::Range(10, 1000));

    RouterArgs router;
    auto* c_router = app.add_subcommand("router", "N-channel router fan-out around the K2 axis");
    detail::add_common(c_router, router.common);
    c_router->add_option("--case", router.case_id, "Case id 1-7")->check(CLI::Range(1, 7));
    c_router->add_option("-N,--channels", router.channels, "Number of output channels")->check(CLI::PositiveNumber);
    c_router->add_option("--phase-offset", router.phase_offset, "Azimuth of channel 0 [rad]");
    c_router->add_flag("--degrees", router.degrees, "Report angles in degrees");
    c_router->add_option("--lambda5", router.lambda5, "Retrieval wavelength override [nm]")->check(CLI::PositiveNumber);
    c_router->add_option("--lambda-out", router.lambda_out, "Output wavelength override [nm]")->check(CLI::PositiveNumber);
    c_router->add_option("--n1", router.n1)->check(CLI::Range(10, 1000));
    c_router->add_option("--n2", router.n2)->check(CLI::Range(10, 1000));

    PlanArgs plan;
    auto* c_plan = app.add_subcommand("plan", "Raman pi-pulse timing for a storage time");
    detail::add_common(c_plan, plan.common);
    c_plan->add_option("--case", plan.case_id, "Case id 1-7")->check(CLI::Range(1, 7));
    c_plan->add_option("--ts", plan.t_s_us, "Storage time [us]")->required()->check(CLI::NonNegativeNumber);
    c_plan->add_option("--omega-r", plan.omega_r_MHz, "Effective Raman Rabi frequency / 2pi [MHz]")->check(CLI::PositiveNumber);
    c_plan->add_option("--omega3", plan.omega3_MHz, "Leg Rabi frequency Omega3 / 2pi [MHz]")->check(CLI::PositiveNumber);
    c_plan->add_option("--omega4", plan.omega4_MHz, "Leg Rabi frequency Omega4 / 2pi [MHz]")->check(CLI::PositiveNumber);
    c_plan->add_option("--detuning", plan.detuning_MHz, "Raman detuning / 2pi [MHz]")->check(CLI::PositiveNumber);
    c_plan->add_option("--n1", plan.n1)->check(CLI::Range(10, 1000));
    c_plan->add_option("--n2", plan.n2)->check(CLI::Range(10, 1000));

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Monte Carlo storage-time or Raman-duration sweep");
    detail::add_common(c_sim, sim.common);
    c_sim->add_option("--config", sim.config, "Run configuration file");
    c_sim->add_option("--set", sim.overrides, "Override a config key (key=value)");
    c_sim->add_option("-o,--output", sim.output, "Output file (default stdout)");
    c_sim->add_option("--threads", sim.threads, "Worker threads")->check(CLI::PositiveNumber);

    FitArgs fitargs;
    auto* c_fit = app.add_subcommand("fit", "Fit a decay or Rabi model to a sweep CSV");
    detail::add_common(c_fit, fitargs.common, false);
    c_fit->add_option("-i,--input", fitargs.input, "Sweep CSV (default stdin)");
    c_fit->add_option("--model", fitargs.model, "Model")->check(CLI::IsMember({"gaussian", "exponential", "rabi"}));
    c_fit->add_option("--weights", fitargs.weights, "Point weights")->check(CLI::IsMember({"auto", "none", "stderr"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*c_levels) return cmd_levels(levels, out);
        if (*c_angles) return cmd_angles(angles, out, err);
        if (*c_router) return cmd_router(router, out, err);
        if (*c_plan) return cmd_plan(plan, out, err);
        if (*c_sim) {
            sim.format_given = c_sim->count("--format") > 0;
            return cmd_simulate(sim, out, err);
        }
        if (*c_fit) return cmd_fit(fitargs, in, out, err);
    } catch (const InfeasibleGeometry& e) {
        err << "error: " << e.what() << '\n';
        return infeasible;
    } catch (const TimingViolation& e) {
        err << "error: " << e.what() << '\n';
        return timing_violation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    }
    return config_error;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"rydroute"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::istringstream none;
    return run(static_cast<int>(argv.size()), argv.data(), none, out, err);
}

}  // namespace rydroute::cli
