#pragma once

// Wavevector algebra for storage, Raman transfer and redirected readout.
//
// Vector convention: every photon absorbed from a beam adds +k (beam
// direction) to the spin-wave wavevector, every photon emitted into a beam
// adds -k. Hence
//
//     K1 = k_probe + k_coupling                 (two-photon storage)
//     Kr = -k3 * dir(lambda3) + k4 * dir(lambda4)  (emit on r1 leg, absorb on r2 leg)
//     K2 = K1 + Kr
//
// and the stored excitation is read out if K2 = k_retr + k_out.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "rydroute/constants.hpp"
#include "rydroute/error.hpp"
#include "rydroute/levels.hpp"

namespace rydroute {

enum class RamanLegs {
    beam_a_drives_r1,  // beam a carries lambda3 (|f>-|r1>), beam b carries lambda4
    beam_a_drives_r2,  // swapped assignment
};

struct BeamGeometry {
    Vec3 probe{0.0, 0.0, -1.0};
    Vec3 coupling{0.0, 0.0, 1.0};
    Vec3 raman_a{0.0, 0.0, 1.0};  // co-propagates with the coupling beam
    Vec3 raman_b{0.0, 0.0, -1.0};
    RamanLegs legs = RamanLegs::beam_a_drives_r1;

    /// Default experimental layout: probe against coupling, Raman pair
    /// counter-propagating with beam a along the coupling beam.
    static BeamGeometry counter_propagating() { return {}; }

    const Vec3& lambda3_direction() const {
        return legs == RamanLegs::beam_a_drives_r1 ? raman_a : raman_b;
    }
    const Vec3& lambda4_direction() const {
        return legs == RamanLegs::beam_a_drives_r1 ? raman_b : raman_a;
    }

    BeamGeometry rotated(const Eigen::Matrix3d& rotation) const {
        BeamGeometry g = *this;
        g.probe = rotation * probe;
        g.coupling = rotation * coupling;
        g.raman_a = rotation * raman_a;
        g.raman_b = rotation * raman_b;
        return g;
    }

    void validate() const {
        for (const Vec3* v : {&probe, &coupling, &raman_a, &raman_b}) {
            if (std::abs(v->norm() - 1.0) > 1e-12)
                throw std::invalid_argument("beam directions must be unit vectors");
        }
    }
};

struct WavevectorSet {
    Vec3 K1 = Vec3::Zero();  // spin wave after storage
    Vec3 Kr = Vec3::Zero();  // Raman momentum transfer
    Vec3 K2 = Vec3::Zero();  // spin wave after the Raman pi pulse
    double k = 0.0;
    double k_r = 0.0;
    double k_prime = 0.0;
};

inline WavevectorSet build_wavevectors(const LevelScheme& scheme, const BeamGeometry& beams) {
    beams.validate();
    for (double l : scheme.wavelengths()) {
        if (!(l > 0.0)) throw std::invalid_argument("wavelengths must be positive");
    }
    WavevectorSet ws;
    ws.K1 = wavenumber_nm(scheme.lambda1) * beams.probe + wavenumber_nm(scheme.lambda2) * beams.coupling;
    ws.Kr = -wavenumber_nm(scheme.lambda3) * beams.lambda3_direction() +
            wavenumber_nm(scheme.lambda4) * beams.lambda4_direction();
    ws.K2 = ws.K1 + ws.Kr;
    ws.k = ws.K1.norm();
    ws.k_r = ws.Kr.norm();
    ws.k_prime = ws.K2.norm();
    return ws;
}

inline double kr_over_2k(const WavevectorSet& ws) {
    if (!(ws.k > 0.0)) throw std::domain_error("kr_over_2k: |K1| is zero");
    return ws.k_r / (2.0 * ws.k);
}

/// Default relative tolerance on triangle closure.
inline constexpr double triangle_tolerance = 1e-4;

struct TriangleSolution {
    bool feasible = false;
    double theta1 = 0.0;  // output photon vs. spin-wave axis, rad
    double theta2 = 0.0;  // retrieval beam vs. spin-wave axis, rad
    double closure_residual = 0.0;  // rad/m
    double defect = 0.0;  // signed violation of the triangle inequality, rad/m
    double spin_wave_k = 0.0;  // a = |K2|
    double retrieval_k = 0.0;  // b
    double output_k = 0.0;     // c
};

namespace detail {

inline double clamped_acos(double x) {
    if (x > 1.0) return 0.0;
    if (x < -1.0) return constants::pi;
    return std::acos(x);
}

}  // namespace detail

/// Angles of the triangle K2 = k_retr + k_out for side lengths a, b, c.
inline TriangleSolution solve_triangle(double a, double b, double c, double eps = triangle_tolerance) {
    if (!(a > 0.0 && b > 0.0 && c > 0.0))
        throw std::invalid_argument("solve_triangle: magnitudes must be positive");

    TriangleSolution s;
    s.spin_wave_k = a;
    s.retrieval_k = b;
    s.output_k = c;

    const double tol = eps * a;
    const double over = a - (b + c);           // > 0: spin wave too long
    const double under = a - std::abs(b - c);  // < 0: spin wave too short

    if (over > tol) {
        s.defect = over;
        return s;
    }
    if (under < -tol) {
        s.defect = under;
        return s;
    }
    s.feasible = true;

    if (std::abs(over) <= tol) {
        s.theta1 = 0.0;
        s.theta2 = 0.0;
    } else if (std::abs(under) <= tol) {
        // anti-parallel pair; the longer leg points along K2
        s.theta1 = b >= c ? constants::pi : 0.0;
        s.theta2 = b >= c ? 0.0 : constants::pi;
    } else {
        const double cos1 = (a * a + c * c - b * b) / (2.0 * a * c);
        const double cos2 = (a * a + b * b - c * c) / (2.0 * a * b);
        if (std::abs(cos1) > 1.0 + 1e-9 || std::abs(cos2) > 1.0 + 1e-9) {
            s.feasible = false;
            s.defect = std::abs(over) < std::abs(under) ? over : under;
            return s;
        }
        s.theta1 = detail::clamped_acos(cos1);
        s.theta2 = detail::clamped_acos(cos2);
    }

    // close the triangle in its own plane
    const double rx = b * std::cos(s.theta2) + c * std::cos(s.theta1);
    const double ry = b * std::sin(s.theta2) - c * std::sin(s.theta1);
    s.closure_residual = std::hypot(a - rx, ry);
    return s;
}

inline TriangleSolution solve_retrieval_triangle(double k2_magnitude, double lambda5_nm, double lambda_out_nm,
                                                 double eps = triangle_tolerance) {
    if (!(lambda5_nm > 0.0 && lambda_out_nm > 0.0))
        throw std::invalid_argument("solve_retrieval_triangle: wavelengths must be positive");
    return solve_triangle(k2_magnitude, wavenumber_nm(lambda5_nm), wavenumber_nm(lambda_out_nm), eps);
}

/// Orthonormal pair perpendicular to `axis`; azimuth zero lies along the first.
inline std::pair<Vec3, Vec3> perpendicular_basis(const Vec3& axis) {
    const Vec3 u = axis.normalized();
    const Vec3 ref = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 e1 = (ref - ref.dot(u) * u).normalized();
    return {e1, u.cross(e1)};
}

/// Unit vector at polar angle `theta` from `axis` and azimuth `phi`.
inline Vec3 direction_at(const Vec3& axis, double theta, double phi) {
    const auto [e1, e2] = perpendicular_basis(axis);
    return std::cos(theta) * axis.normalized() +
           std::sin(theta) * (std::cos(phi) * e1 + std::sin(phi) * e2);
}

struct ReadoutDirections {
    Vec3 retrieval;
    Vec3 output;
};

/// Retrieval beam at azimuth `phi`, output photon on the opposite side.
inline ReadoutDirections readout_directions(const TriangleSolution& s, const Vec3& axis, double phi) {
    if (!s.feasible)
        throw InfeasibleGeometry("readout triangle does not close", s.defect);
    return {direction_at(axis, s.theta2, phi), direction_at(axis, s.theta1, phi + constants::pi)};
}

struct RouterChannel {
    double azimuth = 0.0;  // rad, of the retrieval beam
    Vec3 retrieval;
    Vec3 output;
    double residual = 0.0;  // |K2 - k_retr - k_out| / |K2|
};

struct RouterFanout {
    double theta1 = 0.0;
    double theta2 = 0.0;
    std::vector<RouterChannel> channels;

    std::size_t size() const { return channels.size(); }
};

inline RouterFanout router_fanout(const TriangleSolution& s, const Vec3& k2_axis, int n_channels,
                                  double phase_offset = 0.0) {
    if (!s.feasible) throw InfeasibleGeometry("router needs a feasible readout triangle", s.defect);
    if (n_channels < 1) throw std::invalid_argument("router_fanout: N must be >= 1");

    const Vec3 axis = k2_axis.normalized();
    const Vec3 K2 = s.spin_wave_k * axis;

    RouterFanout fan;
    fan.theta1 = s.theta1;
    fan.theta2 = s.theta2;
    fan.channels.reserve(static_cast<std::size_t>(n_channels));
    for (int i = 0; i < n_channels; ++i) {
        const double phi = phase_offset + constants::two_pi * i / n_channels;
        const auto dirs = readout_directions(s, axis, phi);
        const Vec3 miss = K2 - s.retrieval_k * dirs.retrieval - s.output_k * dirs.output;
        fan.channels.push_back({phi, dirs.retrieval, dirs.output, miss.norm() / s.spin_wave_k});
    }
    return fan;
}

/// K2 - k_retr - k_out for explicit beam directions.
inline Vec3 mismatch_vector(const WavevectorSet& ws, const Vec3& retrieval_dir, double lambda5_nm,
                            const Vec3& output_dir, double lambda_out_nm) {
    return ws.K2 - wavenumber_nm(lambda5_nm) * retrieval_dir - wavenumber_nm(lambda_out_nm) * output_dir;
}

struct CaseAngles {
    int case_id = 0;
    LevelScheme scheme;
    WavevectorSet wavevectors;
    double ratio = 0.0;  // k_r / 2k
    TriangleSolution solution;
    double lambda5 = 0.0;
    double lambda_out = 0.0;
};

struct CaseOptions {
    int n1 = 65;
    int n2 = 70;
    BeamGeometry beams = BeamGeometry::counter_propagating();
    std::optional<double> lambda5;     // nm, defaults to |e> -> |r2>
    std::optional<double> lambda_out;  // nm, defaults to lambda1
    double tolerance = triangle_tolerance;
};

inline CaseAngles solve_case(int case_id, const LevelTable& table, const CaseOptions& opt = {}) {
    CaseAngles out;
    out.case_id = case_id;
    out.scheme = case_wavelengths(case_id, opt.n1, opt.n2, table);
    if (opt.lambda5) out.scheme.lambda5 = *opt.lambda5;
    out.wavevectors = build_wavevectors(out.scheme, opt.beams);
    out.ratio = kr_over_2k(out.wavevectors);
    out.lambda5 = out.scheme.lambda5;
    out.lambda_out = opt.lambda_out.value_or(out.scheme.lambda1);
    out.solution = solve_retrieval_triangle(out.wavevectors.k_prime, out.lambda5, out.lambda_out, opt.tolerance);
    return out;
}

inline std::vector<CaseAngles> solve_all_cases(const LevelTable& table, const CaseOptions& opt = {}) {
    std::vector<CaseAngles> rows;
    for (const auto& c : readout_cases) rows.push_back(solve_case(c.case_id, table, opt));
    return rows;
}

}  // namespace rydroute
