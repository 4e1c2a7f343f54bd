#pragma once

#include <numbers>

#include <Eigen/Core>

namespace rydroute {

using Vec3 = Eigen::Vector3d;

namespace constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018
inline constexpr double boltzmann = 1.380649e-23;             // J/K
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double standard_gravity = 9.80665;           // m/s^2

inline constexpr double cesium_mass = 132.905451933 * atomic_mass_unit;

}  // namespace constants

namespace units {

inline constexpr double nm = 1e-9;
inline constexpr double um = 1e-6;
inline constexpr double us = 1e-6;
inline constexpr double ns = 1e-9;
inline constexpr double uK = 1e-6;
inline constexpr double MHz = 1e6;

/// Angular frequency 2*pi*f for a frequency given in MHz.
constexpr double two_pi_MHz(double f) { return constants::two_pi * f * MHz; }

}  // namespace units

/// Vacuum wavenumber 2*pi/lambda in rad/m for a wavelength in nanometres.
inline double wavenumber_nm(double lambda_nm) {
    return constants::two_pi / (lambda_nm * units::nm);
}

}  // namespace rydroute
