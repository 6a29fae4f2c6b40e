#pragma once

#include <numbers>

namespace phonon_gate::units {

// CODATA 2018.
inline constexpr double hbar = 1.054571817e-34;           // J s
inline constexpr double atomic_mass = 1.66053906660e-27;  // kg
inline constexpr double hartree = 4.3597447222071e-18;    // J
inline constexpr double bohr = 5.29177210903e-11;         // m

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Atomic unit of C4 (E_h a0^4) in J m^4.
inline constexpr double c4_atomic_unit = hartree * bohr * bohr * bohr * bohr;

// Cyclic frequency to angular frequency and back. All frequencies are stored
// in rad/s; human-facing values are in Hz multiples.
constexpr double hz(double f) { return two_pi * f; }
constexpr double khz(double f) { return two_pi * f * 1e3; }
constexpr double mhz(double f) { return two_pi * f * 1e6; }
constexpr double ghz(double f) { return two_pi * f * 1e9; }

constexpr double to_mhz(double omega) { return omega / (two_pi * 1e6); }
constexpr double to_ghz(double omega) { return omega / (two_pi * 1e9); }

constexpr double um(double x) { return x * 1e-6; }
constexpr double nm(double x) { return x * 1e-9; }
constexpr double to_um(double x) { return x * 1e6; }

constexpr double us(double t) { return t * 1e-6; }
constexpr double ns(double t) { return t * 1e-9; }
constexpr double ps(double t) { return t * 1e-12; }

}  // namespace phonon_gate::units
