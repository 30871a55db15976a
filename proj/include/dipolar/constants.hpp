#pragma once

namespace dipolar {

/// Apéry's constant ζ(3).
inline constexpr double zeta3 = 1.2020569031595942853997381615114;
inline constexpr double pi = 3.14159265358979323846264338327950288;

namespace si {
inline constexpr double epsilon0 = 8.8541878128e-12;    // F/m
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double planck = 6.62607015e-34;        // J s
inline constexpr double debye = 3.33564095198152e-30;   // C m
inline constexpr double amu = 1.66053906660e-27;        // kg
}  // namespace si

}  // namespace dipolar
