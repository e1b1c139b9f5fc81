#pragma once

#include <numbers>

namespace pairsource {

inline constexpr double kSpeedOfLight = 299792458.0;     // m/s
inline constexpr double kHbar = 1.054571817e-34;         // J s
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr char kToolVersion[] = "0.3.0";

/// Ordinary frequency (Hz) to angular rate (rad/s).
constexpr double angular(double hz) { return kTwoPi * hz; }

}  // namespace pairsource
