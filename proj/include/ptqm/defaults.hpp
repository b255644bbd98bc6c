#pragma once

// Numeric defaults shared by the library and the command line. Tolerance
// defaults live in Tolerances (numerics.hpp).
namespace ptqm::defaults {

inline constexpr int kBasisSize = 200;
inline constexpr int kGridPoints = 400;
inline constexpr double kGridExtent = 12.0;
inline constexpr int kLevels = 10;

}  // namespace ptqm::defaults
