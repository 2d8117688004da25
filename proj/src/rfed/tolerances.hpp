#pragma once

namespace rfed::tol {

// Central tolerance record. Values are roughly 100x double-precision
// accumulation error for dimensions up to ~1000.

inline constexpr double kSphereUnitNorm = 1e-10;
inline constexpr double kStiefelOrthonormality = 1e-8;
inline constexpr double kSphereTangency = 1e-10;
inline constexpr double kStiefelTangency = 1e-8;

// A sphere pair is treated as antipodal when 1 + <x,y> falls below this.
inline constexpr double kAntipodal = 1e-12;

// Minimum |lambda_i + lambda_j| over eigenvalue pairs of X^T Y for the inverse
// polar retraction's Lyapunov system to count as well posed.
inline constexpr double kSylvesterPairSum = 1e-10;

inline constexpr double kSymmetry = 1e-10;

inline constexpr double kKarcherGradient = 1e-6;

inline constexpr double kEigenResidual = 1e-10;

// Relative eigengap below which the oracle reports a degenerate subspace.
inline constexpr double kEigengapWarning = 1e-8;

}  // namespace rfed::tol
