// Generated by tests/oracles/compute_oracles.py -- do not edit by hand.
#pragma once

namespace oracle {
inline constexpr double kHarmonicHalfPeriod = 3.1415926535897932385;
inline constexpr double kHarmonicHalfOrbitArc = 0.78539816339744830962;
inline constexpr double kHarmonicQuarterOrbitArc = 0.39269908169872415481;
inline constexpr double kHarmonicDistanceAtCenter = 0.39269908169872415481;
inline constexpr double kIsoDistanceHalf = 0.15354621232609460569;
inline constexpr double kIsoNearBoundaryRadius = 0.98994949366116653416;
inline constexpr double kIsoDistanceNearBoundary = 0.00047426365104098070321;
inline constexpr double kDoubleWellInner = 0.5411961001461969844;
inline constexpr double kDoubleWellOuter = 1.3065629648763765279;
inline constexpr double kDoubleWellHalfPeriod = 1.2594635234048264092;
inline constexpr double kDoubleWellTiePoint = 0.95130484861375357498;
inline constexpr double kDoubleWellTieDistance = 0.14698331391354038249;
inline constexpr double kIsoConjugateArc = 0.39269908169872415481;
inline constexpr double kAnisoConjugateArc1 = 0.071349540849362077404;
inline constexpr double kAnisoConjugateArc2 = 0.71404862254808623221;
inline constexpr double kCrossingArc = 0.78539816339744830962;
inline constexpr double kIsoLambdaMinAt02 = 0.45122821455489184646;
inline constexpr double kIsoLambdaMinAt05 = -0.29686130621017851248;
inline constexpr double kAxisTimeAtArc02 = 1.1636322903759916572;
inline constexpr double kAxisTimeAtArc05 = 1.7888200059937886476;
}  // namespace oracle
