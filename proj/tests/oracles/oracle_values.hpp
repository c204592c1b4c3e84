#pragma once

// Generated by derive_oracles.py (mpmath, 50 digits). Do not edit.

#include <array>

namespace vmic::oracle {

inline constexpr double kCapsuleFrontR05Theta45 = 0.4929796468294959;
inline constexpr double kCapsuleRearR05Theta45 = 0.5071203681690033;
inline constexpr double kCapsuleR1Theta90 = 1.0000499987500624;
inline constexpr double kDelay0R1 = 128.57142857142858;
inline constexpr double kLinearWeightNear = 0.42857142857142855;
inline constexpr double kLinearWeightFar = 0.5714285714285714;
inline constexpr std::array<double, 3> kIntegratorImpulse = {1.1337868480725624e-05, 2.1541950113378685e-05, 1.9387755102040817e-05};
inline constexpr double kIntegratorDcGain = 0.00022675736961451248;
inline constexpr double kDipoleFirstPeakHz = 8575.0;
inline constexpr double kDeviationCardioid8kR01Lossy = 0.18247073053463508;
inline constexpr double kDeviationCardioid8kR01Ideal = 0.15731698120117912;
// max over 72 angles of ||H_dir| - |D|| at 50 Hz, r = 10 m, d = 0.02 m,
// ideal integrator, for m = 0, 0.25, 0.5, 0.75, 1
inline constexpr std::array<double, 5> kLimitDeviation50Hz10m = {0.005929121083151209, 0.022239783293450072, 0.0545879106797736, 0.0007476464386997696, 0.0};
inline constexpr double kNearFieldNullCardioid50Hz10m = 0.0545901454805201;
// boost(50 Hz vs 1 kHz) in dB, m = 0.5, theta = 0, d = 0.02, lossy g = 0.9,
// r = 0.05, 0.1, 0.2, 0.5, 1, 2 m, normalized to r = 2 m
inline constexpr std::array<double, 6> kProximityBoost = {5.713261746676605, 3.7038884682181306, 2.0899835588341213, 0.7859524958004982, 0.273663093301192, 0.0};

struct DirectivityCase {
  double m, d, g, r, theta, f;
  bool ideal;
  double re, im;
};
inline constexpr std::array<DirectivityCase, 6> kDirectivityCases = {{
    {0.5, 0.02, 0.9, 1, 0, 1000, false, 0.8519089251101984, 0.2313493241654493},
    {0.5, 0.02, 0.9, 0.1, 2.0, 8000, false, 0.3185884180572201, 0.006885261406310581},
    {0.25, 0.015, 0.95, 0.3, 2.5, 250, true, -0.35082106698007853, 0.4373008575946147},
    {0, 0.02, 0.9, 0.05, 0.7, 100, true, 0.7629924394879911, -8.330429375843265},
    {0.75, 0.03, 0.5, 2, 3.14159, 15000, false, 0.7881766084674852, 0.006790560303362579},
    {0.5, 0.02, 0.9, 0.011, 0, 50, false, 20.79047309097494, -1.1679543072491863},
}};

struct GlobalCase {
  double m, d, g, r, theta, f;
  double re, im;
};
inline constexpr std::array<GlobalCase, 3> kGlobalLossyCases = {{
    {0.5, 0.02, 0.9, 1, 0, 1000, 0.6173016473796491, 0.6310388281370609},
    {0, 0.02, 0.9, 0.5, 1.0, 440, -0.5964019440513681, 0.0589611254976376},
    {0.3, 0.01, 0.99, 3, 4.0, 5000, 0.006489850678524089, -0.04409167128483447},
}};

} // namespace vmic::oracle
