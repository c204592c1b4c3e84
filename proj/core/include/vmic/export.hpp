#pragma once

// CSV and SVG emitters for analysis results.
//
// Pattern CSV schema (version 1):
//
//   # vmic-pattern=1
//   # kind=monochromatic|subband
//   # m=..  d=..  g=..  c0=..  fs=..     (one key per line)
//   # integrator=ideal|lossy
//   # r=..                               (single-distance tables only)
//   # bands=31.5;40;...                  (subband tables only)
//   angle_deg,freq_hz,magnitude[,distance_m]
//
// Rows run angle-fastest, then frequency, then distance. Numbers are
// written with 17 significant digits, so magnitudes and parameters read
// back bit-exact.

#include <filesystem>
#include <string>
#include <string_view>

#include "vmic/analysis.hpp"

namespace vmic {

std::string pattern_csv(const PatternTable& table);
/// Throws RangeError for an empty angle or frequency grid and FormatError
/// ("csv") for anything that does not follow the schema.
PatternTable parse_pattern_csv(std::string_view text);

/// Standalone polar plot, theta = 0 pointing up, one closed path per
/// frequency (or band) and distance.
std::string pattern_svg(const PatternTable& table);

std::string proximity_csv(const ProximityCurve& curve);
/// Boost (dB) against log distance.
std::string proximity_svg(const ProximityCurve& curve);

std::string deviation_csv(const DeviationMap& map);
std::string energy_csv(const EnergyBalance& balance);

// File forms. Tables are validated before the file is opened, so a
// rejected table never leaves an empty file behind. I/O failures throw
// IoError.
void write_pattern_csv(const PatternTable& table, const std::filesystem::path& path);
void write_pattern_svg(const PatternTable& table, const std::filesystem::path& path);
PatternTable read_pattern_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

} // namespace vmic
