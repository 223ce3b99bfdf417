#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

namespace fraclab {

inline constexpr double kPi = 3.14159265358979323846;

/// Renormalization constant C_{n,s} = s 4^s Gamma(s + n/2) / (pi^{n/2} Gamma(1-s)).
/// Always included; the quantitative identities (boundary densities, the
/// Pohozaev check) hold for the physically normalized operator only.
inline double fractional_constant(int dim, double s) {
  return s * std::pow(4.0, s) * std::tgamma(s + 0.5 * dim) /
         (std::pow(kPi, 0.5 * dim) * std::tgamma(1.0 - s));
}

/// Gamma(1+s)^2, the constant in front of boundary-density integrals.
inline double gamma1s_squared(double s) {
  const double g = std::tgamma(1.0 + s);
  return g * g;
}

/// FNV-1a 64-bit, used to stamp emitted artifacts with their config hash.
inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Shortest round-trip decimal form; keeps emitted CSV/JSON byte-stable.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace fraclab
