#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

namespace geoplan {

inline constexpr double kPi = std::numbers::pi_v<double>;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi_v<double>;

/// All randomness flows through explicitly passed generator states; there is
/// no global generator anywhere in the library.
using RngState = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for (seed, stream, block). Audit workers draw from
/// per-block streams so results do not depend on the thread count.
inline RngState make_stream(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t block = 0) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ (0x5851f42d4c957f2dULL + stream));
  s = splitmix64(s ^ (0x14057b7ef767814fULL + block));
  return RngState(s);
}

/// Uniform draw in (0, 1]; the closed upper end keeps log(u) finite.
inline double uniform01(RngState& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

inline double uniform(RngState& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// One standard normal via Box-Muller. Stateless: draws two uniforms and
/// discards the sine branch, which keeps streams easy to reason about.
inline double gaussian(RngState& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

/// Reduce an angle to [0, 2*pi).
inline double wrap_two_pi(double x) {
  double y = std::fmod(x, kTwoPi);
  if (y < 0.0) y += kTwoPi;
  if (y >= kTwoPi) y = 0.0;
  return y;
}

/// Reduce an angle difference to (-pi, pi].
inline double wrap_pi(double x) {
  double y = std::remainder(x, kTwoPi);
  if (y <= -kPi) y += kTwoPi;
  return y;
}

/// 17 significant digits: enough for exact double round trips in text output.
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

}  // namespace geoplan
