#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mft {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A model or path invariant does not hold (CLI exit code 3).
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced a non-finite or otherwise unusable number (CLI exit code 4).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration is malformed (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Below this norm the risk premium is treated as exactly zero.
inline constexpr double kZeroPremiumThreshold = 1e-12;

/// Default bound on the 2-norm condition number of every volatility matrix.
inline constexpr double kDefaultConditionBound = 1e4;

// ---------------------------------------------------------------------------
// Seed streams
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for the labeled stream `label` and path `index` of a master seed.
/// Streams with different labels or indices are statistically unrelated.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t index = 0) {
  std::uint64_t s = splitmix64(master ^ 0x6a09e667f3bcc909ULL);
  s = splitmix64(s ^ fnv1a64(label));
  return splitmix64(s ^ splitmix64(index + 0x3c6ef372fe94f82bULL));
}

}  // namespace mft
