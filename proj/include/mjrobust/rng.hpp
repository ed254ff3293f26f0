#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mjrobust {

/// A named, seedable random stream. Streams derived from the same master
/// seed with different (name, index) pairs are statistically independent;
/// the same triple always reproduces the same sequence.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::string_view name = "default",
                     std::uint64_t index = 0);

  /// A child stream, e.g. one per Monte Carlo trajectory.
  RngStream substream(std::string_view name, std::uint64_t index) const;

  double uniform();  // in [0, 1)
  double normal();
  std::mt19937_64& engine() { return engine_; }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

}  // namespace mjrobust
