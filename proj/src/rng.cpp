#include "mjrobust/rng.hpp"

namespace mjrobust {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix(std::uint64_t seed, std::string_view name,
                  std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ fnv1a(name)) + splitmix64(index + 1));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view name,
                     std::uint64_t index)
    : key_(mix(seed, name, index)) {
  std::seed_seq seq{static_cast<std::uint32_t>(key_),
                    static_cast<std::uint32_t>(key_ >> 32)};
  engine_.seed(seq);
}

RngStream RngStream::substream(std::string_view name,
                               std::uint64_t index) const {
  return RngStream(key_, name, index);
}

double RngStream::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double RngStream::normal() {
  return std::normal_distribution<double>(0.0, 1.0)(engine_);
}

}  // namespace mjrobust
