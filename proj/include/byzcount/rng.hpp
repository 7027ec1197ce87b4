#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace byzcount {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives an independent stream key from a root seed and a path of counters,
// e.g. derive_seed(root, {kColorStream, node, phase, subphase}).
constexpr std::uint64_t derive_seed(std::uint64_t root,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
  return h;
}

// Counter-mode generator: output k is splitmix64(key + k). Cheap to construct,
// so every (node, phase, subphase) gets its own stream, and anyone holding the
// key can replay it.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit StreamRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

namespace streams {
inline constexpr std::uint64_t kGraph = 1;
inline constexpr std::uint64_t kIds = 2;
inline constexpr std::uint64_t kByzantine = 3;
inline constexpr std::uint64_t kColor = 4;
inline constexpr std::uint64_t kAdversary = 5;
inline constexpr std::uint64_t kTrial = 6;
inline constexpr std::uint64_t kSpectral = 7;
inline constexpr std::uint64_t kBaseline = 8;
}  // namespace streams

}  // namespace byzcount
