#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace salmut {

// splitmix64 step, used to derive independent substream seeds from one
// user-facing seed. Changing the stream id decorrelates the streams even
// for adjacent base seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One named random stream. All draws go through uniform()/bit() so traces
// are byte-identical across platforms: the double is built from the top 53
// bits of the raw 64-bit output, never through distribution objects with
// implementation-defined draw counts.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  // uniform double in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // fair bit from the top bit of the raw output
  bool bit() { return (gen_() >> 63) != 0; }

  // uniform integer in {0, ..., n-1}
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    int k = static_cast<int>(uniform() * n);
    return k < n ? k : n - 1;  // guard against u == 1 - ulp rounding up
  }

 private:
  std::mt19937_64 gen_;
};

// Stream ids used by the learners. Environment transitions, virtual draws
// inside the threshold update, and exploration each get their own stream so
// switching one feature off never shifts the others.
enum : std::uint64_t {
  kEnvironmentStream = 0,
  kVirtualSampleStream = 1,
  kExplorationStream = 2,
};

}  // namespace salmut
