#pragma once

#include <cstdint>

namespace coherit {

namespace detail {

// SplitMix64 finalizer. Bijective on 64-bit words with full avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based random stream. The i-th output is a pure function of
// (master_seed, stream_id, i), so replications keyed by stream id give
// identical draws no matter which thread runs them or in what order.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : master_seed_(master_seed),
        stream_id_(stream_id),
        key_(detail::mix64(detail::mix64(master_seed) + stream_id)) {}

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Derived stream with an independent counter; used to give each purpose
  // (design draw, noise draw, split permutation, ...) its own sequence.
  RngStream substream(std::uint64_t tag) const {
    return RngStream(master_seed_, detail::mix64(stream_id_ ^ detail::mix64(tag + 1)));
  }

  std::uint64_t next_u64() {
    return detail::mix64(key_ + counter_++ * 0x9E3779B97F4A7C15ULL);
  }

  // Unbiased enough for index selection; modulo bias is O(bound / 2^64).
  std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

  // Uniform on the open interval (0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms per draw.
  double gaussian();

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace coherit
