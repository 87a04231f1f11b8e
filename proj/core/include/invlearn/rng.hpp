#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace invlearn {

/// Seeded random stream. Identical (seed, stream_id) pairs produce
/// bit-identical draws; the uniform/normal/index transforms are implemented
/// here rather than through <random> distributions, whose output is
/// implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

  /// Independent child stream keyed by `key` (same seed, mixed stream id).
  RngStream child(std::uint64_t key) const;

  /// Mixes a list of integers into one stream id.
  static std::uint64_t key(std::initializer_list<std::uint64_t> parts);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace invlearn
