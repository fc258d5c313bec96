#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace cmst {

// Deterministic random source with named-stream derivation: the same
// (seed, label, call sequence) always yields the same values, and distinct
// labels yield independent streams. Distribution objects are constructed per
// call so the engine state alone captures the full position of the stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent substream for a named component.
  Rng stream(std::string_view label) const;

  std::uint64_t seed() const { return seed_; }

  double normal(double mean = 0.0, double stddev = 1.0);
  std::vector<double> normal_vector(std::size_t count, double mean = 0.0,
                                    double stddev = 1.0);
  double uniform(double lo, double hi);
  // Inclusive bounds.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    std::shuffle(values.begin(), values.end(), engine_);
  }

  // Engine-state round trip, used by training checkpoints.
  std::string serialize_state() const;
  void restore_state(const std::string& state);

 private:
  Rng(std::uint64_t seed, std::uint64_t mixed);

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// FNV-1a over arbitrary bytes; stable across platforms. Used for stream
// derivation and for parameter fingerprints in the metrics log.
std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t basis = 14695981039346656037ull);

}  // namespace cmst
