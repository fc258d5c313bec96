#include "cmst/rng.hpp"

#include <sstream>

#include "cmst/errors.hpp"

namespace cmst {

namespace {

// splitmix64 finalizer; decorrelates seed/label mixtures before they feed
// the mersenne twister.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t basis) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = basis;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

Rng::Rng(std::uint64_t seed) : Rng(seed, mix64(seed)) {}

Rng::Rng(std::uint64_t seed, std::uint64_t mixed)
    : seed_(seed), engine_(mixed) {}

Rng Rng::stream(std::string_view label) const {
  const std::uint64_t label_hash = fnv1a64(label.data(), label.size());
  return Rng(seed_, mix64(seed_ ^ mix64(label_hash)));
}

double Rng::normal(double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(engine_);
}

std::vector<double> Rng::normal_vector(std::size_t count, double mean,
                                       double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  std::vector<double> out(count);
  for (double& v : out) v = dist(engine_);
  return out;
}

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

std::uint64_t Rng::uniform_int(std::uint64_t lo, std::uint64_t hi) {
  std::uniform_int_distribution<std::uint64_t> dist(lo, hi);
  return dist(engine_);
}

std::string Rng::serialize_state() const {
  std::ostringstream os;
  os << seed_ << ' ' << engine_;
  return os.str();
}

void Rng::restore_state(const std::string& state) {
  std::istringstream is(state);
  is >> seed_ >> engine_;
  if (!is) throw ParseError("Rng::restore_state: malformed engine state");
}

}  // namespace cmst
