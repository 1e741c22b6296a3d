#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "cslim/errors.hpp"
#include "cslim/matfun.hpp"

namespace cslim {

namespace detail {

// splitmix64 finalizer; used to spread (masterSeed, streamId) into engine seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

// Deterministic random stream addressed by (masterSeed, streamId).  Streams
// with distinct ids are independent for practical purposes and reproduce the
// same draw sequence on every run.  Normal deviates use the Marsaglia polar
// method rather than std::normal_distribution, whose algorithm the standard
// leaves unspecified.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : master_seed_(master_seed), stream_id_(stream_id) {
    const std::uint64_t mixed =
        detail::splitmix64(detail::splitmix64(master_seed) ^
                           (stream_id * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
    engine_.seed(mixed);
  }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Child stream for hierarchical use (ensemble members under one trial).
  RandomStream derive(std::uint64_t child_index) const {
    return RandomStream(master_seed_,
                        detail::splitmix64(stream_id_ ^
                                           detail::splitmix64(child_index + 1)));
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  Vector normal_vector(Eigen::Index n) {
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = normal();
    return out;
  }

  void fill_normal(Vector& out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal();
  }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cslim
