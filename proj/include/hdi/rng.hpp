#pragma once

#include <cmath>
#include <cstdint>

namespace hdi {

/// Counter-based generator built on the splitmix64 finalizer. A draw is a pure
/// function of (key, counter), so replicate k is reproducible without
/// generating replicates 1..k-1, and independent streams are cheap.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0) {
    std::uint64_t k = mix(seed ^ 0x5851f42d4c957f2dULL);
    k = mix(k ^ (stream * 0x9e3779b97f4a7c15ULL + 0x14057b7ef767814fULL));
    key_ = mix(k ^ (substream * 0xd1342543de82ef95ULL + 1));
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform draw in the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw (Box-Muller; second value cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586477 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  /// Bernoulli draw with success probability prob.
  bool bernoulli(double prob) { return uniform() < prob; }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) { return next_u64() % bound; }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

} // namespace hdi
