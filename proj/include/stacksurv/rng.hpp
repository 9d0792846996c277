#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace stacksurv {

/*!
 * SplitMix64-based random stream with deterministic sub-stream derivation.
 *
 * Every random quantity in the library is drawn from a RandomStream so that
 * a seed fully determines the output on any platform. The layout is
 * intentionally simple enough to re-implement in another language:
 *
 *  - state advances by the golden-ratio increment 0x9e3779b97f4a7c15 and the
 *    output is the standard SplitMix64 finalizer of the new state;
 *  - RandomStream(seed) starts at state = mix(seed);
 *  - split(id) returns a stream whose state is mix(state_ ^ mix(id + 1)),
 *    leaving the parent untouched;
 *  - uniform() = (next() >> 11) * 2^-53, in [0, 1);
 *  - normal() uses one Box-Muller pair (two uniforms) and returns the cosine
 *    branch only, so each call consumes exactly two outputs.
 */
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0) : state_(mix(seed)) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }
  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  RandomStream split(std::uint64_t id) const {
    RandomStream child;
    child.state_ = mix(state_ ^ mix(id + 1));
    return child;
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1); safe to take logs of.
  double uniform_open() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential() { return -std::log(uniform_open()); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t r;
    do {
      r = next();
    } while (r >= limit);
    return r % n;
  }

 private:
  std::uint64_t state_;
};

}  // namespace stacksurv
