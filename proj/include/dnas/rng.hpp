#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace dnas {

// Deterministic random stream used for every random decision in the engine
// (weight init, data shuffles, Gumbel draws, dataset synthesis).
//
// The generator is std::mt19937_64, whose output sequence is fully specified
// by the C++ standard, so the same seed produces the same stream on every
// platform. All value transforms (uniform, normal, gumbel) are implemented
// here instead of using std::*_distribution, which the standard leaves
// implementation-defined.
//
// Algorithm id recorded in checkpoints: Rng::kAlgorithm.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/v1";

  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x > limit);
    return x % n;
  }

  // Standard normal via Box-Muller (deterministic, no cached spare).
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Gumbel(0,1) draw: g = -ln(-ln(u)), u uniform on (0,1) clamped to
  // [1e-12, 1-1e-12] so both logs stay finite.
  double gumbel() {
    double u = uniform01();
    if (u < 1e-12) u = 1e-12;
    if (u > 1.0 - 1e-12) u = 1.0 - 1e-12;
    return -std::log(-std::log(u));
  }

  // Derive an independent child seed; used for per-sample finalize runs so
  // results do not depend on scheduling order.
  std::uint64_t fork_seed(std::uint64_t salt) {
    std::uint64_t x = next_u64() ^ (0x9e3779b97f4a7c15ULL * (salt + 1));
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
  }

  // State serialization for checkpoints; the textual form of mt19937_64 is
  // defined by the standard and round-trips exactly.
  std::string save_state() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void load_state(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
    if (is.fail()) throw std::invalid_argument("Rng::load_state: malformed state string");
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace dnas
