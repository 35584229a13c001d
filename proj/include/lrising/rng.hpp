#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).  Each chain
// owns one; its full state is (key, counter, position in the current block),
// so trajectories are bit-reproducible across platforms.

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace lrising {

class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  static constexpr std::string_view kName = "philox4x32-10";

  struct State {
    std::array<std::uint32_t, 2> key{};
    std::array<std::uint32_t, 4> counter{};
    std::uint32_t position = 4;  // index into the current output block; 4 = exhausted
    friend bool operator==(const State&, const State&) = default;
  };

  /// The seed becomes the key; `stream` occupies the upper counter words so
  /// distinct streams never overlap.
  explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0) {
    state_.key = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    state_.counter = {0, 0, static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
  }
  explicit Philox4x32(const State& s) : state_(s) {
    if (state_.position < 4) {
      auto prev = state_.counter;  // the block in use was produced from counter - 1
      if (prev[0]-- == 0) --prev[1];
      block_ = encrypt(prev, state_.key);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (state_.position >= 4) {
      block_ = encrypt(state_.counter, state_.key);
      increment();
      state_.position = 0;
    }
    return block_[state_.position++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)() >> 5;  // 27 bits
    const std::uint64_t lo = (*this)() >> 6;  // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

  const State& state() const { return state_; }

  /// The raw bijection; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> encrypt(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  void increment() {
    if (++state_.counter[0] == 0) ++state_.counter[1];
  }

  State state_;
  // Derived from the state, so it is not part of State.
  std::array<std::uint32_t, 4> block_{};
};

/// Hands out generator words a few bits at a time.  Leftover bits die with
/// the object; create one per update so chains stay a function of the stream.
class BitReservoir {
 public:
  explicit BitReservoir(Philox4x32& rng) : rng_(rng) {}

  std::uint32_t take(int k) {
    if (avail_ < k) {
      word_ = rng_();
      avail_ = 32;
    }
    const std::uint32_t v = word_ & ((1u << k) - 1u);
    word_ >>= k;
    avail_ -= k;
    return v;
  }

  // exact Bernoulli(p): compare 16-bit digits of a uniform with those of p
  bool bernoulli(double p) {
    if (!(p > 0.0)) return false;
    if (p >= 1.0) return true;
    return resolve(p * kScale, static_cast<double>(take(16)));
  }

  // Bernoulli(p()) for p() <= 1/2; p is only evaluated when the first digit
  // does not already decide
  template <class F>
  bool bernoulli_below_half(F&& p) {
    const double x = take(16);
    if (x >= 0.5 * kScale) return false;
    const double q = p();
    if (!(q > 0.0)) return false;
    return resolve(q * kScale, x);
  }

 private:
  static constexpr double kScale = 65536.0;

  bool resolve(double t, double x) {
    for (;;) {
      if (x + 1.0 <= t) return true;
      if (x >= t) return false;
      t = (t - x) * kScale;  // exact: t - x lies in (0, 1)
      x = take(16);
    }
  }

  Philox4x32& rng_;
  std::uint32_t word_ = 0;
  int avail_ = 0;
};

}  // namespace lrising
