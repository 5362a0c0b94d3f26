#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace botarms {

// Derives an independent seed for a named substream ("sampling", "perm",
// "candidates", ...) keyed by an arbitrary string such as a user id. The
// mapping is fixed across platforms and library versions.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                          std::string_view key = {});

// Seeded generator with platform-independent draws. std::shuffle and the
// standard distributions are implementation-defined, so they are not used
// anywhere results must be reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  // Uniform real in [0, 1) with 53 random bits.
  double unit();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace botarms
