#pragma once

#include <cstdint>
#include <vector>

namespace qpfer {

// Counter-based generator: every draw is a pure function of
// (seed, stream, counter), so results do not depend on evaluation order or
// on how work is split across threads.  The word function chains the
// splitmix64 finalizer, which is plenty for Monte Carlo sampling.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t word(std::uint64_t stream, std::uint64_t counter) const {
        return mix(mix(mix(counter) ^ stream) ^ seed_);
    }

    double uniform(std::uint64_t stream, std::uint64_t counter) const {
        return static_cast<double>(word(stream, counter) >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, n).  Modulo bias is ~n/2^64, irrelevant here.
    std::uint64_t below(std::uint64_t stream, std::uint64_t counter, std::uint64_t n) const {
        return word(stream, counter) % n;
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
};

// Fisher-Yates keyed off one stream; counter j decides the swap for slot j.
template <typename T>
void counter_shuffle(std::vector<T>& v, const CounterRng& rng, std::uint64_t stream) {
    for (std::size_t j = v.size(); j > 1;) {
        --j;
        const std::size_t k = static_cast<std::size_t>(rng.below(stream, j, j + 1));
        using std::swap;
        swap(v[j], v[k]);
    }
}

}  // namespace qpfer
