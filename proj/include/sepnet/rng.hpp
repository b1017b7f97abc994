#ifndef SEPNET_RNG_HPP
#define SEPNET_RNG_HPP

#include <cstdint>
#include <vector>

namespace sepnet {

// SplitMix64. Demo models must be byte-reproducible from a seed across
// platforms and toolchains, so we pin the generator algorithm instead of
// using std::mt19937 + distributions (whose outputs are not portable).
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    int uniform_int(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

    // A random distribution over k values: k uniform draws shifted by `floor`
    // (keeps entries away from zero) and normalized.
    std::vector<double> distribution(int k, double floor = 0.05) {
        std::vector<double> p(static_cast<std::size_t>(k));
        double s = 0.0;
        for (auto& x : p) {
            x = floor + uniform();
            s += x;
        }
        for (auto& x : p) x /= s;
        return p;
    }

  private:
    std::uint64_t state_;
};

} // namespace sepnet

#endif
