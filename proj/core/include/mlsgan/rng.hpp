#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mlsgan {

/// Deterministic random source. Uniform and normal draws are generated
/// from std::mt19937_64 with hand-rolled transforms (Box-Muller for
/// normals, Fisher-Yates for shuffles) so that streams are bit-identical
/// across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; second value of each pair is cached.
    double normal();

    /// Uniform integer in [0, n). n must be positive.
    int uniform_int(int n);

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int j = uniform_int(i + 1);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

/// Derives the seed of a named sub-stream from a root seed. All randomness
/// in a run flows from one root seed through named streams ("data", "init",
/// "z", "shuffle", ...) so components can be varied independently.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

}  // namespace mlsgan
