#include "mlsgan/rng.hpp"

#include <cmath>

#include "mlsgan/error.hpp"

namespace mlsgan {

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // Box-Muller on open-interval uniforms; u1 = 0 would yield log(0).
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

int Rng::uniform_int(int n) {
    if (n <= 0) {
        throw ContractError("Rng::uniform_int: n must be positive, got " + std::to_string(n));
    }
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream name
    for (char c : stream) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    return splitmix64(root ^ splitmix64(h) ^ splitmix64(index * 0x9e3779b97f4a7c15ULL + 1));
}

}  // namespace mlsgan
