#include "metacal/rng.hpp"

#include "metacal/tetra.hpp"

namespace metacal {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

Rng Rng::substream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = mix64(seed + kGamma);
    for (std::uint64_t id : ids) {
        h = mix64(h ^ (id + kGamma));
    }
    return Rng(h);
}

std::uint64_t Rng::next() {
    state_ += kGamma;
    return mix64(state_);
}

double Rng::uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::uniform01_open() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

double Rng::normal() {
    return probit(uniform01_open());
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection sampling for an unbiased bounded draw.
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        std::uint64_t r = next();
        if (r >= threshold) return r % n;
    }
}

std::vector<std::uint32_t> Rng::permutation(std::size_t n) {
    std::vector<std::uint32_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<std::uint32_t>(i);
    shuffle(p);
    return p;
}

}  // namespace metacal
