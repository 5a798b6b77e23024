#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace metacal {

// Counter-style splitmix64 stream. All randomness in the library flows
// through named substreams derived from (seed, id...), so draws are
// reproducible independently of evaluation order or thread count.
class Rng {
public:
    explicit Rng(std::uint64_t state) : state_(state) {}

    // Derives a child stream from a seed and a list of stream ids.
    static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

    std::uint64_t next();

    // Uniform in [0, 1).
    double uniform01();

    // Uniform in the open interval (0, 1); safe input for probit.
    double uniform01_open();

    // Standard normal via inverse-CDF sampling.
    double normal();

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Random permutation of {0, ..., n-1}.
    std::vector<std::uint32_t> permutation(std::size_t n);

private:
    std::uint64_t state_;
};

}  // namespace metacal
