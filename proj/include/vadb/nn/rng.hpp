#ifndef VADB_NN_RNG_HPP
#define VADB_NN_RNG_HPP

#include <cstdint>
#include <string_view>
#include <vector>

namespace vadb::nn {

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 14695981039346656037ull);

// Deterministic splitmix64 stream. Every stochastic consumer derives its own
// stream from (seed, tag, salt), so adding a consumer never shifts another
// one's draws. State is a single u64 and serializes into checkpoints as-is.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static Rng from_tag(std::uint64_t seed, std::string_view tag,
                        std::uint64_t salt = 0);

    std::uint64_t next_u64();

    // [0, 1), 53-bit resolution
    double uniform();

    // standard normal via Box-Muller; draws two uniforms per call
    double normal();
    double normal(double mean, double stddev);

    // [0, n); n must be > 0
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    std::uint64_t state() const { return state_; }
    void set_state(std::uint64_t s) { state_ = s; }

private:
    std::uint64_t state_;
};

}  // namespace vadb::nn

#endif
