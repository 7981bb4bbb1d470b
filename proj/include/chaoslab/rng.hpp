#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace chaoslab {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

// Derive a purpose-specific master seed, e.g. mix_seed(seed, "bootstrap").
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    }
    return splitmix64(seed ^ splitmix64(h));
}

/// Reproducible random stream addressed by (master_seed, stream_id).
///
/// The engine state is a pure function of the pair, so replica i of an
/// ensemble draws the same numbers no matter which worker runs it or in
/// which order replicas are scheduled.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : master_seed_(master_seed), stream_id_(stream_id) {
        const std::uint64_t a = splitmix64(master_seed);
        const std::uint64_t b = splitmix64(a ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
        std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32U),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32U),
                          static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32U)};
        engine_.seed(seq);
    }

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    std::uint64_t counter() const noexcept { return counter_; }

    /// Independent child stream, e.g. for a second purpose within one replica.
    RngStream substream(std::uint64_t index) const {
        return RngStream(splitmix64(master_seed_ ^ splitmix64(index + 1)), stream_id_);
    }

    double normal() {
        ++counter_;
        return normal_(engine_);
    }

    /// Uniform on [0, 1).
    double uniform() {
        ++counter_;
        return std::generate_canonical<double, 53>(engine_);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        ++counter_;
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_ = 0;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

} // namespace chaoslab
