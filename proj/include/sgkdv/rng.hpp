#pragma once

#include <cmath>
#include <cstdint>

namespace sgkdv {

// Counter-based pseudo-random stream. Each (master_seed, stream_id) pair
// yields an independent, replayable sequence; the draw counter advances by
// one per 64-bit output, so a stream is a pure function of its key and
// position. This keeps Monte Carlo runs deterministic no matter how
// trajectories are scheduled across workers.
//
// The core is the splitmix64 finalizer applied to key + counter * golden
// ratio; normals come from an explicit Box-Muller transform (the C++
// standard library's normal_distribution is implementation-defined and
// would break bit-reproducibility of outputs).
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : master_seed_(master_seed), stream_id_(stream_id) {
        const std::uint64_t a = mix(master_seed ^ 0x6A09E667F3BCC909ULL);
        const std::uint64_t b = mix(stream_id * 0xD1342543DE82EF95ULL + 0xBB67AE8584CAA73BULL);
        key_ = mix(a ^ (b << 17 | b >> 47));
    }

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() {
        ++counter_;
        return mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    // Uniform on [0,1) with 53 significant bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1] so the log is finite.
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sgkdv
