#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace mvsdde::rng {

/// Philox4x32-10 keyed block function (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3"). Maps a 128-bit counter and a 64-bit key to
/// 128 random bits with no carried state, so every (seed, path) pair owns an
/// independent stream and results cannot depend on evaluation order.
struct Philox4x32 {
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Block block(Block ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * ctr[2];
            ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
                   std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
        }
        return ctr;
    }
};

/// Tags keep draws made for different purposes in disjoint counter space.
enum class StreamTag : std::uint32_t {
    fgn = 1,
    initial_segment = 2,
    assumption_probe = 3,
};

/// Counter-based stream of uniforms and standard normals for one
/// (seed, path, tag) triple.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t path, StreamTag tag)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
          path_lo_(std::uint32_t(path)),
          path_hi_(std::uint32_t(path >> 32)),
          tag_(static_cast<std::uint32_t>(tag)) {}

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; values come in pairs.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = double(next_u64() >> 11) * 0x1.0p-53;        // [0, 1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    void fill_normal(std::span<double> out) {
        for (double& x : out) x = normal();
    }

private:
    std::uint64_t next_u64() {
        if (word_ == 4) {
            block_ = Philox4x32::block({counter_, path_lo_, path_hi_, tag_}, key_);
            ++counter_;
            word_ = 0;
        }
        const std::uint64_t lo = block_[word_];
        const std::uint64_t hi = block_[word_ + 1];
        word_ += 2;
        return (hi << 32) | lo;
    }

    Philox4x32::Key key_;
    std::uint32_t path_lo_;
    std::uint32_t path_hi_;
    std::uint32_t tag_;
    std::uint32_t counter_ = 0;
    Philox4x32::Block block_{};
    int word_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Independent 64-bit subseed for (seed, index), e.g. one per Monte Carlo
/// repetition.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint32_t salt = 0) {
    const auto b = Philox4x32::block(
        {std::uint32_t(index), std::uint32_t(index >> 32), salt, 0x5eedu},
        {std::uint32_t(seed), std::uint32_t(seed >> 32)});
    return (std::uint64_t(b[1]) << 32) | b[0];
}

}  // namespace mvsdde::rng
