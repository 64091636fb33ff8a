#pragma once

#include <array>
#include <cstdint>

namespace slq {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Output is a pure function of (key, counter).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter counter, Key key) noexcept;
};

/// Standard normal variates for one substream (e.g. one Monte Carlo path).
/// The n-th draw of stream s under seed k is fixed regardless of how many
/// other streams exist or in which order they are consumed.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept;

    double next() noexcept;

private:
    double refill() noexcept;

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Uniform variates in (0, 1] drawn from a counter-based stream.
class UniformStream {
public:
    UniformStream(std::uint64_t seed, std::uint64_t stream) noexcept;

    double next() noexcept;

private:
    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int used_ = 4;
};

}  // namespace slq
