#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

namespace cyberrisk {

// Identifies the draw algorithm set. Any change to the generator, to how
// 64-bit words are turned into uniforms, or to a sampler's consumption of
// draws must bump this string: reports are only comparable across equal
// versions.
inline constexpr const char* kStreamFormatVersion = "philox4x32-10/v1";

namespace detail {

// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3", SC 2011).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
    std::uint32_t k0 = key[0], k1 = key[1];
#if defined(__GNUC__)
#pragma GCC unroll 10
#endif
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
        const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
        const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
        c1 = static_cast<std::uint32_t>(p1);
        c3 = static_cast<std::uint32_t>(p0);
        c0 = n0;
        c2 = n2;
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return {c0, c1, c2, c3};
}

// Evaluates kLanes consecutive blocks starting at `block` for one stream and
// writes each block as two 64-bit words. Same results as calling
// philox4x32_10 per block. With SSE2 the four blocks share vector registers;
// otherwise they run in lockstep, which still hides multiply latency.
inline constexpr std::size_t kLanes = 4;

inline void philox4x32_10_lanes(std::uint64_t block, std::uint64_t stream_id, std::uint64_t seed,
                                std::array<std::uint64_t, 2 * kLanes>& out) noexcept {
    std::uint32_t k0 = static_cast<std::uint32_t>(seed), k1 = static_cast<std::uint32_t>(seed >> 32);
#if defined(__SSE2__)
    const auto lo32 = [](std::uint64_t x) { return static_cast<int>(static_cast<std::uint32_t>(x)); };
    const auto hi32 = [](std::uint64_t x) { return static_cast<int>(static_cast<std::uint32_t>(x >> 32)); };
    __m128i c0 = _mm_setr_epi32(lo32(block), lo32(block + 1), lo32(block + 2), lo32(block + 3));
    __m128i c1 = _mm_setr_epi32(hi32(block), hi32(block + 1), hi32(block + 2), hi32(block + 3));
    __m128i c2 = _mm_set1_epi32(lo32(stream_id));
    __m128i c3 = _mm_set1_epi32(hi32(stream_id));
    const __m128i m0 = _mm_set1_epi32(static_cast<int>(0xD2511F53u));
    const __m128i m1 = _mm_set1_epi32(static_cast<int>(0xCD9E8D57u));
    // Full 32x32 -> 64 products of all four lanes, split into low and high halves.
    const auto mul = [](__m128i x, __m128i m, __m128i& lo, __m128i& hi) {
        const __m128i even = _mm_mul_epu32(x, m);
        const __m128i odd = _mm_mul_epu32(_mm_srli_epi64(x, 32), m);
        lo = _mm_unpacklo_epi32(_mm_shuffle_epi32(even, _MM_SHUFFLE(0, 0, 2, 0)),
                                _mm_shuffle_epi32(odd, _MM_SHUFFLE(0, 0, 2, 0)));
        hi = _mm_unpacklo_epi32(_mm_shuffle_epi32(even, _MM_SHUFFLE(0, 0, 3, 1)),
                                _mm_shuffle_epi32(odd, _MM_SHUFFLE(0, 0, 3, 1)));
    };
    for (int round = 0; round < 10; ++round) {
        __m128i lo0, hi0, lo1, hi1;
        mul(c0, m0, lo0, hi0);
        mul(c2, m1, lo1, hi1);
        c0 = _mm_xor_si128(_mm_xor_si128(hi1, c1), _mm_set1_epi32(static_cast<int>(k0)));
        c2 = _mm_xor_si128(_mm_xor_si128(hi0, c3), _mm_set1_epi32(static_cast<int>(k1)));
        c1 = lo1;
        c3 = lo0;
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
    }
    const __m128i w0_01 = _mm_unpacklo_epi32(c0, c1), w0_23 = _mm_unpackhi_epi32(c0, c1);
    const __m128i w1_01 = _mm_unpacklo_epi32(c2, c3), w1_23 = _mm_unpackhi_epi32(c2, c3);
    auto* dst = reinterpret_cast<__m128i*>(out.data());
    _mm_storeu_si128(dst + 0, _mm_unpacklo_epi64(w0_01, w1_01));
    _mm_storeu_si128(dst + 1, _mm_unpackhi_epi64(w0_01, w1_01));
    _mm_storeu_si128(dst + 2, _mm_unpacklo_epi64(w0_23, w1_23));
    _mm_storeu_si128(dst + 3, _mm_unpackhi_epi64(w0_23, w1_23));
#else
    std::uint32_t c0[kLanes], c1[kLanes], c2[kLanes], c3[kLanes];
    for (std::size_t i = 0; i < kLanes; ++i) {
        const std::uint64_t b = block + i;
        c0[i] = static_cast<std::uint32_t>(b);
        c1[i] = static_cast<std::uint32_t>(b >> 32);
        c2[i] = static_cast<std::uint32_t>(stream_id);
        c3[i] = static_cast<std::uint32_t>(stream_id >> 32);
    }
    for (int round = 0; round < 10; ++round) {
        for (std::size_t i = 0; i < kLanes; ++i) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * c0[i];
            const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * c2[i];
            const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1[i] ^ k0;
            const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3[i] ^ k1;
            c1[i] = static_cast<std::uint32_t>(p1);
            c3[i] = static_cast<std::uint32_t>(p0);
            c0[i] = n0;
            c2[i] = n2;
        }
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
    }
    for (std::size_t i = 0; i < kLanes; ++i) {
        out[2 * i] = (static_cast<std::uint64_t>(c1[i]) << 32) | c0[i];
        out[2 * i + 1] = (static_cast<std::uint64_t>(c3[i]) << 32) | c2[i];
    }
#endif
}

} // namespace detail

// Counter-addressable random source. Draw k of stream (seed, stream_id) is a
// pure function of (seed, stream_id, k): the generator is keyed by the seed and
// the 128-bit Philox counter holds (k / 2, stream_id). Each Philox block yields
// two 64-bit draws.
//
// A stream is a small value type; copy it to fork an identical sequence. It is
// not safe to draw from one instance on two threads at once.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
        : seed_(seed), stream_id_(stream_id) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    // Number of 64-bit draws consumed so far.
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept {
        constexpr std::uint64_t kWords = 2 * detail::kLanes;
        const std::uint64_t group = counter_ / kWords;
        if (group != cached_group_) {
            detail::philox4x32_10_lanes(group * detail::kLanes, stream_id_, seed_, cache_);
            cached_group_ = group;
        }
        return cache_[counter_++ % kWords];
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe argument for log().
    double uniform_pos() noexcept {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform on the open interval (0, 1); safe argument for quantile functions.
    double uniform_open() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    void discard(std::uint64_t draws) noexcept { counter_ += draws; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_ = 0;
    std::uint64_t cached_group_ = ~std::uint64_t{0};
    std::array<std::uint64_t, 2 * detail::kLanes> cache_{};
};

inline RandomStream derive_stream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
    return RandomStream(seed, stream_id);
}

} // namespace cyberrisk
