#include "slq/rng.hpp"
#include "slq/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace slq;

// Known-answer vectors of Philox4x32-10 from the Random123 distribution.
TEST(Philox, KnownAnswers) {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    EXPECT_EQ(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}),
              (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}),
              (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(NormalStream, ReproducibleAndIndependentOfOtherStreams) {
    NormalStream a(42, 7), b(42, 7);
    NormalStream other(42, 8);
    for (int i = 0; i < 100; ++i) other.next();
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next(), b.next());
    NormalStream c(42, 7), d(43, 7);
    int same = 0;
    for (int i = 0; i < 100; ++i) same += c.next() == d.next();
    EXPECT_EQ(same, 0);
}

TEST(NormalStream, FirstMoments) {
    NormalStream s(1, 0);
    std::vector<double> x(400000);
    for (auto& v : x) v = s.next();
    const SampleStats st = sample_stats(x);
    EXPECT_NEAR(st.mean, 0.0, 4.0 * st.std_error);
    std::vector<double> sq(x.size()), q(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sq[i] = x[i] * x[i];
        q[i] = sq[i] * sq[i];
    }
    const SampleStats s2 = sample_stats(sq);
    const SampleStats s4 = sample_stats(q);
    EXPECT_NEAR(s2.mean, 1.0, 4.0 * s2.std_error);
    EXPECT_NEAR(s4.mean, 3.0, 4.0 * s4.std_error);
}

TEST(NormalStream, AdjacentStreamsUncorrelated) {
    std::vector<double> prod(100000);
    for (std::size_t p = 0; p < prod.size(); ++p) {
        NormalStream a(5, p), b(5, p + 1);
        prod[p] = a.next() * b.next();
    }
    const SampleStats s = sample_stats(prod);
    EXPECT_NEAR(s.mean, 0.0, 4.0 * s.std_error);
}

TEST(UniformStream, RangeAndMean) {
    UniformStream u(3, 9);
    std::vector<double> x(200000);
    for (auto& v : x) {
        v = u.next();
        ASSERT_GT(v, 0.0);
        ASSERT_LE(v, 1.0);
    }
    const SampleStats s = sample_stats(x);
    EXPECT_NEAR(s.mean, 0.5, 4.0 * s.std_error);
}
