#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <limits>
#include <random>

#include "jagq/oracle.hpp"
#include "jagq/output.hpp"
#include "support.hpp"

using namespace jagq;
using jagq::testing::error_code;

namespace {

// Expected counts below were produced by numpy.histogram on the same inputs.
TEST(Histogram, MatchesNumpyOnEdgeValues) {
    std::vector<double> v;
    for (int i = 0; i <= 10; ++i) v.push_back(i * 0.1);
    for (double x : {0.3, 0.7, 1.0000000000000002, -1e-300, 0.6000000000000001, 0.29999999999999993}) v.push_back(x);
    EXPECT_EQ(histogram(v, 10, 0.0, 1.0).counts, (std::vector<std::int64_t>{1, 1, 3, 1, 1, 1, 3, 1, 1, 2}));

    std::vector<double> thirds;
    for (int i = 0; i <= 30; ++i) thirds.push_back(i / 3.0);
    const Histogram h = histogram(thirds, 7, 0.0, 10.0);
    EXPECT_EQ(h.counts, (std::vector<std::int64_t>{5, 4, 4, 5, 4, 4, 5}));
    EXPECT_EQ(h.edges[1], 1.4285714285714286);
    EXPECT_EQ(h.edges[6], 8.571428571428571);
    EXPECT_EQ(h.edges[7], 10.0);
}

TEST(Histogram, AgreesWithEdgeSearchOnRandomValues) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_real_distribution<double> span(-50.0, 50.0);
        double lo = span(rng), hi = span(rng);
        if (lo > hi) std::swap(lo, hi);
        if (lo == hi) continue;
        const std::size_t bins = 1 + rng() % 97;
        std::vector<double> v;
        std::uniform_real_distribution<double> x(lo - 5.0, hi + 5.0);
        for (int i = 0; i < 500; ++i) v.push_back(x(rng));
        const Histogram h = histogram(v, bins, lo, hi);
        // exact edge hits, the top edge and NaN
        for (std::size_t i = 0; i <= bins; ++i) v.push_back(h.edges[i]);
        v.push_back(std::numeric_limits<double>::quiet_NaN());
        EXPECT_EQ(histogram(v, bins, lo, hi).counts, oracle::histogram(v, bins, lo, hi)) << trial;
    }
}

TEST(Histogram, EmptyInputGivesZeroCounts) {
    const Histogram h = histogram({}, 1, 0.0, 100.0);
    EXPECT_EQ(histogram_csv(h), "bin_lo,bin_hi,count\n0,100,0\n");
}

TEST(Histogram, TotalEqualsLengthWhenRangeCoversEverything) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 3.0);
    std::vector<double> v(2000);
    for (auto& x : v) x = g(rng);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const Histogram h = histogram(v, 37, *lo, *hi);
    std::int64_t total = 0;
    for (auto c : h.counts) total += c;
    EXPECT_EQ(total, static_cast<std::int64_t>(v.size()));
}

TEST(Histogram, RejectsBadArguments) {
    EXPECT_EQ(error_code([] { histogram({}, 0, 0.0, 1.0); }), ErrorCode::InvalidArray);
    EXPECT_EQ(error_code([] { histogram({}, 3, 1.0, 1.0); }), ErrorCode::InvalidArray);
    EXPECT_EQ(error_code([] { histogram({}, 3, 0.0, std::numeric_limits<double>::infinity()); }),
              ErrorCode::InvalidArray);
}

TEST(Output, CsvRows) {
    const Histogram h = histogram(std::vector<double>{0.5, 2.5, 2.5, 4.0}, 4, 0.0, 4.0);
    EXPECT_EQ(histogram_csv(h), "bin_lo,bin_hi,count\n0,1,1\n1,2,0\n2,3,2\n3,4,1\n");
}

TEST(Output, ColumnText) {
    EXPECT_EQ(column_text(JaggedArray::from_floats({{1.5, -0.0}, {}, {std::nan("")}})), "[1.5,-0]\n[]\n[NaN]\n");
    EXPECT_EQ(column_text(JaggedArray::flat(std::vector<std::int64_t>{3, -4})), "3\n-4\n");
    EXPECT_EQ(column_text(JaggedArray::flat(std::vector<std::uint8_t>{1, 0})), "true\nfalse\n");
}

TEST(Output, FlatValuesFollowStorageOrder) {
    const JaggedArray a = JaggedArray::from_ints({{1, 2}, {}, {3}});
    EXPECT_EQ(flat_values(a), (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Output, DoublesRoundTrip) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double v = std::bit_cast<double>(rng());
        if (!std::isfinite(v)) continue;
        const std::string text = format_double(v);
        double back = 0.0;
        std::from_chars(text.data(), text.data() + text.size(), back);
        EXPECT_EQ(back, v) << text;
    }
}

}  // namespace
