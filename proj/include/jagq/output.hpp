#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jagq/jagged.hpp"

namespace jagq {

/// Every value of `a` in storage order, as doubles (Bool as 0/1).
std::vector<double> flat_values(const JaggedArray& a);

struct Histogram {
    std::vector<double> edges;  ///< bins + 1 entries
    std::vector<std::int64_t> counts;
};

/// Fixed-width binning with numpy semantics: edges lo + i * (hi - lo) / bins
/// with the last edge exactly hi, bins half-open except the last, which also
/// holds hi. Values outside [lo, hi] and NaN are dropped.
Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

/// `bin_lo,bin_hi,count` rows after a header line.
std::string histogram_csv(const Histogram& h);

/// One line per event: the event's value as JSON (nested lists for depth > 0).
/// Non-finite floats are written as NaN, Infinity and -Infinity.
std::string column_text(const JaggedArray& a);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace jagq
