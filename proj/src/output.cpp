#include "jagq/output.hpp"

#include <charconv>
#include <cmath>

namespace jagq {

std::vector<double> flat_values(const JaggedArray& a) {
    std::vector<double> out;
    out.reserve(a.size());
    switch (a.kind()) {
        case ElementKind::Float:
            for (double v : a.floats()) out.push_back(v);
            break;
        case ElementKind::Int:
            for (std::int64_t v : a.ints()) out.push_back(static_cast<double>(v));
            break;
        case ElementKind::Bool:
            for (std::uint8_t v : a.bools()) out.push_back(v ? 1.0 : 0.0);
            break;
    }
    return out;
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
    if (bins == 0) fail(ErrorCode::InvalidArray, "histogram needs at least one bin");
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
        fail(ErrorCode::InvalidArray, "histogram range must be finite with lo < hi");
    }
    Histogram h;
    h.edges.resize(bins + 1);
    const double step = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i < bins; ++i) h.edges[i] = lo + static_cast<double>(i) * step;
    h.edges[bins] = hi;
    h.counts.assign(bins, 0);

    const double norm = static_cast<double>(bins) / (hi - lo);
    for (double x : values) {
        if (!(x >= lo && x <= hi)) continue;
        // Same two-stage lookup numpy uses: a scaled guess, then a correction
        // against the stored edges so results follow the edges exactly.
        auto k = static_cast<std::size_t>((x - lo) * norm);
        if (k >= bins) k = bins - 1;
        if (x < h.edges[k]) {
            --k;
        } else if (x >= h.edges[k + 1] && k + 1 < bins) {
            ++k;
        }
        ++h.counts[k];
    }
    return h;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string histogram_csv(const Histogram& h) {
    std::string out = "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        out += format_double(h.edges[i]) + ',' + format_double(h.edges[i + 1]) + ',' + std::to_string(h.counts[i]) +
               '\n';
    }
    return out;
}

std::string column_text(const JaggedArray& a) {
    std::string out;
    auto value = [&](std::size_t k) {
        switch (a.kind()) {
            case ElementKind::Float: out += format_double(a.floats()[k]); break;
            case ElementKind::Int: out += std::to_string(a.ints()[k]); break;
            case ElementKind::Bool: out += a.bools()[k] ? "true" : "false"; break;
        }
    };
    auto walk = [&](auto&& self, std::size_t level, std::size_t index) -> void {
        if (level == a.depth()) {
            value(index);
            return;
        }
        const Offsets& o = a.offsets(level);
        out += '[';
        for (auto k = o[index]; k < o[index + 1]; ++k) {
            if (k != o[index]) out += ',';
            self(self, level + 1, static_cast<std::size_t>(k));
        }
        out += ']';
    };
    for (std::size_t e = 0; e < a.n_events(); ++e) {
        walk(walk, 0, e);
        out += '\n';
    }
    return out;
}

}  // namespace jagq
