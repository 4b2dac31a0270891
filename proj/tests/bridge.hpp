#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "jagq/errors.hpp"
#include "jagq/jagged.hpp"
#include "jagq/oracle.hpp"
#include "jagq/schema.hpp"

namespace jagq::testing {

/// Same structure and kind; floats agree to `rel` relative error, NaN equals
/// NaN, everything else exactly. Returns a description of the first
/// difference, or nothing.
inline std::optional<std::string> mismatch(const JaggedArray& engine, const JaggedArray& ref, double rel) {
    std::ostringstream why;
    if (engine.depth() != ref.depth()) {
        why << "depth " << engine.depth() << " vs " << ref.depth();
        return why.str();
    }
    if (engine.kind() != ref.kind()) {
        why << "kind " << to_string(engine.kind()) << " vs " << to_string(ref.kind());
        return why.str();
    }
    for (std::size_t l = 0; l < engine.depth(); ++l) {
        if (engine.offsets(l) != ref.offsets(l)) {
            why << "offsets differ at level " << l;
            return why.str();
        }
    }
    if (engine.size() != ref.size()) {
        why << "size " << engine.size() << " vs " << ref.size();
        return why.str();
    }
    if (engine.kind() != ElementKind::Float) {
        if (engine.values() == ref.values()) return std::nullopt;
        return std::string("integer or bool values differ");
    }
    const auto a = engine.floats(), b = ref.floats();
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::isnan(a[k]) && std::isnan(b[k])) continue;
        if (a[k] == b[k]) continue;
        const double tol = rel * std::max(std::fabs(a[k]), std::fabs(b[k]));
        if (!(std::fabs(a[k] - b[k]) <= tol)) {
            why.precision(17);
            why << "value " << k << ": " << a[k] << " vs " << b[k];
            return why.str();
        }
    }
    return std::nullopt;
}


inline oracle::LeafKinds leaf_kinds(const DatasetSchema& schema) {
    oracle::LeafKinds kinds;
    for (const auto& [name, c] : schema.collections()) {
        for (const auto& [leaf, kind] : c.leaves) kinds[name][leaf] = kind;
    }
    return kinds;
}

/// Packs per-event oracle values into the engine's columnar layout.
inline JaggedArray to_jagged(const std::vector<oracle::Value>& per_event, const oracle::Type& type) {
    std::vector<Offsets> levels(type.depth + 1, Offsets{0});
    std::vector<double> f;
    std::vector<std::int64_t> i;
    std::vector<std::uint8_t> b;
    auto walk = [&](auto&& self, const oracle::Value& v, std::size_t lvl) -> void {
        if (lvl == type.depth) {
            switch (type.kind) {
                case ElementKind::Float: f.push_back(v.f); break;
                case ElementKind::Int: i.push_back(v.i); break;
                case ElementKind::Bool: b.push_back(v.b ? 1 : 0); break;
            }
            return;
        }
        Offsets& o = levels[lvl + 1];
        o.push_back(o.back() + static_cast<std::int64_t>(v.items.size()));
        for (const auto& item : v.items) self(self, item, lvl + 1);
    };
    for (const auto& v : per_event) walk(walk, v, 0);
    levels.erase(levels.begin());
    JaggedArray::Values values;
    switch (type.kind) {
        case ElementKind::Float: values = std::move(f); break;
        case ElementKind::Int: values = std::move(i); break;
        case ElementKind::Bool: values = std::move(b); break;
    }
    if (type.depth == 0) return JaggedArray::flat(std::move(values));
    return JaggedArray(std::move(levels), std::move(values));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("jagq-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace jagq::testing
