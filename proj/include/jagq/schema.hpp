#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jagq/canonical.hpp"

namespace jagq {

struct CollectionSchema {
    std::string name;
    /// Leaves in declaration order.
    std::vector<std::pair<std::string, ElementKind>> leaves;

    std::optional<ElementKind> leaf(std::string_view name) const;
};

/// Collections and their leaf kinds, read from a schema file such as
///
///     collection Electrons { pt: float; eta: float; phi: float }
///
/// Kinds are `float`, `int` and `bool`; `#` starts a comment.
class DatasetSchema {
public:
    static DatasetSchema parse(std::string_view text);
    static DatasetSchema load(const std::filesystem::path& path);

    void add(CollectionSchema collection);
    const CollectionSchema* find(std::string_view name) const;
    const std::map<std::string, CollectionSchema, std::less<>>& collections() const {
        return collections_;
    }

private:
    std::map<std::string, CollectionSchema, std::less<>> collections_;
};

/// Inferred type of one canonical node.
struct DataShape {
    std::uint32_t depth = 0;
    ElementKind kind = ElementKind::Float;
    /// Collection-valued (records rather than leaf values).
    bool record = false;
    /// Collection the values come from, or "derived".
    std::string origin = "derived";
    /// Compile-time constant.
    bool scalar = false;
};

struct Inference {
    std::vector<DataShape> shapes;
    /// Non-strict fallbacks taken, one message each.
    std::vector<std::string> warnings;
};

/// Annotates every node of `dag`. In strict mode an unknown collection or leaf
/// is a SchemaError; otherwise it is assumed to hold floats and a warning is
/// recorded. Kind errors (non-bool masks, arithmetic on bools, reductions of
/// per-event values, leaves of non-collections) are TypeErrors in both modes,
/// as is a collection-valued root unless `record_roots` allows it (the remote
/// service hands element indices across plan boundaries).
Inference infer(const Dag& dag, const DatasetSchema& schema, bool strict, bool record_roots = false);

}  // namespace jagq
