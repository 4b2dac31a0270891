#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "jagq/errors.hpp"

namespace jagq {

enum class ElementKind : std::uint8_t { Float = 0, Int = 1, Bool = 2 };

std::string_view to_string(ElementKind kind);

using Offsets = std::vector<std::int64_t>;

/// One primitive value; used for constants and broadcast operands.
using Scalar = std::variant<double, std::int64_t, bool>;

ElementKind kind_of(const Scalar& s);

/// Per-event variable-length data at arbitrary nesting depth.
///
/// Depth 0 is a flat per-event column (one value per event). Depth d keeps d
/// offset levels; level 0 is indexed by event, the last level indexes into
/// the flat value buffer. Offset buffers and values are shared between
/// arrays derived from one another and are never mutated.
class JaggedArray {
public:
    using Values = std::variant<std::vector<double>, std::vector<std::int64_t>,
                                std::vector<std::uint8_t>>;

    JaggedArray();
    JaggedArray(std::vector<Offsets> levels, Values values);
    JaggedArray(std::vector<std::shared_ptr<const Offsets>> levels,
                std::shared_ptr<const Values> values);

    static JaggedArray from_floats(const std::vector<std::vector<double>>& rows);
    static JaggedArray from_ints(const std::vector<std::vector<std::int64_t>>& rows);
    static JaggedArray from_bools(const std::vector<std::vector<bool>>& rows);
    static JaggedArray flat(Values values);

    std::size_t depth() const { return levels_.size(); }
    std::size_t n_events() const;
    std::size_t size() const;
    ElementKind kind() const;

    const Offsets& offsets(std::size_t level) const { return *levels_.at(level); }
    const std::shared_ptr<const Offsets>& shared_offsets(std::size_t level) const {
        return levels_.at(level);
    }
    const std::vector<std::shared_ptr<const Offsets>>& shared_levels() const {
        return levels_;
    }
    const Values& values() const { return *values_; }
    const std::shared_ptr<const Values>& shared_values() const { return values_; }

    std::span<const double> floats() const;
    std::span<const std::int64_t> ints() const;
    std::span<const std::uint8_t> bools() const;

    double as_double(std::size_t i) const;

    /// True when both arrays have identical offset levels.
    bool same_structure(const JaggedArray& other) const;

    /// Exact equality of structure, kind and values (bitwise for floats).
    bool operator==(const JaggedArray& other) const;

private:
    void validate() const;

    std::vector<std::shared_ptr<const Offsets>> levels_;
    std::shared_ptr<const Values> values_;
};

enum class BinaryOp : std::uint8_t {
    Add, Sub, Mul, Div, Lt, Gt, Le, Ge, Eq, Ne, And, Or, Atan2,
};
enum class UnaryOp : std::uint8_t { Neg, Abs, Sqrt, Sin, Cos };
enum class ReduceOp : std::uint8_t { Count, First, Sum, Min, Max, Any, All, Flatten };

std::string_view to_string(BinaryOp op);
std::string_view to_string(UnaryOp op);
std::string_view to_string(ReduceOp op);

bool is_comparison(BinaryOp op);
bool is_logical(BinaryOp op);

/// Result kind of a binary operation, or KindMismatch.
ElementKind binary_result_kind(BinaryOp op, ElementKind a, ElementKind b);
ElementKind unary_result_kind(UnaryOp op, ElementKind a);
ElementKind reduce_result_kind(ReduceOp op, ElementKind a);

/// Scalar arithmetic with the same kind rules as the array kernels. Does not
/// count as a kernel invocation (used for constant folding).
Scalar apply_binary(BinaryOp op, const Scalar& a, const Scalar& b);
Scalar apply_unary(UnaryOp op, const Scalar& a);

/// Number of kernel invocations since process start. Building and planning
/// expressions must never move this counter.
std::uint64_t kernel_invocations();

JaggedArray elementwise_binary(BinaryOp op, const JaggedArray& a, const JaggedArray& b);
JaggedArray elementwise_binary(BinaryOp op, const JaggedArray& a, const Scalar& b);
JaggedArray elementwise_binary(BinaryOp op, const Scalar& a, const JaggedArray& b);

JaggedArray elementwise_unary(UnaryOp op, const JaggedArray& a);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Applies a Float-valued function elementwise over operands of identical
/// structure; scalar operands broadcast.
JaggedArray elementwise_call(const ScalarFunction& fn,
                             const std::vector<std::variant<JaggedArray, Scalar>>& args);

JaggedArray mask_innermost(const JaggedArray& a, const JaggedArray& mask);

JaggedArray reduce_innermost(ReduceOp op, const JaggedArray& a);

/// Merges the two innermost offset levels (concatenates innermost lists).
JaggedArray flatten_innermost(const JaggedArray& a);

/// Offsets of the depth-2 structure in which event e holds len(outer[e])
/// lists, each of length len(inner[e]).
struct NestedShape {
    std::vector<Offsets> levels;
};
NestedShape cross_nest(const JaggedArray& outer, const JaggedArray& inner);

/// Replicates `value` into `frame`'s structure. The first `shared` levels of
/// both arrays must coincide; every element at the frame's innermost level
/// receives a copy of the value subtree of its level-`shared` ancestor.
/// Result depth is frame.depth() + value.depth() - shared.
JaggedArray broadcast_subtrees(const JaggedArray& value, const JaggedArray& frame,
                               std::size_t shared);

/// Fills `frame`'s structure with a constant.
JaggedArray fill_like(const JaggedArray& frame, const Scalar& value);

/// Flattened values as doubles (Bool maps to 0/1).
std::vector<double> flatten_to_doubles(const JaggedArray& a);

}  // namespace jagq
