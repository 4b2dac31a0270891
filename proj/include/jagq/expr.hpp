#pragma once

#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "jagq/jagged.hpp"

namespace jagq {

using NodeId = std::uint32_t;
using ParamId = std::int64_t;
inline constexpr ParamId kNoParam = -1;

enum class NodeKind : std::uint8_t {
    Source,     // name = dataset id
    Attribute,  // children = {parent}, name = attribute
    Binary,     // children = {left, right}
    Unary,      // children = {operand}
    Filter,     // children = {sequence, predicate}; param set for lambda form
    Map,        // children = {sequence, body}; param
    Aggregate,  // children = {sequence}
    Call,       // children = args, name = declared function
    Constant,
    Param,      // param
    Broadcast,  // children = {value, frame}; shared = common leading depth
};

std::string_view to_string(NodeKind kind);

/// One recorded operation. Nodes never change after creation; children are
/// always created before their parents.
struct Node {
    NodeKind kind = NodeKind::Constant;
    std::vector<NodeId> children;
    std::string name;
    BinaryOp binary = BinaryOp::Add;
    UnaryOp unary = UnaryOp::Neg;
    ReduceOp reduce = ReduceOp::Count;
    Scalar constant = 0.0;
    ParamId param = kNoParam;
    std::uint32_t shared = 0;
};

struct FunctionDecl {
    std::string name;
    std::vector<ElementKind> params;
    ElementKind ret = ElementKind::Float;

    bool operator==(const FunctionDecl&) const = default;
};

class Session;

/// Handle to a recorded expression. Cheap to copy; all operations record new
/// nodes in the owning session and never touch data.
class Expr {
public:
    Expr(Session* session, NodeId id) : session_(session), id_(id) {}

    NodeId id() const { return id_; }
    Session& session() const { return *session_; }

    /// Leaf or collection reference; resolves aliases defined on this
    /// expression's collection.
    Expr attr(std::string_view name) const;
    Expr operator[](std::string_view name) const { return attr(name); }
    Expr operator[](const char* name) const { return attr(name); }

    /// Mask-form filter: `mask` is a Bool expression over this sequence.
    Expr filter(const Expr& mask) const;
    /// Predicate-form filter: `pred` is called once with the element handle.
    Expr filter(const std::function<Expr(Expr)>& pred) const;
    Expr operator[](const Expr& mask) const { return filter(mask); }
    template <typename F>
        requires std::is_invocable_r_v<Expr, F, Expr>
    Expr operator[](F&& pred) const {
        return filter(std::function<Expr(Expr)>(std::forward<F>(pred)));
    }

    Expr map(const std::function<Expr(Expr)>& body) const;

    Expr count() const { return aggregate(ReduceOp::Count); }
    Expr first() const { return aggregate(ReduceOp::First); }
    Expr sum() const { return aggregate(ReduceOp::Sum); }
    Expr min() const { return aggregate(ReduceOp::Min); }
    Expr max() const { return aggregate(ReduceOp::Max); }
    Expr any() const { return aggregate(ReduceOp::Any); }
    Expr all() const { return aggregate(ReduceOp::All); }
    Expr flatten() const { return aggregate(ReduceOp::Flatten); }
    Expr aggregate(ReduceOp op) const;

    /// Defines a computed column on this expression's collection.
    void define(std::string name, std::function<Expr(Expr)> body) const;

private:
    Session* session_;
    NodeId id_;
};

/// Owns the recorded expression graph, the alias table and the declared
/// backend functions for one analysis.
class Session {
public:
    Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    Expr source(std::string dataset);
    Expr constant(Scalar value);

    Expr attr(const Expr& parent, std::string_view name);
    Expr binary(BinaryOp op, const Expr& a, const Expr& b);
    Expr unary(UnaryOp op, const Expr& a);
    Expr filter(const Expr& seq, const Expr& mask);
    Expr filter(const Expr& seq, const std::function<Expr(Expr)>& pred);
    Expr map(const Expr& seq, const std::function<Expr(Expr)>& body);
    Expr aggregate(ReduceOp op, const Expr& seq);
    Expr call(std::string_view name, const std::vector<Expr>& args);
    /// Explicit structure replication; produced by the query parser.
    Expr broadcast(const Expr& value, const Expr& frame, std::uint32_t shared);

    void declare_function(std::string name, std::vector<ElementKind> params, ElementKind ret);
    const FunctionDecl* find_function(std::string_view name) const;
    const std::map<std::string, FunctionDecl, std::less<>>& functions() const {
        return functions_;
    }

    void define_alias(const Expr& anchor, std::string name, std::function<Expr(Expr)> body);

    const Node& node(NodeId id) const { return nodes_.at(id); }
    std::size_t size() const { return nodes_.size(); }

    /// Sorted parameter ids referenced but not bound inside the subtree.
    const std::vector<ParamId>& free_params(NodeId id) const;

    /// Collection identity used to key aliases ("" for the event record,
    /// "derived" when the value is not a collection).
    const std::string& origin(NodeId id) const;
    /// Sequence node whose elements parameter `p` ranges over.
    NodeId param_domain(ParamId p) const { return param_domain_.at(p); }

private:
    struct AliasKey {
        std::string origin;
        std::string name;
        auto operator<=>(const AliasKey&) const = default;
    };

    NodeId add(Node node);
    Expr wrap(NodeId id) { return Expr(this, id); }
    ParamId open_binder(NodeId domain);
    void close_binder(ParamId p);
    void check_scope(NodeId body, ParamId own) const;
    void check_same_session(const Expr& e) const;

    std::vector<Node> nodes_;
    mutable std::vector<std::optional<std::vector<ParamId>>> free_cache_;
    mutable std::vector<std::optional<std::string>> origin_cache_;
    std::map<ParamId, NodeId> param_domain_;
    std::vector<ParamId> open_params_;
    ParamId next_param_ = 0;
    std::map<AliasKey, std::function<Expr(Expr)>> aliases_;
    std::vector<AliasKey> resolving_;
    std::map<std::string, FunctionDecl, std::less<>> functions_;
};

template <typename T>
concept ScalarLike = std::is_arithmetic_v<T>;

template <ScalarLike T>
Scalar to_scalar(T v) {
    if constexpr (std::is_same_v<T, bool>) {
        return v;
    } else if constexpr (std::is_integral_v<T>) {
        return static_cast<std::int64_t>(v);
    } else {
        return static_cast<double>(v);
    }
}

#define JAGQ_BINARY_OPERATOR(SYM, OP)                                          \
    inline Expr operator SYM(const Expr& a, const Expr& b) {                   \
        return a.session().binary(BinaryOp::OP, a, b);                         \
    }                                                                          \
    template <ScalarLike T>                                                    \
    Expr operator SYM(const Expr& a, T b) {                                    \
        return a.session().binary(BinaryOp::OP, a,                            \
                                  a.session().constant(to_scalar(b)));         \
    }                                                                          \
    template <ScalarLike T>                                                    \
    Expr operator SYM(T a, const Expr& b) {                                    \
        return b.session().binary(BinaryOp::OP,                                \
                                  b.session().constant(to_scalar(a)), b);      \
    }

JAGQ_BINARY_OPERATOR(+, Add)
JAGQ_BINARY_OPERATOR(-, Sub)
JAGQ_BINARY_OPERATOR(*, Mul)
JAGQ_BINARY_OPERATOR(/, Div)
JAGQ_BINARY_OPERATOR(<, Lt)
JAGQ_BINARY_OPERATOR(>, Gt)
JAGQ_BINARY_OPERATOR(<=, Le)
JAGQ_BINARY_OPERATOR(>=, Ge)
JAGQ_BINARY_OPERATOR(==, Eq)
JAGQ_BINARY_OPERATOR(!=, Ne)
JAGQ_BINARY_OPERATOR(&, And)
JAGQ_BINARY_OPERATOR(|, Or)

#undef JAGQ_BINARY_OPERATOR

inline Expr operator-(const Expr& a) { return a.session().unary(UnaryOp::Neg, a); }
inline Expr abs(const Expr& a) { return a.session().unary(UnaryOp::Abs, a); }
inline Expr sqrt(const Expr& a) { return a.session().unary(UnaryOp::Sqrt, a); }
inline Expr sin(const Expr& a) { return a.session().unary(UnaryOp::Sin, a); }
inline Expr cos(const Expr& a) { return a.session().unary(UnaryOp::Cos, a); }
inline Expr atan2(const Expr& y, const Expr& x) {
    return y.session().binary(BinaryOp::Atan2, y, x);
}

}  // namespace jagq
