#pragma once

#include <string>
#include <vector>

#include "jagq/expr.hpp"

namespace jagq {

/// Alias-substituted, parameter-free expression DAG.
///
/// Canonical form contains no Map, Param or predicate-form Filter nodes:
/// lambdas are lifted into columnar operations and captured values become
/// explicit Broadcast nodes. Structurally equal subexpressions share one
/// node; node order is a deterministic post-order from the roots, so equal
/// programs render byte-identical text.
struct Dag {
    std::vector<Node> nodes;
    std::vector<NodeId> roots;
    /// Nesting depth relative to events (constants report 0).
    std::vector<std::uint32_t> depths;
    /// True for collection-valued nodes (element indices, not leaf values).
    std::vector<bool> records;
    /// Declarations of the functions called by Call nodes, sorted by name.
    std::vector<FunctionDecl> functions;

    bool is_constant(NodeId id) const { return nodes.at(id).kind == NodeKind::Constant; }
    std::size_t size() const { return nodes.size(); }

    const FunctionDecl* find_function(std::string_view name) const;

    std::string text() const;
    /// SHA-256 (hex) of text().
    std::string digest() const;
};

Dag canonicalize(const Session& session, const std::vector<Expr>& roots);
inline Dag canonicalize(const Session& session, const Expr& root) {
    return canonicalize(session, std::vector<Expr>{root});
}

/// Renumbered copy of the subgraph reachable from `root`.
Dag subdag(const Dag& dag, NodeId root);

/// Recomputes depths and record flags after nodes/roots are filled in.
void annotate(Dag& dag);

/// `Gt(n2, n3)`-style rendering of one node.
std::string node_label(const Dag& dag, NodeId id);

/// Literal form shared by the canonical text and the query language: floats
/// always carry a '.' or exponent so that kinds survive a round trip.
std::string format_scalar(const Scalar& value);

std::string quote(std::string_view s);

}  // namespace jagq
