#pragma once

#include <string>
#include <string_view>

#include "jagq/canonical.hpp"

/// Textual functional query language spoken by the remote service.
///
///     query    := postfix
///     postfix  := primary { "." ident | "|>" stage }
///     stage    := Get("name") | Where(lambda) | Select(lambda) | SelectMany(lambda)
///               | Count() | First() | Sum() | Min() | Max() | Any() | All()
///     lambda   := ident "=>" expr
///     expr     := C-like: || && (== != < > <= >=) (+ -) (* /) unary-minus postfix
///     primary  := number | true | false | inf | nan | ident | "(" expr ")"
///               | From("dataset") | Fn(args...)
///
/// Functions: Abs, Sqrt, Sin, Cos, Atan2, Mask(seq, mask),
/// Broadcast(value, frame, shared), and any declared backend function.
/// Keywords are case-sensitive. Floats are written with a '.' or exponent.
namespace jagq {

/// Records the query into `session`; backend functions must already be
/// declared there. SyntaxError carries the line and column.
Expr parse_query(std::string_view text, Session& session);

/// Whether the remote service can run `node` itself (not its inputs). With
/// `cross_reference` off, filtering a non-collection sequence and
/// broadcasting a computed value are refused, which forces the planner to
/// split pipelines that refer to a filtered collection's leaves from afar.
bool remote_capable(const Dag& dag, NodeId node, bool cross_reference);

/// Canonical query text for the value of `root`. Parameters are named p0,
/// p1, ... by nesting; equal subgraphs give byte-equal text. Throws
/// UnsupportedNode when some node of the subgraph is not remote-capable.
std::string translate(const Dag& dag, NodeId root, bool cross_reference = true);

}  // namespace jagq
