#pragma once

#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "jagq/canonical.hpp"
#include "jagq/dataset.hpp"
#include "jagq/functions.hpp"

namespace jagq {

using Bindings = std::unordered_map<NodeId, JaggedArray>;

/// Node-at-a-time interpreter over a canonical DAG. Each node maps to one
/// kernel call and is evaluated at most once; no fusion is attempted.
class Evaluator {
public:
    /// `data` may be null when every Source/Attribute the evaluation reaches
    /// is supplied through bind().
    Evaluator(const Dag& dag, const FunctionRegistry& functions, const EventSource* data);

    void bind(NodeId id, JaggedArray value);
    /// Restricts evaluation to `nodes`; anything else must be bound.
    void restrict_to(std::unordered_set<NodeId> nodes);

    JaggedArray evaluate(NodeId id);

private:
    std::variant<JaggedArray, Scalar> operand(NodeId id);
    JaggedArray compute(NodeId id);

    const Dag& dag_;
    const FunctionRegistry& functions_;
    const EventSource* data_;
    Bindings memo_;
    std::optional<std::unordered_set<NodeId>> allowed_;
};

/// Evaluates every root of `dag` directly against `data`.
std::vector<JaggedArray> evaluate_all(const Dag& dag, const EventSource& data,
                                      const FunctionRegistry& functions);

}  // namespace jagq
