#include "jagq/exec_local.hpp"

#include "jagq/errors.hpp"

namespace jagq {

Evaluator::Evaluator(const Dag& dag, const FunctionRegistry& functions, const EventSource* data)
    : dag_(dag), functions_(functions), data_(data) {}

void Evaluator::bind(NodeId id, JaggedArray value) { memo_.insert_or_assign(id, std::move(value)); }

void Evaluator::restrict_to(std::unordered_set<NodeId> nodes) { allowed_ = std::move(nodes); }

std::variant<JaggedArray, Scalar> Evaluator::operand(NodeId id) {
    if (dag_.is_constant(id)) {
        return dag_.nodes[id].constant;
    }
    return evaluate(id);
}

JaggedArray Evaluator::evaluate(NodeId id) {
    if (auto it = memo_.find(id); it != memo_.end()) {
        return it->second;
    }
    if (allowed_ && !allowed_->contains(id)) {
        fail(ErrorCode::MissingBinding, "no value bound for n" + std::to_string(id) + " " + node_label(dag_, id));
    }
    JaggedArray v = compute(id);
    if (v.depth() != dag_.depths[id]) {
        fail(ErrorCode::Internal, "n" + std::to_string(id) + " evaluated to depth " + std::to_string(v.depth()) +
                                      ", expected " + std::to_string(dag_.depths[id]));
    }
    memo_.emplace(id, v);
    return v;
}

JaggedArray Evaluator::compute(NodeId id) {
    const Node& n = dag_.nodes.at(id);
    auto need_data = [&]() -> const EventSource& {
        if (data_ == nullptr) {
            fail(ErrorCode::MissingBinding, "n" + std::to_string(id) + " reads the dataset, which this executor cannot access");
        }
        return *data_;
    };
    switch (n.kind) {
        case NodeKind::Constant:
            fail(ErrorCode::ShapeMismatch, "a constant has no per-event structure to materialize");
        case NodeKind::Source: {
            const std::size_t events = need_data().n_events();
            std::vector<std::int64_t> idx(events);
            for (std::size_t i = 0; i < events; ++i) idx[i] = static_cast<std::int64_t>(i);
            return JaggedArray::flat(std::move(idx));
        }
        case NodeKind::Attribute: {
            const Node& parent = dag_.nodes[n.children[0]];
            if (parent.kind == NodeKind::Source) {
                return need_data().collection(n.name);
            }
            if (parent.kind == NodeKind::Attribute && dag_.nodes[parent.children[0]].kind == NodeKind::Source) {
                return need_data().leaf(parent.name, n.name);
            }
            fail(ErrorCode::UnsupportedNode, "leaf '" + n.name + "' of a derived value");
        }
        case NodeKind::Binary: {
            auto a = operand(n.children[0]);
            auto b = operand(n.children[1]);
            if (auto* aa = std::get_if<JaggedArray>(&a)) {
                if (auto* ba = std::get_if<JaggedArray>(&b)) {
                    return elementwise_binary(n.binary, *aa, *ba);
                }
                return elementwise_binary(n.binary, *aa, std::get<Scalar>(b));
            }
            return elementwise_binary(n.binary, std::get<Scalar>(a), std::get<JaggedArray>(b));
        }
        case NodeKind::Unary: return elementwise_unary(n.unary, evaluate(n.children[0]));
        case NodeKind::Call: {
            const auto* entry = functions_.find(n.name);
            if (entry == nullptr) {
                fail(ErrorCode::MissingImplementation, "local backend has no implementation of '" + n.name + "'");
            }
            std::vector<std::variant<JaggedArray, Scalar>> args;
            for (NodeId c : n.children) args.push_back(operand(c));
            return elementwise_call(entry->fn, args);
        }
        case NodeKind::Filter: {
            JaggedArray seq = evaluate(n.children[0]);
            if (dag_.is_constant(n.children[1])) {
                return mask_innermost(seq, fill_like(seq, dag_.nodes[n.children[1]].constant));
            }
            return mask_innermost(seq, evaluate(n.children[1]));
        }
        case NodeKind::Aggregate: {
            JaggedArray seq = evaluate(n.children[0]);
            if (n.reduce == ReduceOp::Flatten) {
                return flatten_innermost(seq);
            }
            return reduce_innermost(n.reduce, seq);
        }
        case NodeKind::Broadcast: {
            JaggedArray frame = evaluate(n.children[1]);
            if (dag_.is_constant(n.children[0])) {
                return fill_like(frame, dag_.nodes[n.children[0]].constant);
            }
            return broadcast_subtrees(evaluate(n.children[0]), frame, n.shared);
        }
        case NodeKind::Map:
        case NodeKind::Param: break;
    }
    fail(ErrorCode::UnsupportedNode, std::string(to_string(n.kind)) + " cannot be evaluated");
}

std::vector<JaggedArray> evaluate_all(const Dag& dag, const EventSource& data, const FunctionRegistry& functions) {
    Evaluator ev(dag, functions, &data);
    std::vector<JaggedArray> out;
    for (NodeId r : dag.roots) out.push_back(ev.evaluate(r));
    return out;
}

}  // namespace jagq
