#include "jagq/planner.hpp"

#include <algorithm>
#include <future>
#include <set>
#include <sstream>
#include <tuple>

#include "jagq/query_lang.hpp"

namespace jagq {

namespace {

bool calls_known(const Dag& dag, NodeId id, const std::set<std::string, std::less<>>& names) {
    const Node& n = dag.nodes[id];
    return n.kind != NodeKind::Call || names.contains(n.name);
}

std::set<std::string, std::less<>> function_names(const FunctionRegistry& functions) {
    std::set<std::string, std::less<>> names;
    for (const auto& [name, entry] : functions.entries()) names.insert(name);
    return names;
}

std::string node_list(const std::vector<NodeId>& ids) {
    std::string s = "[";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) s += ',';
        s += 'n' + std::to_string(ids[i]);
    }
    return s + "]";
}

/// Message of an Error without its "Code: " prefix.
std::string detail(const Error& e) {
    const std::string what = e.what();
    const std::size_t skip = to_string(e.code()).size() + 2;
    return what.size() >= skip ? what.substr(skip) : what;
}

}  // namespace

bool reads_data(const Dag& dag, NodeId node) {
    const Node& n = dag.nodes.at(node);
    return n.kind == NodeKind::Source || n.kind == NodeKind::Attribute;
}

BackendCapability remote_capability(bool cross_reference, const FunctionRegistry& functions) {
    return BackendCapability{
        "remote", true, false, [cross_reference, names = function_names(functions)](const Dag& dag, NodeId id) {
            return remote_capable(dag, id, cross_reference) && calls_known(dag, id, names);
        }};
}

BackendCapability local_capability(bool reads_dataset, const FunctionRegistry& functions) {
    return BackendCapability{"local", reads_dataset, true, [names = function_names(functions)](const Dag& dag, NodeId id) {
                                 const NodeKind k = dag.nodes[id].kind;
                                 return k != NodeKind::Map && k != NodeKind::Param && calls_known(dag, id, names);
                             }};
}

Assignment assign(const Dag& dag, const std::vector<BackendCapability>& backends) {
    Assignment out(dag.size());
    auto accepts = [&](const BackendCapability& b, NodeId id) {
        if (reads_data(dag, id) && !b.reads_dataset) return false;
        if (!b.can_execute(dag, id)) return false;
        if (!b.takes_inputs) {
            for (NodeId c : dag.nodes[id].children) {
                if (!dag.is_constant(c) && out[c] != b.id) return false;
            }
        }
        return true;
    };

    for (NodeId id = 0; id < dag.size(); ++id) {
        if (dag.is_constant(id)) continue;
        std::set<std::string> input_backends;
        for (NodeId c : dag.nodes[id].children) {
            if (!dag.is_constant(c)) input_backends.insert(out[c]);
        }
        const BackendCapability* chosen = nullptr;
        if (input_backends.size() == 1) {
            for (const auto& b : backends) {
                if (b.id == *input_backends.begin() && accepts(b, id)) chosen = &b;
            }
        }
        for (std::size_t i = 0; !chosen && i < backends.size(); ++i) {
            if (accepts(backends[i], id)) chosen = &backends[i];
        }
        if (!chosen) {
            std::string tried;
            for (const auto& b : backends) tried += (tried.empty() ? "" : ", ") + b.id;
            fail(ErrorCode::NoBackend,
                 "n" + std::to_string(id) + " " + node_label(dag, id) + " is accepted by none of [" + tried + "]");
        }
        out[id] = chosen->id;
    }

    // Constants follow their first consumer; a constant root stays unassigned
    // only if nothing else exists, which canonical form never produces.
    for (NodeId id = 0; id < dag.size(); ++id) {
        for (NodeId c : dag.nodes[id].children) {
            if (dag.is_constant(c) && out[c].empty()) out[c] = out[id];
        }
    }
    for (NodeId id = 0; id < dag.size(); ++id) {
        if (out[id].empty() && !backends.empty()) out[id] = backends.front().id;
    }
    return out;
}

Plan cut_boundaries(const Dag& dag, const Assignment& assignment) {
    if (assignment.size() != dag.size()) fail(ErrorCode::Internal, "assignment does not cover the graph");
    Plan plan;
    plan.assignment = assignment;

    // Layer counts backend changes along the deepest input path; nodes sharing
    // backend and layer form one step, and a step only ever waits on lower layers.
    std::vector<std::size_t> layer(dag.size(), 0);
    for (NodeId id = 0; id < dag.size(); ++id) {
        if (dag.is_constant(id)) continue;
        for (NodeId c : dag.nodes[id].children) {
            if (dag.is_constant(c)) continue;
            layer[id] = std::max(layer[id], layer[c] + (assignment[c] != assignment[id] ? 1 : 0));
        }
    }
    std::vector<std::size_t> owner(dag.size(), 0);
    std::map<std::pair<std::size_t, std::string>, std::size_t> index;
    std::vector<std::pair<std::size_t, std::string>> order;
    for (NodeId id = 0; id < dag.size(); ++id) {
        if (!dag.is_constant(id)) order.emplace_back(layer[id], assignment[id]);
    }
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());
    for (const auto& key : order) {
        index.emplace(key, plan.steps.size());
        plan.steps.push_back(PlanStep{key.second, {}, {}, {}, {}});
    }

    for (NodeId id = 0; id < dag.size(); ++id) {
        if (dag.is_constant(id)) continue;
        owner[id] = index.at({layer[id], assignment[id]});
    }
    std::vector<bool> placed(dag.size(), false);
    for (NodeId id = 0; id < dag.size(); ++id) {
        if (dag.is_constant(id)) continue;
        for (NodeId c : dag.nodes[id].children) {
            if (dag.is_constant(c) && !placed[c]) {
                placed[c] = true;
                owner[c] = owner[id];
            }
        }
    }
    for (NodeId id = 0; id < dag.size(); ++id) {
        if (dag.is_constant(id) && !placed[id]) {
            if (plan.steps.empty()) plan.steps.push_back(PlanStep{assignment[id], {}, {}, {}, {}});
            owner[id] = 0;
        }
        plan.steps[owner[id]].nodes.push_back(id);
    }

    std::vector<std::set<NodeId>> inputs(plan.steps.size()), outputs(plan.steps.size());
    std::vector<std::set<std::size_t>> deps(plan.steps.size());
    std::set<std::pair<NodeId, NodeId>> crossing;
    for (NodeId id = 0; id < dag.size(); ++id) {
        for (NodeId c : dag.nodes[id].children) {
            if (dag.is_constant(c) || owner[c] == owner[id]) continue;
            inputs[owner[id]].insert(c);
            outputs[owner[c]].insert(c);
            deps[owner[id]].insert(owner[c]);
            if (assignment[c] != assignment[id] && crossing.emplace(c, id).second) {
                plan.boundaries.push_back(Boundary{c, id, assignment[c], assignment[id]});
            }
        }
    }
    for (NodeId r : dag.roots) outputs[owner[r]].insert(r);
    for (std::size_t s = 0; s < plan.steps.size(); ++s) {
        plan.steps[s].inputs.assign(inputs[s].begin(), inputs[s].end());
        plan.steps[s].outputs.assign(outputs[s].begin(), outputs[s].end());
        plan.steps[s].depends_on.assign(deps[s].begin(), deps[s].end());
    }
    std::sort(plan.boundaries.begin(), plan.boundaries.end(), [](const Boundary& a, const Boundary& b) {
        return std::tie(a.producer, a.consumer) < std::tie(b.producer, b.consumer);
    });
    return plan;
}

std::string dump(const Dag& dag, const Plan& plan, const std::map<NodeId, std::size_t>* sizes) {
    std::ostringstream out;
    for (std::size_t s = 0; s < plan.steps.size(); ++s) {
        const PlanStep& step = plan.steps[s];
        out << "step " << s << " backend=" << step.backend << " inputs=" << node_list(step.inputs)
            << " outputs=" << node_list(step.outputs) << '\n';
        for (NodeId id : step.nodes) out << "  n" << id << ' ' << node_label(dag, id) << '\n';
    }
    out << "boundaries:\n";
    for (const Boundary& b : plan.boundaries) {
        out << "  n" << b.producer << " -> n" << b.consumer << ' ' << b.from << "->" << b.to;
        if (sizes) {
            if (auto it = sizes->find(b.producer); it != sizes->end()) out << " values=" << it->second;
        }
        out << '\n';
    }
    return out.str();
}

Bindings LocalStepExecutor::run(const Dag& dag, const PlanStep& step, const Bindings& inputs) {
    Evaluator ev(dag, functions_, data_);
    for (const auto& [id, value] : inputs) ev.bind(id, value);
    ev.restrict_to(std::unordered_set<NodeId>(step.nodes.begin(), step.nodes.end()));
    Bindings out;
    for (NodeId id : step.outputs) out.emplace(id, ev.evaluate(id));
    return out;
}

Bindings RemoteStepExecutor::run(const Dag& dag, const PlanStep& step, const Bindings& inputs) {
    if (!inputs.empty()) fail(ErrorCode::UnsupportedNode, "the remote service cannot take computed inputs");
    Bindings out;
    for (NodeId id : step.outputs) {
        const Dag part = subdag(dag, id);
        std::set<std::string> datasets;
        for (const Node& n : part.nodes) {
            if (n.kind == NodeKind::Source) datasets.insert(n.name);
        }
        if (datasets.size() != 1) {
            fail(ErrorCode::UnsupportedNode, "n" + std::to_string(id) + " must read exactly one dataset remotely");
        }
        const std::string query = translate(part, part.roots.at(0), cross_reference_);
        RemoteResult result = client_.submit(*datasets.begin(), query);
        if (result.columns.size() != 1) fail(ErrorCode::WireFormat, "expected one result column");
        out.emplace(id, std::move(result.columns[0].data));
    }
    return out;
}

Execution execute(const Dag& dag, const Plan& plan, const std::map<std::string, StepExecutor*>& executors) {
    Bindings values;
    std::vector<bool> done(plan.steps.size(), false);
    std::size_t remaining = plan.steps.size();
    while (remaining > 0) {
        std::vector<std::size_t> ready;
        for (std::size_t s = 0; s < plan.steps.size(); ++s) {
            if (done[s]) continue;
            const auto& deps = plan.steps[s].depends_on;
            if (std::all_of(deps.begin(), deps.end(), [&](std::size_t d) { return done[d]; })) ready.push_back(s);
        }
        if (ready.empty()) fail(ErrorCode::Internal, "plan steps depend on each other cyclically");

        std::vector<std::future<Bindings>> running;
        for (std::size_t s : ready) {
            const PlanStep& step = plan.steps[s];
            auto it = executors.find(step.backend);
            if (it == executors.end() || !it->second) {
                fail(ErrorCode::NoBackend, "no executor for backend '" + step.backend + "'");
            }
            Bindings in;
            for (NodeId id : step.inputs) in.emplace(id, values.at(id));
            running.push_back(std::async(std::launch::async, [&dag, &step, exec = it->second, in = std::move(in)] {
                return exec->run(dag, step, in);
            }));
        }
        std::optional<Error> first_error;
        for (std::size_t k = 0; k < ready.size(); ++k) {
            const PlanStep& step = plan.steps[ready[k]];
            try {
                for (auto& [id, value] : running[k].get()) values.insert_or_assign(id, std::move(value));
            } catch (const Error& e) {
                if (!first_error) {
                    first_error = Error(e.code(), "step " + std::to_string(ready[k]) + " (" + step.backend +
                                                      ") nodes " + node_list(step.nodes) + ": " + detail(e));
                }
            }
            done[ready[k]] = true;
            --remaining;
        }
        if (first_error) throw *first_error;
    }

    Execution result;
    for (NodeId r : dag.roots) result.roots.push_back(values.at(r));
    for (const Boundary& b : plan.boundaries) result.boundary_sizes[b.producer] = values.at(b.producer).size();
    return result;
}

}  // namespace jagq
