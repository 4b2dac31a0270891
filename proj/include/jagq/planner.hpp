#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jagq/canonical.hpp"
#include "jagq/exec_local.hpp"
#include "jagq/exec_remote.hpp"

namespace jagq {

/// What one backend can run. `can_execute` judges a node on its own; the
/// planner separately requires that a backend reading no data never claims
/// a node that does (Source and direct collection or leaf reads).
struct BackendCapability {
    std::string id;
    bool reads_dataset = false;
    /// False when every array input of a node must already live on this backend.
    bool takes_inputs = true;
    std::function<bool(const Dag&, NodeId)> can_execute;
};

/// Remote service: every translatable node whose functions it implements,
/// provided all its array inputs are remote too.
BackendCapability remote_capability(bool cross_reference, const FunctionRegistry& functions);
/// Local interpreter; `reads_dataset` gives it direct access to the events.
BackendCapability local_capability(bool reads_dataset, const FunctionRegistry& functions);

/// Whether evaluating `node` touches the event data directly.
bool reads_data(const Dag& dag, NodeId node);

/// Backend id per node. Constants take the backend of their first consumer.
using Assignment = std::vector<std::string>;

/// Bottom-up greedy assignment: a node stays on its inputs' backend when
/// that backend accepts it, otherwise goes to the first accepting backend in
/// `backends` order. NoBackend names the node and the backends tried.
Assignment assign(const Dag& dag, const std::vector<BackendCapability>& backends);

struct PlanStep {
    std::string backend;
    /// Every node of the step, ascending; includes the constants it consumes first.
    std::vector<NodeId> nodes;
    /// Values produced by earlier steps.
    std::vector<NodeId> inputs;
    /// Values consumed by later steps or requested as roots.
    std::vector<NodeId> outputs;
    std::vector<std::size_t> depends_on;
};

/// One edge whose endpoints run on different backends.
struct Boundary {
    NodeId producer = 0;
    NodeId consumer = 0;
    std::string from;
    std::string to;
};

struct Plan {
    Assignment assignment;
    std::vector<PlanStep> steps;
    std::vector<Boundary> boundaries;
};

/// Groups connected same-backend nodes into steps. Constants never cross a
/// boundary: a consumer in another step evaluates them inline.
Plan cut_boundaries(const Dag& dag, const Assignment& assignment);

/// Text rendering of the plan. With `sizes`, boundaries also show how many
/// values crossed them.
std::string dump(const Dag& dag, const Plan& plan, const std::map<NodeId, std::size_t>* sizes = nullptr);

/// Runs the nodes of one step given the values of its inputs.
class StepExecutor {
public:
    virtual ~StepExecutor() = default;
    virtual Bindings run(const Dag& dag, const PlanStep& step, const Bindings& inputs) = 0;
};

class LocalStepExecutor final : public StepExecutor {
public:
    /// `data` may be null when the plan gives this backend no data reads.
    LocalStepExecutor(const FunctionRegistry& functions, const EventSource* data)
        : functions_(functions), data_(data) {}
    Bindings run(const Dag& dag, const PlanStep& step, const Bindings& inputs) override;

private:
    const FunctionRegistry& functions_;
    const EventSource* data_;
};

/// Sends one query per step output to the service.
class RemoteStepExecutor final : public StepExecutor {
public:
    RemoteStepExecutor(RemoteClient client, bool cross_reference) : client_(client), cross_reference_(cross_reference) {}
    Bindings run(const Dag& dag, const PlanStep& step, const Bindings& inputs) override;

private:
    RemoteClient client_;
    bool cross_reference_;
};

struct Execution {
    std::vector<JaggedArray> roots;  ///< in dag.roots order
    std::map<NodeId, std::size_t> boundary_sizes;
};

/// Runs steps as their inputs become available; independent steps run
/// concurrently. Failures are rethrown with the step and its nodes named.
Execution execute(const Dag& dag, const Plan& plan, const std::map<std::string, StepExecutor*>& executors);

}  // namespace jagq
