#include "jagq/runner.hpp"

#include <set>

#include "jagq/output.hpp"
#include "jagq/query_lang.hpp"
#include "jagq/schema.hpp"

namespace jagq {

namespace {

template <typename F>
auto at_stage(Stage stage, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw RunError(stage, e);
    }
}

}  // namespace

RunReport run_query(const DatasetRegistry& registry, const RunOptions& options) {
    const FunctionRegistry functions = FunctionRegistry::with_builtins();
    Session session;
    functions.declare_all(session);

    Dag dag = at_stage(Stage::Parse, [&] { return canonicalize(session, parse_query(options.query, session)); });

    std::set<std::string> datasets;
    for (Node& n : dag.nodes) {
        if (n.kind != NodeKind::Source) continue;
        if (options.dataset) n.name = *options.dataset;
        datasets.insert(n.name);
    }

    const Plan plan = at_stage(Stage::Plan, [&] {
        for (const std::string& id : datasets) {
            if (!registry.contains(id)) fail(ErrorCode::UnknownDataset, "no dataset '" + id + "' in the registry");
            infer(dag, DatasetSchema::load(registry.find(id).schema), true, true);
        }
        std::vector<BackendCapability> backends;
        if (options.backends == Backends::Split) {
            backends.push_back(remote_capability(options.cross_reference, functions));
            backends.push_back(local_capability(false, functions));
        } else {
            backends.push_back(local_capability(true, functions));
        }
        return cut_boundaries(dag, assign(dag, backends));
    });

    RunReport report;
    report.plan = dump(dag, plan);
    if (options.plan_only) return report;

    at_stage(Stage::Execute, [&] {
        Execution ex;
        if (options.backends == Backends::Split) {
            RemoteService service(registry, functions, options.cache_dir);
            RemoteStepExecutor remote(RemoteClient(service), options.cross_reference);
            LocalStepExecutor local(functions, nullptr);
            ex = execute(dag, plan, {{"remote", &remote}, {"local", &local}});
            report.remote_evaluations = service.evaluations();
            report.remote_cache_hits = service.cache_hits();
        } else {
            if (datasets.size() != 1) fail(ErrorCode::UnsupportedNode, "a query must read exactly one dataset");
            const DatasetEntry& entry = registry.find(*datasets.begin());
            const EventTable table = ingest(entry.events, DatasetSchema::load(entry.schema));
            LocalStepExecutor local(functions, &table);
            ex = execute(dag, plan, {{"local", &local}});
        }
        report.plan = dump(dag, plan, &ex.boundary_sizes);
        const JaggedArray& result = ex.roots.at(0);
        if (options.histogram) {
            const HistogramSpec& h = *options.histogram;
            report.output = histogram_csv(histogram(flat_values(result), h.bins, h.lo, h.hi));
        } else {
            report.output = column_text(result);
        }
        return 0;
    });
    return report;
}

}  // namespace jagq
