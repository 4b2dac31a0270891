// Reco-to-truth electron matching written against the C++ API. Prints the
// plan to stderr and a histogram of (truth - reco) pt in GeV to stdout.

#include <iostream>

#include "CLI11.hpp"
#include "jagq/canonical.hpp"
#include "jagq/exec_remote.hpp"
#include "jagq/output.hpp"
#include "jagq/planner.hpp"

using namespace jagq;

int main(int argc, char** argv) {
    CLI::App app{"Electron pt resolution from reco/truth matching"};
    std::string registry_path, dataset = "localds://mc15_13TeV.zee";
    std::size_t bins = 40;
    double lo = -10.0, hi = 10.0;
    bool cross_reference = false;
    app.add_option("--registry", registry_path, "Dataset registry file")->required();
    app.add_option("--dataset", dataset, "Dataset id");
    app.add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
    app.add_option("--lo", lo, "Lower edge in GeV");
    app.add_option("--hi", hi, "Upper edge in GeV");
    app.add_flag("--remote-cross-reference", cross_reference, "Allow cross references on the remote side");
    CLI11_PARSE(app, argc, argv);

    try {
        const DatasetRegistry registry = DatasetRegistry::load(registry_path);
        const FunctionRegistry functions = FunctionRegistry::with_builtins();
        Session s;
        functions.declare_all(s);

        auto ev = s.source(dataset);
        auto eles = ev["Electrons"];
        auto truth = ev["TruthParticles"];
        eles.define("ptgev", [](Expr e) { return e["pt"] / 1000.0; });
        truth.define("ptgev", [](Expr t) { return t["pt"] / 1000.0; });
        auto truth_e = truth.filter([](Expr t) { return (t["pdgId"] == 11) | (t["pdgId"] == -11); });
        eles.define("all", [&](Expr e) {
            return truth_e.filter(
                [&](Expr t) { return s.call("DeltaR", {e["eta"], e["phi"], t["eta"], t["phi"]}) < 0.1; });
        });
        eles.define("has_match", [](Expr e) { return e["all"].count() > 0; });
        eles.define("mc_ptgev", [](Expr e) { return e["all"]["ptgev"].first(); });

        auto good = eles.filter([](Expr e) { return (e["ptgev"] > 20.0) & (abs(e["eta"]) < 1.4); });
        auto matched = good.filter([](Expr e) { return e["has_match"]; });
        const Expr resolution = matched["mc_ptgev"] - matched["ptgev"];

        const Dag dag = canonicalize(s, resolution);
        const Plan plan = cut_boundaries(
            dag, assign(dag, {remote_capability(cross_reference, functions), local_capability(false, functions)}));
        RemoteService service(registry, functions, {});
        RemoteStepExecutor remote(RemoteClient(service), cross_reference);
        LocalStepExecutor local(functions, nullptr);
        const Execution ex = execute(dag, plan, {{"remote", &remote}, {"local", &local}});

        std::cerr << dump(dag, plan, &ex.boundary_sizes);
        std::cout << histogram_csv(histogram(flat_values(ex.roots.at(0)), bins, lo, hi));
    } catch (const std::exception& e) {
        std::cerr << "electron_resolution: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
