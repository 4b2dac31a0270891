// Command-line entry point: synthetic data generation and query execution.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "jagq/dataset.hpp"
#include "jagq/runner.hpp"

namespace {

constexpr int kUsageOrIo = 1;

int stage_exit(jagq::Stage stage) {
    switch (stage) {
        case jagq::Stage::Parse: return 2;
        case jagq::Stage::Plan: return 3;
        case jagq::Stage::Execute: return 4;
    }
    return kUsageOrIo;
}

std::string_view stage_name(jagq::Stage stage) {
    switch (stage) {
        case jagq::Stage::Parse: return "parse";
        case jagq::Stage::Plan: return "plan";
        case jagq::Stage::Execute: return "execute";
    }
    return "?";
}

std::filesystem::path default_cache_dir() {
    if (const char* env = std::getenv("JQ_CACHE_DIR"); env && *env) return env;
    return std::filesystem::temp_directory_path() / "jagq-cache";
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        jagq::write_file(out, text);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lazy columnar queries over jagged event data"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::size_t n_events = 1000;
    std::string events_out, labels_out, schema_out;
    auto* gen = app.add_subcommand("generate", "Write a deterministic synthetic event file (pt in MeV)");
    gen->add_option("--seed", seed, "Random seed");
    gen->add_option("--events", n_events, "Number of events");
    gen->add_option("--out", events_out, "Event file (JSON lines)")->required();
    gen->add_option("--labels", labels_out, "Sidecar with the true reco/truth electron pairs");
    gen->add_option("--schema", schema_out, "Write the matching schema file here");

    std::string registry_path, dataset, query_file, query_text, backend = "split", out, cache_dir, range;
    bool plan_only = false, cross_reference = false, hist = false, verbose = false, no_cache = false;
    std::size_t bins = 50;
    auto* run = app.add_subcommand("run", "Plan and execute a query");
    run->add_option("--registry", registry_path, "Dataset registry file")->required();
    run->add_option("--dataset", dataset, "Run against this dataset instead of the one the query names");
    auto* qf = run->add_option("--query", query_file, "File holding the query text");
    auto* qe = run->add_option("--expr", query_text, "Query text");
    qf->excludes(qe);
    run->add_flag("--plan", plan_only, "Print the plan and exit without executing");
    run->add_option("--backend", backend, "all-local or split")->check(CLI::IsMember({"all-local", "split"}));
    run->add_flag("--remote-cross-reference", cross_reference,
                  "Let the remote side filter leaves by masks and broadcast computed values");
    run->add_flag("--hist", hist, "Emit a histogram CSV of the flattened result");
    run->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
    run->add_option("--range", range, "Histogram range LO,HI");
    run->add_option("--out", out, "Output file (default stdout)");
    run->add_option("--cache-dir", cache_dir, "Remote result cache (default $JQ_CACHE_DIR)");
    run->add_flag("--no-cache", no_cache, "Do not read or write the remote result cache");
    run->add_flag("-v,--verbose", verbose, "Print the executed plan and remote counters to stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kUsageOrIo;
    }

    if (gen->parsed()) {
        try {
            const jagq::GeneratedSample sample = jagq::generate(seed, n_events);
            jagq::write_file(events_out, sample.events);
            if (!labels_out.empty()) jagq::write_labels(labels_out, sample.labels);
            if (!schema_out.empty()) jagq::write_file(schema_out, jagq::generated_schema_text());
        } catch (const std::exception& e) {
            std::cerr << "jagq: " << e.what() << '\n';
            return kUsageOrIo;
        }
        return 0;
    }

    jagq::RunOptions options;
    try {
        if (query_file.empty() == query_text.empty()) {
            std::cerr << "jagq: give exactly one of --query or --expr\n";
            return kUsageOrIo;
        }
        options.query = query_file.empty() ? query_text : jagq::read_file(query_file);
        if (!dataset.empty()) options.dataset = dataset;
        options.backends = backend == "all-local" ? jagq::Backends::AllLocal : jagq::Backends::Split;
        options.cross_reference = cross_reference;
        options.plan_only = plan_only;
        if (!no_cache) options.cache_dir = cache_dir.empty() ? default_cache_dir() : std::filesystem::path(cache_dir);
        if (hist) {
            jagq::HistogramSpec h;
            h.bins = bins;
            if (!range.empty()) {
                const auto comma = range.find(',');
                if (comma == std::string::npos) throw std::invalid_argument("--range wants LO,HI");
                h.lo = std::stod(range.substr(0, comma));
                h.hi = std::stod(range.substr(comma + 1));
            }
            if (!(h.lo < h.hi)) throw std::invalid_argument("--range wants LO < HI");
            options.histogram = h;
        }
    } catch (const std::exception& e) {
        std::cerr << "jagq: " << e.what() << '\n';
        return kUsageOrIo;
    }

    jagq::DatasetRegistry registry;
    try {
        registry = jagq::DatasetRegistry::load(registry_path);
    } catch (const std::exception& e) {
        std::cerr << "jagq: " << e.what() << '\n';
        return kUsageOrIo;
    }

    try {
        const jagq::RunReport report = jagq::run_query(registry, options);
        if (plan_only) {
            emit(report.plan, out);
            return 0;
        }
        emit(report.output, out);
        if (verbose) {
            std::cerr << report.plan << "remote evaluations: " << report.remote_evaluations
                      << "\nremote cache hits: " << report.remote_cache_hits << '\n';
        }
    } catch (const jagq::RunError& e) {
        std::cerr << "jagq: " << stage_name(e.stage()) << " error: " << e.what() << '\n';
        return stage_exit(e.stage());
    } catch (const std::exception& e) {
        std::cerr << "jagq: " << e.what() << '\n';
        return kUsageOrIo;
    }
    return 0;
}
