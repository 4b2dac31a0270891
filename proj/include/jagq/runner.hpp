#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "jagq/dataset.hpp"
#include "jagq/errors.hpp"
#include "jagq/planner.hpp"

namespace jagq {

enum class Backends { AllLocal, Split };

struct HistogramSpec {
    std::size_t bins = 50;
    double lo = 0.0;
    double hi = 100.0;
};

struct RunOptions {
    std::string query;                    ///< query-language text
    std::optional<std::string> dataset;   ///< replaces the dataset every From() names
    Backends backends = Backends::Split;
    bool cross_reference = false;
    std::filesystem::path cache_dir;      ///< empty: remote results are not cached
    std::optional<HistogramSpec> histogram;
    bool plan_only = false;
};

/// Where a run failed; the CLI turns these into exit codes.
enum class Stage { Parse, Plan, Execute };

class RunError : public std::runtime_error {
public:
    RunError(Stage stage, const Error& cause) : std::runtime_error(cause.what()), stage_(stage), code_(cause.code()) {}
    Stage stage() const noexcept { return stage_; }
    ErrorCode code() const noexcept { return code_; }

private:
    Stage stage_;
    ErrorCode code_;
};

struct RunReport {
    std::string plan;    ///< plan dump; after execution it includes boundary sizes
    std::string output;  ///< column text or histogram CSV; empty for plan_only
    std::uint64_t remote_evaluations = 0;
    std::uint64_t remote_cache_hits = 0;
};

/// Parses, plans and executes one query against `registry`.
RunReport run_query(const DatasetRegistry& registry, const RunOptions& options);

}  // namespace jagq
