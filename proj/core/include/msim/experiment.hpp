#pragma once

#include "msim/app.hpp"
#include "msim/cost_model.hpp"
#include "msim/method.hpp"
#include "msim/metrics.hpp"
#include "msim/redist.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace msim {

struct Variant {
    Method method;
    Strategy strategy;
    friend bool operator==(const Variant&, const Variant&) = default;
};

/// Every eligible method x strategy combination.
std::vector<Variant> all_variants();

/// A matrix of reconfigurations: every ordered pair of distinct rank counts
/// from `ranks`, every variant, `repeats` times each.
struct ExperimentConfig {
    std::vector<int> ranks{2, 4, 8, 16};
    std::vector<Variant> variants = all_variants();
    int repeats = 1;
    Index elements = 65536;
    std::size_t element_width = 8;
    CostModel cost;
    AppConfig app;
    std::uint64_t seed = 0;
    /// Admit ns == nd pairs (testing only).
    bool allow_identity = false;
    /// Run only this (ns, nd) instead of the pairs drawn from `ranks`.
    std::optional<std::pair<int, int>> only_pair;
    bool collective_blocks_background = false;
    bool include_threading_in_min = false;
    /// Worker threads; each run owns its runtime, so results do not depend on it.
    int jobs = 1;

    std::filesystem::path report_path;
    std::filesystem::path jsonl_path;
    std::filesystem::path trace_path;
};

/// "field: rule" for every problem; empty iff the config is runnable.
std::vector<std::string> validate_config(const ExperimentConfig& config);

/// Reads an INI file ([experiment], [cost], [app], [output] sections) over
/// the defaults. Throws ConfigError naming the offending key.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& in);

/// The (ns, nd) pairs the config runs, in rank-set order.
std::vector<std::pair<int, int>> rank_pairs(const ExperimentConfig& config);

struct RunSpec {
    std::size_t index = 0;
    int repeat = 0;
    ReconfigSpec spec;
};

/// Every run in execution order; the seed of run i is derived from (seed, i).
std::vector<RunSpec> expand(const ExperimentConfig& config);

std::uint64_t run_seed(std::uint64_t seed, std::size_t index);

struct MatrixResult {
    std::vector<RunRecord> records; ///< in run order
    Report report;
    std::vector<std::vector<TraceEvent>> traces; ///< in run order, kept only if a trace path is set
};

/// Validates, then executes every run. Throws ConfigError on violations and
/// propagates ProtocolError / DeadlockError from the simulator.
MatrixResult run_matrix(const ExperimentConfig& config);

/// Writes the report, line records and traces to the config's output paths
/// (those that are set).
void write_outputs(const ExperimentConfig& config, const MatrixResult& result);

/// Traces of every run, each preceded by a "# run ..." header line.
void write_traces(std::ostream& os, const std::vector<RunSpec>& runs,
                  const std::vector<std::vector<TraceEvent>>& traces);

} // namespace msim
