#pragma once

#include "msim/method.hpp"
#include "msim/time.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

namespace msim {

/// Measurements of one simulated reconfiguration.
struct RunRecord {
    Method method = Method::Collective;
    Strategy strategy = Strategy::Blocking;
    int ns = 0;
    int nd = 0;
    /// First redistribution event to the last rank's Done, global clock.
    SimDuration t_redis{0};
    /// Mean iteration time of the sources before the resize.
    SimDuration t_it_normal{0};
    /// Mean iteration time of iterations overlapping the redistribution
    /// (zero when there are none).
    SimDuration t_it_during{0};
    /// Most iterations any rank completed inside the redistribution.
    int n_it_overlapped = 0;
    /// Mean iteration time on the ND ranks after the resize.
    SimDuration t_it_nd{0};
    std::uint64_t trace_hash = 0;

    bool background() const noexcept { return strategy != Strategy::Blocking; }
    /// t_it_during / t_it_normal, if any iteration overlapped.
    std::optional<double> omega() const;
};

/// Iteration-cost ratio with over without background redistribution.
double omega(double t_it_during, double t_it_normal);

/// Time for a blocking redistribution to reach the iteration the fastest
/// background variant had reached when it finished.
double total_time_blocking(double t_redis_bl, double t_it_nd, double min_n_it);

/// Background redistributions advance the application while they run, so
/// their total is the redistribution time itself.
double total_time_background(double t_redis_bc);

/// Median; the mean of the two middle values for even sizes. Throws on empty input.
double median(std::vector<double> values);

struct GroupKey {
    Method method;
    Strategy strategy;
    int ns;
    int nd;

    friend auto operator<=>(const GroupKey& a, const GroupKey& b) {
        return std::tuple(a.ns, a.nd, a.method, a.strategy) <=>
               std::tuple(b.ns, b.nd, b.method, b.strategy);
    }
    friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

struct ReportRow {
    GroupKey key;
    std::size_t runs = 0;
    double t_redis = 0;            ///< seconds, median
    std::optional<double> omega;   ///< median over runs with overlapped iterations
    double n_it = 0;               ///< median
    double t_it_nd = 0;            ///< seconds, median
    std::optional<double> t_total_bl; ///< blocking rows only
    std::optional<double> t_total_bc; ///< background rows only
};

struct Report {
    std::vector<ReportRow> rows; ///< sorted by (ns, nd, method, strategy)
    std::vector<GroupKey> missing;

    const ReportRow* find(const GroupKey& key) const;
};

struct SummaryOptions {
    /// Let one-sided THREADING variants set the iteration minimum of the
    /// blocking total (they are excluded by default for their large ω).
    bool include_threading_in_min = false;
    /// Groups expected in the report; any without records lands in `missing`.
    std::vector<GroupKey> expected;
};

Report summarize(std::span<const RunRecord> records, const SummaryOptions& options = {});

/// Columns: method,strategy,ns,nd,t_redis,omega,n_it,t_total_bl,t_total_bc.
/// Cells that do not apply to a row are left empty.
void write_csv(std::ostream& os, const Report& report);
/// One JSON object per row, same fields as the CSV.
void write_jsonl(std::ostream& os, const Report& report);

} // namespace msim
