#pragma once

#include "msim/runtime.hpp"

#include <optional>
#include <string>
#include <vector>

namespace msim {

/// Synthetic iterative application (a conjugate-gradient stand-in): every
/// iteration is a compute interval, and every `sync_every`-th iteration ends
/// in a global collective.
struct AppConfig {
    /// Seconds one iteration takes on a single rank; p ranks take W/p each.
    double total_work = 0.01;
    int sync_every = 5;
    /// Iterations before (on NS ranks) plus after (on ND ranks) the resize.
    int total_iterations = 20;
    /// Iteration at which the reconfiguration starts.
    int reconfig_iteration = 5;

    SimDuration base_iteration_time(int p) const;
    int iterations_after() const noexcept { return total_iterations - reconfig_iteration; }

    std::vector<std::string> violations() const;
};

/// Where the periodic collective of an iteration goes.
struct SyncScope {
    /// Participants of a real barrier; empty for background iterations, whose
    /// sync is charged locally.
    std::optional<Communicator> comm;
    std::string tag_prefix = "sync";
    /// Auxiliary stream the collective may have to wait for when the runtime
    /// models collectives blocking on background work.
    std::optional<StreamId> background;
};

/// Runs one iteration on the calling stream and returns the compute interval
/// it charged (base_iteration_time(p) x slowdown, with jitter when enabled).
Task<SimDuration> run_iteration(Context ctx, AppConfig app, int p, int iteration, double slowdown,
                                SyncScope sync);

/// `count` consecutive iterations starting at `first`, all at slowdown 1.
Task<void> run_iterations(Context ctx, AppConfig app, int p, int first, int count, SyncScope sync);

} // namespace msim
