#pragma once

#include "msim/app.hpp"
#include "msim/blockdist.hpp"
#include "msim/cost_model.hpp"
#include "msim/method.hpp"
#include "msim/metrics.hpp"
#include "msim/runtime.hpp"
#include "msim/topology.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace msim {

enum class DataCategory {
    Constant, ///< never written during execution; may move in the background
    Variable, ///< written every iteration; must move while the application is stopped
};

struct DataDescriptor {
    Index elements = 0;
    DataCategory category = DataCategory::Constant;
    std::size_t element_width = 8;
};

/// Per-rank position in the background one-sided redistribution. Paths by role:
///   DrainOnly:  Reading -> AwaitBarrier -> Freeing -> Done
///   SourceOnly: BarrierSignaled -> Freeing -> Done
///   Both:       AwaitOwnReads -> BarrierSignaled -> Unlocking -> Freeing -> Done
enum class Phase { Init, Reading, AwaitOwnReads, BarrierSignaled, AwaitBarrier, Unlocking, Freeing, Done };

std::string_view to_string(Phase p);

/// Everything the ranks of one redistribution share: the plan, the block
/// layouts, and every rank's old and new data buffers.
struct RedistShared {
    ReconfigPlan plan;
    DataDescriptor data;
    Communicator world;
    std::vector<BlockRange> source_ranges;
    std::vector<BlockRange> drain_ranges;
    std::vector<std::vector<std::byte>> old_blocks; ///< by rank; empty for drain-only ranks
    std::vector<std::vector<std::byte>> new_blocks; ///< by rank; empty for source-only ranks
    std::string tag = "redist";

    /// Lays out the block distributions and fills the sources' old blocks from `global`.
    RedistShared(ReconfigPlan plan, DataDescriptor data, Communicator world,
                 std::span<const std::byte> global);

    ReadPlan read_plan(int rank) const;
    SendPlan send_plan(int rank) const;
    /// The exchange arguments of `rank` for the collective method.
    AlltoallvArgs alltoallv_args(int rank);
    /// Concatenation of the drains' new blocks in rank order.
    std::vector<std::byte> reassemble() const;
};

struct RedistState {
    Role role = Role::Both;
    Method method = Method::RmaLock;
    Phase phase = Phase::Init;
    std::optional<WindowId> window;
    ReadPlan plan;
    std::vector<RequestId> reads;
    std::optional<RequestId> barrier;
    int epochs = 0;     ///< lock / lock_all epochs opened by this rank
    int iterations = 0; ///< application iterations run while polling
};

/// How a background iteration runs: `slowdown` stretches its compute time and
/// `background` names the rank's auxiliary stream, if one is transferring.
struct IterationMode {
    double slowdown = 1.0;
    std::optional<StreamId> background;
};

/// One application iteration on the calling stream; supplied by the driver.
using ComputeStep = std::function<Task<void>(Context, IterationMode)>;

/// Blocking one-sided redistribution for one rank: window creation, the
/// method's lock/get/unlock pattern if the rank is a drain, window free.
Task<void> rma_blocking(Context ctx, RedistShared* shared, Method method);

/// Blocking all-to-all-v redistribution for one rank.
Task<void> collective_blocking(Context ctx, RedistShared* shared);

/// Creates the window and starts this rank's reads (drain-only ranks with
/// blocking gets, surviving ranks with request-based gets). Source-only ranks
/// signal the completion barrier straight away.
Task<RedistState> init_rma(Context ctx, RedistShared* shared, Method method);

/// Advances `state` by one transition. Polling phases test once and, if the
/// awaited operation is still pending, run one application iteration.
Task<void> complete_rma_step(Context ctx, RedistShared* shared, RedistState* state,
                             ComputeStep compute);

/// Runs `method` x `strategy` for one rank from the redistribution start to
/// Done. `compute` is the rank's application iteration; drain-only ranks
/// never call it. For one-sided Wait Drains the final state is stored in `out`.
Task<void> redistribute_rank(Context ctx, RedistShared* shared, Method method, Strategy strategy,
                             ComputeStep compute, double oversubscription,
                             RedistState* out = nullptr);

/// Full description of one simulated reconfiguration.
struct ReconfigSpec {
    int ns = 2;
    int nd = 4;
    Method method = Method::Collective;
    Strategy strategy = Strategy::Blocking;
    DataDescriptor data{65536};
    AppConfig app;
    CostModel cost;
    std::uint64_t seed = 0;
    bool collective_blocks_background = false;
};

/// Rejects ineligible method/strategy pairs and background transfers of
/// variable data with ConfigError.
void check_spec(const ReconfigSpec& spec);

struct ReconfigOutcome {
    RunRecord record;
    std::vector<TraceEvent> trace;
    std::vector<std::byte> source_data; ///< the original global array
    std::vector<std::byte> drain_data;  ///< drains' blocks concatenated in rank order
    std::vector<RedistState> states;    ///< final Wait Drains states by rank (one-sided methods)
};

/// Simulates NS ranks iterating, the Merge resize, the redistribution and the
/// ND ranks resuming. Throws ConfigError, ProtocolError or DeadlockError.
ReconfigOutcome simulate_reconfiguration(const ReconfigSpec& spec);

RunRecord run_reconfiguration(const ReconfigSpec& spec);

/// Collective redistribution of `data` for an ns -> nd resize.
RunRecord redistribute_collective(int ns, int nd, DataDescriptor data, Strategy strategy,
                                  const AppConfig& app = {}, const CostModel& cost = {},
                                  std::uint64_t seed = 0);

/// Blocking one-sided redistribution of `data` for an ns -> nd resize.
RunRecord rma_redistribute(int ns, int nd, DataDescriptor data, Method method,
                           const AppConfig& app = {}, const CostModel& cost = {},
                           std::uint64_t seed = 0);

/// Deterministic payload: N elements of `width` bytes derived from `seed`.
std::vector<std::byte> make_payload(Index elements, std::size_t width, std::uint64_t seed);

/// Derives RunRecord measurements from a finished trace.
RunRecord measure(const ReconfigSpec& spec, const std::vector<TraceEvent>& trace);

} // namespace msim
