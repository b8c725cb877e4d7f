#pragma once

#include "msim/blockdist.hpp"
#include "msim/cost_model.hpp"
#include "msim/task.hpp"
#include "msim/time.hpp"
#include "msim/trace.hpp"

#include <coroutine>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace msim {

enum class WindowId : std::uint32_t {};
enum class RequestId : std::uint32_t {};
enum class StreamId : std::uint32_t {};

/// Lock assertions are accepted for fidelity with the passive-target API and
/// have no semantic effect in the simulator.
enum class LockAssert { None, NoCheck };

/// An ordered group of world ranks. Collective and RMA target arguments are
/// indices into `ranks`.
struct Communicator {
    int id = -1;
    std::vector<int> ranks;

    int size() const noexcept { return static_cast<int>(ranks.size()); }
    /// Index of `world_rank`, or -1 if it is not a member.
    int index_of(int world_rank) const noexcept;
};

/// Per-rank arguments of an all-to-all-v exchange. Counts and displacements
/// are in elements and indexed by communicator rank.
struct AlltoallvArgs {
    std::span<const std::byte> send;
    std::vector<Index> send_counts;
    std::vector<Index> send_displs;
    std::span<std::byte> recv;
    std::vector<Index> recv_counts;
    std::vector<Index> recv_displs;
    std::size_t element_width = 8;
};

struct RuntimeOptions {
    std::uint64_t seed = 0;
    /// Abort runs that exceed this many events (runaway loops).
    std::uint64_t max_events = 50'000'000;
    /// Application collectives wait for the rank's auxiliary stream to finish
    /// (reproduces an MPI implementation that serializes them).
    bool collective_blocks_background = false;
};

class Runtime;

/// Handle through which one logical execution stream of a rank issues
/// primitives. Cheap to copy; valid while its Runtime lives.
class Context {
public:
    Context() = default;
    Context(Runtime* rt, StreamId id) : rt_(rt), id_(id) {}

    int rank() const;
    StreamKind stream() const;
    StreamId id() const noexcept { return id_; }
    SimTime now() const;
    Runtime& runtime() const noexcept { return *rt_; }
    const CostModel& cost() const;

    /// Occupies the stream for `d` and records a compute event.
    Task<void> compute(SimDuration d, std::string detail = {});
    /// Occupies the stream for `d` without tracing.
    Task<void> sleep(SimDuration d);
    /// Appends a marker record to the trace.
    void mark(EventKind kind, std::string detail = {});

    Task<WindowId> win_create(const Communicator& comm, std::string tag,
                              std::span<const std::byte> exposed, std::size_t element_width);
    Task<void> win_free(WindowId win);

    Task<void> lock(WindowId win, int target, LockAssert assert = LockAssert::None);
    Task<void> unlock(WindowId win, int target);
    Task<void> lock_all(WindowId win, LockAssert assert = LockAssert::None);
    Task<void> unlock_all(WindowId win);

    /// Reads `count` elements at `remote_offset` of target's window into
    /// `local` at `local_offset`. Completes no later than the closing unlock.
    void get(WindowId win, int target, Index remote_offset, std::span<std::byte> local,
             Index local_offset, Index count);
    /// As get, but completion is observable through the returned request.
    RequestId rget(WindowId win, int target, Index remote_offset, std::span<std::byte> local,
                   Index local_offset, Index count);

    Task<bool> test(RequestId req);
    Task<bool> testall(std::span<const RequestId> reqs);
    Task<void> wait(RequestId req);
    Task<void> waitall(std::span<const RequestId> reqs);
    /// Invalidates the handle; later test/wait on it is a protocol error.
    void request_free(RequestId req);

    RequestId ibarrier(const Communicator& comm, std::string tag);
    Task<void> barrier(const Communicator& comm, std::string tag);

    Task<void> alltoallv(const Communicator& comm, std::string tag, AlltoallvArgs args);
    RequestId ialltoallv(const Communicator& comm, std::string tag, AlltoallvArgs args);

    /// Starts a second stream on this rank (the "auxiliary thread").
    template <class F>
    StreamId spawn_aux(F&& body);
    bool finished(StreamId other) const;
    /// Blocks until `other` has run to completion.
    Task<void> join(StreamId other);

private:
    Runtime* rt_ = nullptr;
    StreamId id_{};
};

/// Deterministic single-threaded discrete-event runtime. Every stream is a
/// coroutine; events are ordered by (virtual time, insertion sequence), so a
/// run is a pure function of the inputs and the seed.
class Runtime {
public:
    explicit Runtime(CostModel cost = {}, RuntimeOptions options = {});
    ~Runtime();
    Runtime(const Runtime&) = delete;
    Runtime& operator=(const Runtime&) = delete;

    const CostModel& cost() const noexcept { return cost_; }
    const RuntimeOptions& options() const noexcept { return options_; }
    SimTime now() const noexcept { return now_; }
    std::mt19937_64& rng() noexcept { return rng_; }

    Communicator communicator(std::vector<int> world_ranks);

    /// Creates a stream on `rank` and schedules `make(ctx)` to start at `at`.
    template <class F>
    StreamId spawn(int rank, StreamKind kind, F&& make, SimTime at = kTimeZero) {
        const auto id = add_stream(rank, kind);
        launch(id, std::forward<F>(make)(Context{this, id}), std::max(at, now_));
        return id;
    }

    /// Runs until no events remain. Rethrows the first stream failure and
    /// throws DeadlockError if any stream is left blocked.
    void run();

    const std::vector<TraceEvent>& trace() const noexcept { return trace_; }
    std::uint64_t trace_hash() const { return msim::trace_hash(trace_); }

    int stream_rank(StreamId id) const;
    StreamKind stream_kind(StreamId id) const;
    bool stream_finished(StreamId id) const;
    SimTime stream_clock(StreamId id) const;
    std::size_t stream_count() const noexcept { return streams_.size(); }

    bool window_freed(WindowId id) const;
    std::size_t events_executed() const noexcept { return executed_; }

private:
    friend class Context;

    enum class CollectiveKind { WinCreate, WinFree, Ibarrier, Alltoallv };

    struct Stream {
        int rank = -1;
        StreamKind kind = StreamKind::Main;
        Task<void> root;
        std::coroutine_handle<> parked;
        std::string blocked_on;
        std::vector<StreamId> joiners;
        SimTime clock{};
        bool finished = false;
    };

    struct Transfer {
        SimTime done_at{};
        std::span<const std::byte> source;
        std::span<std::byte> dest;
        bool applied = false;
    };

    struct Epoch {
        bool all = false;
        std::set<int> targets;
        std::map<int, std::vector<std::size_t>> by_target; // outstanding transfers per target
    };

    struct Window {
        Communicator comm;
        std::string tag;
        std::size_t width = 8;
        std::vector<std::span<const std::byte>> exposed;
        std::map<int, Epoch> epochs; // keyed by origin world rank
        std::vector<std::size_t> transfers;
        bool created = false;
        bool freed = false;
    };

    struct Request {
        EventKind kind = EventKind::Rget;
        int owner = -1;
        std::optional<SimTime> done_at;
        std::vector<std::size_t> transfers;
        std::vector<StreamId> waiters;
        bool released = false;
    };

    struct Arrival {
        StreamId stream{};
        SimTime at{};
        std::optional<RequestId> request;
        std::span<const std::byte> exposed;
        std::size_t width = 8;
        AlltoallvArgs a2a;
    };

    struct Collective {
        CollectiveKind kind{};
        Communicator comm;
        std::string tag;
        std::map<int, Arrival> arrivals; // by communicator index
        std::optional<SimTime> done_at;
        std::optional<WindowId> window;
    };

    struct Event {
        SimTime at;
        std::uint64_t seq;
        std::function<void()> action;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return std::tie(a.at, a.seq) > std::tie(b.at, b.seq);
        }
    };

    // Suspends the current stream until wake() is called for it.
    struct Park {
        Runtime* rt;
        StreamId id;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h) noexcept;
        void await_resume() const noexcept {}
    };

    StreamId add_stream(int rank, StreamKind kind);
    void launch(StreamId id, Task<void> task, SimTime at);
    void schedule(SimTime at, std::function<void()> action);
    void wake(StreamId id, SimTime at);
    void resume(StreamId id);
    Park park(StreamId id, std::string reason);

    Stream& stream(StreamId id);
    const Stream& stream(StreamId id) const;
    Window& window(WindowId id, const char* op);
    Request& request(RequestId id, const char* op);

    void record(StreamId id, EventKind kind, std::string detail = {}, int peer = -1,
                std::int64_t count = 0, SimDuration duration = SimDuration::zero(),
                bool flag = false);

    Collective& arrive(CollectiveKind kind, const Communicator& comm, const std::string& tag,
                       StreamId who, Arrival arrival, const char* what);
    bool complete(const Collective& c) const;

    RequestId new_request(EventKind kind, int owner);
    void set_request_done(RequestId id, SimTime at);
    bool request_ready(Request& r);
    void apply(std::size_t transfer);

    std::size_t issue_get(StreamId who, WindowId win, int target, Index remote_offset,
                          std::span<std::byte> local, Index local_offset, Index count,
                          EventKind kind);

    std::vector<std::size_t> finish_alltoallv(Collective& c);

    CostModel cost_;
    RuntimeOptions options_;
    std::mt19937_64 rng_;
    SimTime now_{};
    std::uint64_t seq_ = 0;
    std::uint64_t executed_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::vector<Stream> streams_;
    std::vector<Window> windows_;
    std::vector<Request> requests_;
    std::vector<Transfer> transfers_;
    std::map<std::tuple<int, int, std::string>, Collective> collectives_;
    std::vector<Communicator> comms_;
    std::vector<TraceEvent> trace_;
    std::exception_ptr failure_;
    std::optional<StreamId> failed_stream_;
};

template <class F>
StreamId Context::spawn_aux(F&& body) {
    return rt_->spawn(rank(), StreamKind::Aux, std::forward<F>(body), rt_->now());
}

} // namespace msim
