#pragma once

#include "msim/time.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace msim {

enum class StreamKind { Main, Aux };

enum class EventKind {
    Start,
    Spawn,
    Compute,
    Sync,
    WinCreate,
    WinFree,
    Lock,
    Unlock,
    LockAll,
    UnlockAll,
    Get,
    Rget,
    Test,
    Testall,
    Wait,
    Ibarrier,
    Barrier,
    Alltoallv,
    Ialltoallv,
    Join,
    Phase,
    RedistBegin,
    Done,
    Finish,
};

std::string_view to_string(StreamKind kind);
std::string_view to_string(EventKind kind);

/// Whether the primitive can hold the calling stream for longer than its own
/// fixed cost (waiting on other ranks or on outstanding transfers).
bool is_blocking(EventKind kind);

struct TraceEvent {
    SimTime time;
    int rank = -1;
    StreamKind stream = StreamKind::Main;
    EventKind kind = EventKind::Start;
    int peer = -1;
    std::int64_t count = 0;
    SimDuration duration{0};
    bool flag = false; ///< result of test/testall
    std::string detail;
};

/// One line: `<ns> <rank> <stream> <kind> [peer=..] [count=..] [dur=..] [result=..] [detail]`.
std::string format_event(const TraceEvent& e);

void write_trace(std::ostream& os, const std::vector<TraceEvent>& events);

/// FNV-1a over the formatted trace lines.
std::uint64_t trace_hash(const std::vector<TraceEvent>& events);

} // namespace msim
