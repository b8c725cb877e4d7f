#include "msim/trace.hpp"

#include <ostream>

namespace msim {

std::string_view to_string(StreamKind kind) {
    return kind == StreamKind::Main ? "main" : "aux";
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::Start: return "start";
    case EventKind::Spawn: return "spawn";
    case EventKind::Compute: return "compute";
    case EventKind::Sync: return "sync";
    case EventKind::WinCreate: return "win_create";
    case EventKind::WinFree: return "win_free";
    case EventKind::Lock: return "lock";
    case EventKind::Unlock: return "unlock";
    case EventKind::LockAll: return "lock_all";
    case EventKind::UnlockAll: return "unlock_all";
    case EventKind::Get: return "get";
    case EventKind::Rget: return "rget";
    case EventKind::Test: return "test";
    case EventKind::Testall: return "testall";
    case EventKind::Wait: return "wait";
    case EventKind::Ibarrier: return "ibarrier";
    case EventKind::Barrier: return "barrier";
    case EventKind::Alltoallv: return "alltoallv";
    case EventKind::Ialltoallv: return "ialltoallv";
    case EventKind::Join: return "join";
    case EventKind::Phase: return "phase";
    case EventKind::RedistBegin: return "redist_begin";
    case EventKind::Done: return "done";
    case EventKind::Finish: return "finish";
    }
    return "unknown";
}

bool is_blocking(EventKind kind) {
    switch (kind) {
    case EventKind::WinCreate:
    case EventKind::WinFree:
    case EventKind::Unlock:
    case EventKind::UnlockAll:
    case EventKind::Wait:
    case EventKind::Barrier:
    case EventKind::Alltoallv:
    case EventKind::Join:
    case EventKind::Spawn:
        return true;
    default:
        return false;
    }
}

std::string format_event(const TraceEvent& e) {
    std::string line = std::to_string(e.time.time_since_epoch().count());
    line += ' ';
    line += std::to_string(e.rank);
    line += ' ';
    line += to_string(e.stream);
    line += ' ';
    line += to_string(e.kind);
    if (e.peer >= 0) {
        line += " peer=" + std::to_string(e.peer);
    }
    if (e.count != 0) {
        line += " count=" + std::to_string(e.count);
    }
    if (e.duration != SimDuration::zero()) {
        line += " dur=" + std::to_string(e.duration.count());
    }
    if (e.kind == EventKind::Test || e.kind == EventKind::Testall) {
        line += e.flag ? " result=1" : " result=0";
    }
    if (!e.detail.empty()) {
        line += ' ';
        line += e.detail;
    }
    return line;
}

void write_trace(std::ostream& os, const std::vector<TraceEvent>& events) {
    for (const auto& e : events) {
        os << format_event(e) << '\n';
    }
}

std::uint64_t trace_hash(const std::vector<TraceEvent>& events) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](char c) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    };
    for (const auto& e : events) {
        for (char c : format_event(e)) {
            mix(c);
        }
        mix('\n');
    }
    return h;
}

} // namespace msim
