#include "msim/blockdist.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace msim {
namespace {

// Checks that `ranges` tiles [0, N) contiguously and that `mine` lies inside.
Index validate_partition(const BlockRange& mine, std::span<const BlockRange> ranges) {
    if (ranges.empty()) {
        throw std::invalid_argument("empty partition");
    }
    Index expected = 0;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const auto& r = ranges[i];
        if (r.ini != expected || r.end < r.ini) {
            throw std::invalid_argument("partition is not contiguous at block " + std::to_string(i));
        }
        expected = r.end;
    }
    if (mine.ini < 0 || mine.end < mine.ini || mine.end > expected) {
        throw std::invalid_argument("range [" + std::to_string(mine.ini) + ", " +
                                    std::to_string(mine.end) + ") outside [0, " +
                                    std::to_string(expected) + ")");
    }
    return expected;
}

struct Intersection {
    std::vector<Index> counts;
    std::vector<Index> displs;
    int first = 0;
    int last = 0;
    Index first_index = 0;
};

// Walks the partition once, stopping at the first non-overlapping block
// after the overlap began. Empty blocks carry no data and are skipped, so
// `last` is one past the final block that actually overlaps.
Intersection intersect(const BlockRange& mine, std::span<const BlockRange> ranges) {
    const auto size = ranges.size();
    Intersection out;
    out.counts.assign(size, 0);
    out.displs.assign(size + 1, 0);
    if (mine.empty()) {
        return out;
    }

    int first = -1;
    int last = -1;
    for (std::size_t i = 0; i < size; ++i) {
        const auto& other = ranges[i];
        if (other.empty()) {
            continue;
        }
        if (mine.ini < other.end && mine.end > other.ini) {
            if (first == -1) {
                first = static_cast<int>(i);
                out.first_index = mine.ini - other.ini;
            }
            const Index big_ini = std::max(mine.ini, other.ini);
            const Index small_end = std::min(mine.end, other.end);
            out.counts[i] = small_end - big_ini;
            last = static_cast<int>(i) + 1;
        } else if (first != -1) {
            break;
        }
    }
    for (std::size_t i = 0; i < size; ++i) {
        out.displs[i + 1] = out.displs[i] + out.counts[i];
    }
    out.first = first;
    out.last = last;
    return out;
}

} // namespace

BlockRange block_range(int rank, int p, Index n) {
    if (p < 1) {
        throw std::invalid_argument("block_range needs p >= 1");
    }
    if (rank < 0 || rank >= p) {
        throw std::invalid_argument("rank " + std::to_string(rank) + " out of range for p=" +
                                    std::to_string(p));
    }
    if (n < 0) {
        throw std::invalid_argument("negative element count");
    }
    const Index base = n / p;
    const Index rem = n % p;
    const Index r = rank;
    const Index ini = r * base + std::min(r, rem);
    return {ini, ini + base + (r < rem ? 1 : 0)};
}

std::vector<BlockRange> block_partition(int p, Index n) {
    std::vector<BlockRange> out;
    out.reserve(static_cast<std::size_t>(std::max(p, 0)));
    for (int r = 0; r < p; ++r) {
        out.push_back(block_range(r, p, n));
    }
    return out;
}

ReadPlan compute_read_plan(const BlockRange& my_range, std::span<const BlockRange> source_ranges) {
    validate_partition(my_range, source_ranges);
    auto hit = intersect(my_range, source_ranges);
    ReadPlan plan;
    plan.counts = std::move(hit.counts);
    plan.displs = std::move(hit.displs);
    if (hit.first >= 0) {
        plan.first_source = hit.first;
        plan.last_source = hit.last;
        plan.first_index = hit.first_index;
    }
    return plan;
}

SendPlan compute_send_plan(const BlockRange& my_range, std::span<const BlockRange> drain_ranges) {
    validate_partition(my_range, drain_ranges);
    auto hit = intersect(my_range, drain_ranges);
    SendPlan plan;
    plan.counts = std::move(hit.counts);
    plan.displs = std::move(hit.displs);
    if (hit.first >= 0) {
        plan.first_drain = hit.first;
        plan.last_drain = hit.last;
    }
    return plan;
}

ReadPlan oracle_plan(const BlockRange& my_range, std::span<const BlockRange> source_ranges) {
    validate_partition(my_range, source_ranges);
    const auto size = source_ranges.size();
    ReadPlan plan;
    plan.counts.assign(size, 0);
    plan.displs.assign(size + 1, 0);

    std::size_t owner = 0;
    bool seen = false;
    for (Index e = my_range.ini; e < my_range.end; ++e) {
        while (!source_ranges[owner].contains(e)) {
            ++owner;
        }
        if (!seen) {
            seen = true;
            plan.first_source = static_cast<int>(owner);
            plan.first_index = e - source_ranges[owner].ini;
        }
        ++plan.counts[owner];
        plan.last_source = static_cast<int>(owner) + 1;
    }
    for (std::size_t i = 0; i < size; ++i) {
        plan.displs[i + 1] = plan.displs[i] + plan.counts[i];
    }
    return plan;
}

} // namespace msim
