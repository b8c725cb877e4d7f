#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace msim {

using Index = std::int64_t;

/// Half-open element range [ini, end) owned by one rank.
struct BlockRange {
    Index ini = 0;
    Index end = 0;

    Index size() const noexcept { return end - ini; }
    bool empty() const noexcept { return end == ini; }
    bool contains(Index i) const noexcept { return i >= ini && i < end; }

    friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

/// What a drain reads from each source window.
///
/// counts[i] elements are read from source i starting at first_index for
/// i == first_source and at 0 for later sources, and written at displs[i] in
/// the drain's new block. last_source is exclusive.
struct ReadPlan {
    std::vector<Index> counts;
    std::vector<Index> displs;
    int first_source = 0;
    int last_source = 0;
    Index first_index = 0;

    Index total() const noexcept { return displs.empty() ? 0 : displs.back(); }
    int epochs() const noexcept { return last_source - first_source; }

    friend bool operator==(const ReadPlan&, const ReadPlan&) = default;
};

/// Source-side mirror of ReadPlan: counts[d] elements of the source block,
/// starting at local offset displs[d], belong to drain d.
struct SendPlan {
    std::vector<Index> counts;
    std::vector<Index> displs;
    int first_drain = 0;
    int last_drain = 0;

    Index total() const noexcept { return displs.empty() ? 0 : displs.back(); }

    friend bool operator==(const SendPlan&, const SendPlan&) = default;
};

/// Balanced contiguous block of `rank` among `p` ranks over `n` elements;
/// the first n mod p ranks receive one extra element.
BlockRange block_range(int rank, int p, Index n);

/// block_range for every rank 0..p-1.
std::vector<BlockRange> block_partition(int p, Index n);

/// Intersects a drain range with a contiguous source partition.
ReadPlan compute_read_plan(const BlockRange& my_range, std::span<const BlockRange> source_ranges);

/// Intersects a source range with a contiguous drain partition.
SendPlan compute_send_plan(const BlockRange& my_range, std::span<const BlockRange> drain_ranges);

/// Element-by-element reference for compute_read_plan. Quadratic-ish and only
/// meant for validation.
ReadPlan oracle_plan(const BlockRange& my_range, std::span<const BlockRange> source_ranges);

} // namespace msim
