#include <doctest.h>

#include "msim/blockdist.hpp"

#include <random>
#include <stdexcept>
#include <vector>

using namespace msim;

TEST_CASE("block_range: remainder-first blocks") {
    CHECK(block_range(0, 4, 10) == BlockRange{0, 3});
    CHECK(block_range(1, 4, 10) == BlockRange{3, 6});
    CHECK(block_range(2, 4, 10) == BlockRange{6, 8});
    CHECK(block_range(3, 4, 10) == BlockRange{8, 10});
    CHECK(block_range(0, 1, 7) == BlockRange{0, 7});
    CHECK(block_range(5, 8, 3) == BlockRange{3, 3});
}

TEST_CASE("block_range: argument checks") {
    CHECK_THROWS_AS(block_range(4, 4, 10), std::invalid_argument);
    CHECK_THROWS_AS(block_range(-1, 4, 10), std::invalid_argument);
    CHECK_THROWS_AS(block_range(0, 0, 10), std::invalid_argument);
}

TEST_CASE("block_range: partition property") {
    for (int p = 1; p <= 40; ++p) {
        for (Index n : {0, 1, 7, 39, 40, 41, 1000}) {
            Index next = 0;
            Index smallest = n;
            Index largest = 0;
            for (int r = 0; r < p; ++r) {
                const auto b = block_range(r, p, n);
                CHECK(b.ini == next);
                next = b.end;
                smallest = std::min(smallest, b.size());
                largest = std::max(largest, b.size());
            }
            CHECK(next == n);
            CHECK(largest - smallest <= 1);
        }
    }
}

TEST_CASE("compute_read_plan: drain inside the first source") {
    const std::vector<BlockRange> sources{{0, 4}, {4, 8}};
    const auto plan = compute_read_plan({2, 4}, sources);
    CHECK(plan.counts == std::vector<Index>{2, 0});
    CHECK(plan.displs == std::vector<Index>{0, 2, 2});
    CHECK(plan.first_source == 0);
    CHECK(plan.last_source == 1);
    CHECK(plan.first_index == 2);
    CHECK(plan == oracle_plan({2, 4}, sources));
}

TEST_CASE("compute_read_plan: identity redistribution") {
    const std::vector<BlockRange> sources{{0, 3}, {3, 6}, {6, 9}};
    const auto plan = compute_read_plan({3, 6}, sources);
    CHECK(plan.counts == std::vector<Index>{0, 3, 0});
    CHECK(plan.displs == std::vector<Index>{0, 0, 3, 3});
    CHECK(plan.first_source == 1);
    CHECK(plan.last_source == 2);
    CHECK(plan.first_index == 0);
    CHECK(plan == oracle_plan({3, 6}, sources));
}

TEST_CASE("compute_read_plan: range spanning the final source keeps an exclusive bound") {
    const std::vector<BlockRange> sources{{0, 4}, {4, 8}};
    const auto plan = compute_read_plan({2, 8}, sources);
    CHECK(plan.counts == std::vector<Index>{2, 4});
    CHECK(plan.first_source == 0);
    CHECK(plan.last_source == 2);
    CHECK(plan.first_index == 2);
}

TEST_CASE("compute_read_plan: empty drain range") {
    const std::vector<BlockRange> sources{{0, 2}, {2, 4}};
    const auto plan = compute_read_plan({2, 2}, sources);
    CHECK(plan.counts == std::vector<Index>{0, 0});
    CHECK(plan.total() == 0);
    CHECK(plan.first_source == 0);
    CHECK(plan.last_source == 0);
    CHECK(plan == oracle_plan({2, 2}, sources));
}

TEST_CASE("compute_read_plan: trailing empty source blocks are not read") {
    const auto sources = block_partition(4, 2); // [0,1) [1,2) [2,2) [2,2)
    const auto plan = compute_read_plan({0, 2}, sources);
    CHECK(plan.counts == std::vector<Index>{1, 1, 0, 0});
    CHECK(plan.last_source == 2);
    CHECK(plan == oracle_plan({0, 2}, sources));
}

TEST_CASE("compute_read_plan: malformed partitions") {
    const std::vector<BlockRange> gap{{0, 2}, {3, 5}};
    CHECK_THROWS_AS(compute_read_plan({0, 1}, gap), std::invalid_argument);
    const std::vector<BlockRange> offset{{1, 3}, {3, 5}};
    CHECK_THROWS_AS(compute_read_plan({1, 2}, offset), std::invalid_argument);
    const std::vector<BlockRange> ok{{0, 2}, {2, 4}};
    CHECK_THROWS_AS(compute_read_plan({3, 6}, ok), std::invalid_argument);
    CHECK_THROWS_AS(compute_read_plan({0, 1}, std::vector<BlockRange>{}), std::invalid_argument);
    CHECK_THROWS_AS(oracle_plan({0, 1}, gap), std::invalid_argument);
}

TEST_CASE("compute_send_plan") {
    SUBCASE("source split over three drains") {
        const std::vector<BlockRange> drains{{0, 2}, {2, 4}, {4, 6}};
        const auto plan = compute_send_plan({0, 4}, drains);
        CHECK(plan.counts == std::vector<Index>{2, 2, 0});
        CHECK(plan.displs == std::vector<Index>{0, 2, 4, 4});
        CHECK(plan.first_drain == 0);
        CHECK(plan.last_drain == 2);
    }
    SUBCASE("source equals one drain") {
        const std::vector<BlockRange> drains{{0, 3}, {3, 6}};
        const auto plan = compute_send_plan({3, 6}, drains);
        CHECK(plan.counts == std::vector<Index>{0, 3});
    }
    SUBCASE("single source feeds every drain") {
        const auto drains = block_partition(5, 23);
        const auto plan = compute_send_plan({0, 23}, drains);
        for (std::size_t d = 0; d < drains.size(); ++d) {
            CHECK(plan.counts[d] == drains[d].size());
        }
    }
}

TEST_CASE("oracle equivalence and transpose property on random instances") {
    std::mt19937_64 rng(0x5eed);
    std::uniform_int_distribution<int> ranks(1, 64);
    std::uniform_int_distribution<Index> sizes(0, 20000);
    int mismatches = 0;
    for (int instance = 0; instance < 300; ++instance) {
        const int ns = ranks(rng);
        const int nd = ranks(rng);
        const Index n = sizes(rng);
        const auto src = block_partition(ns, n);
        const auto dst = block_partition(nd, n);
        std::vector<std::vector<Index>> from_reads(static_cast<std::size_t>(ns),
                                                   std::vector<Index>(static_cast<std::size_t>(nd)));
        Index total = 0;
        for (int d = 0; d < nd; ++d) {
            const auto plan = compute_read_plan(dst[static_cast<std::size_t>(d)], src);
            mismatches += plan != oracle_plan(dst[static_cast<std::size_t>(d)], src);
            for (int s = 0; s < ns; ++s) {
                from_reads[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)] =
                    plan.counts[static_cast<std::size_t>(s)];
            }
            total += plan.total();
        }
        CHECK(total == n);
        for (int s = 0; s < ns; ++s) {
            const auto send = compute_send_plan(src[static_cast<std::size_t>(s)], dst);
            CHECK(send.counts == from_reads[static_cast<std::size_t>(s)]);
        }
    }
    CHECK(mismatches == 0);
}
