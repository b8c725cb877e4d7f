#include <doctest.h>

#include "msim/topology.hpp"

#include <algorithm>
#include <stdexcept>

using namespace msim;

TEST_CASE("merge_roles: identity resize keeps every rank as both") {
    const auto plan = merge_roles(4, 4);
    CHECK(plan.world_size() == 4);
    CHECK(plan.count(Role::Both) == 4);
    CHECK(plan.count(Role::SourceOnly) == 0);
    CHECK(plan.count(Role::DrainOnly) == 0);
}

TEST_CASE("merge_roles: expansion appends drain-only ranks") {
    const auto plan = merge_roles(2, 4);
    REQUIRE(plan.world_size() == 4);
    CHECK(plan.role(0) == Role::Both);
    CHECK(plan.role(1) == Role::Both);
    CHECK(plan.role(2) == Role::DrainOnly);
    CHECK(plan.role(3) == Role::DrainOnly);
    CHECK(plan.is_drain(3));
    CHECK_FALSE(plan.is_source(3));
}

TEST_CASE("merge_roles: shrink retires the tail") {
    const auto plan = merge_roles(8, 2);
    REQUIRE(plan.world_size() == 8);
    CHECK(plan.role(0) == Role::Both);
    CHECK(plan.role(1) == Role::Both);
    for (int r = 2; r < 8; ++r) {
        CHECK(plan.role(r) == Role::SourceOnly);
    }
}

TEST_CASE("merge_roles: invalid counts") {
    CHECK_THROWS_AS(merge_roles(0, 4), std::invalid_argument);
    CHECK_THROWS_AS(merge_roles(4, 0), std::invalid_argument);
    CHECK_THROWS_AS(merge_roles(-1, 2), std::invalid_argument);
    CHECK_THROWS_AS(merge_roles(2, 2).role(2), std::invalid_argument);
}

TEST_CASE("merge_roles: role counts over a grid") {
    for (int ns = 1; ns <= 20; ++ns) {
        for (int nd = 1; nd <= 20; ++nd) {
            const auto plan = merge_roles(ns, nd);
            CHECK(plan.world_size() == std::max(ns, nd));
            CHECK(plan.count(Role::Both) == static_cast<std::size_t>(std::min(ns, nd)));
            CHECK(plan.count(Role::DrainOnly) == static_cast<std::size_t>(std::max(0, nd - ns)));
            CHECK(plan.count(Role::SourceOnly) == static_cast<std::size_t>(std::max(0, ns - nd)));
            // Survivors occupy the low ranks.
            for (int r = 0; r < std::min(ns, nd); ++r) {
                CHECK(plan.role(r) == Role::Both);
            }
        }
    }
}
