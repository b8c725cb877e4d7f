#include "msim/topology.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace msim {

std::string_view to_string(Role role) {
    switch (role) {
    case Role::SourceOnly: return "source-only";
    case Role::DrainOnly: return "drain-only";
    case Role::Both: return "both";
    }
    return "unknown";
}

ReconfigPlan::ReconfigPlan(int ns, int nd) : ns_(ns), nd_(nd) {
    if (ns < 1 || nd < 1) {
        throw std::invalid_argument("reconfiguration needs ns >= 1 and nd >= 1 (got ns=" +
                                    std::to_string(ns) + ", nd=" + std::to_string(nd) + ")");
    }
    const int survivors = std::min(ns, nd);
    const Role surplus = nd > ns ? Role::DrainOnly : Role::SourceOnly;
    roles_.assign(static_cast<std::size_t>(std::max(ns, nd)), surplus);
    std::fill_n(roles_.begin(), survivors, Role::Both);
}

Role ReconfigPlan::role(int rank) const {
    if (rank < 0 || rank >= world_size()) {
        throw std::invalid_argument("rank " + std::to_string(rank) + " outside reconfiguration of " +
                                    std::to_string(world_size()) + " ranks");
    }
    return roles_[static_cast<std::size_t>(rank)];
}

std::size_t ReconfigPlan::count(Role r) const {
    return static_cast<std::size_t>(std::count(roles_.begin(), roles_.end(), r));
}

ReconfigPlan merge_roles(int ns, int nd) { return ReconfigPlan(ns, nd); }

} // namespace msim
