#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace msim {

/// Role of a rank during a reconfiguration under the Merge spawn method.
enum class Role {
    SourceOnly, ///< exists before resizing and is removed afterwards
    DrainOnly,  ///< spawned for the new configuration
    Both,       ///< survives the resize: owns old data and receives new data
};

std::string_view to_string(Role role);

/// An NS -> ND reconfiguration. Ranks 0..min(NS,ND)-1 survive (Both); the
/// surplus ranks at the tail are either spawned drains or retiring sources.
class ReconfigPlan {
public:
    /// Throws std::invalid_argument unless ns >= 1 and nd >= 1.
    ReconfigPlan(int ns, int nd);

    int ns() const noexcept { return ns_; }
    int nd() const noexcept { return nd_; }
    int world_size() const noexcept { return static_cast<int>(roles_.size()); }

    Role role(int rank) const;
    const std::vector<Role>& roles() const noexcept { return roles_; }

    bool is_source(int rank) const { return rank >= 0 && rank < ns_; }
    bool is_drain(int rank) const { return rank >= 0 && rank < nd_; }

    std::size_t count(Role role) const;

private:
    int ns_;
    int nd_;
    std::vector<Role> roles_;
};

/// Assigns Merge-method roles for an ns -> nd resize.
ReconfigPlan merge_roles(int ns, int nd);

} // namespace msim
