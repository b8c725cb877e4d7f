#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace msim {

/// Data redistribution method.
enum class Method {
    Collective, ///< all-to-all-v
    RmaLock,    ///< one shared lock epoch per source window
    RmaLockAll, ///< a single lock_all epoch over every window
};

/// How the redistribution is overlapped with the application.
enum class Strategy {
    Blocking,
    Threading,   ///< blocking method on an auxiliary stream
    NonBlocking, ///< non-blocking collective polled once per iteration
    WaitDrains,  ///< sources poll a non-blocking barrier the drains join
};

inline constexpr std::array kAllMethods{Method::Collective, Method::RmaLock, Method::RmaLockAll};
inline constexpr std::array kAllStrategies{Strategy::Blocking, Strategy::Threading,
                                           Strategy::NonBlocking, Strategy::WaitDrains};

/// The collective method supports every strategy; the one-sided methods have
/// no non-blocking collective variant.
constexpr bool eligible(Method m, Strategy s) noexcept {
    return m == Method::Collective || s != Strategy::NonBlocking;
}

constexpr bool is_rma(Method m) noexcept { return m != Method::Collective; }

std::string_view to_string(Method m);
std::string_view to_string(Strategy s);

/// Accepts the command-line spellings (`col`, `rma-lock`, `rma-lockall`,
/// `blocking`, `threading`, `nonblocking`, `wait-drains`).
std::optional<Method> parse_method(std::string_view text);
std::optional<Strategy> parse_strategy(std::string_view text);

} // namespace msim
