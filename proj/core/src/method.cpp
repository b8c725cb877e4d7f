#include "msim/method.hpp"

namespace msim {

std::string_view to_string(Method m) {
    switch (m) {
    case Method::Collective: return "col";
    case Method::RmaLock: return "rma-lock";
    case Method::RmaLockAll: return "rma-lockall";
    }
    return "unknown";
}

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::Blocking: return "blocking";
    case Strategy::Threading: return "threading";
    case Strategy::NonBlocking: return "nonblocking";
    case Strategy::WaitDrains: return "wait-drains";
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view text) {
    for (auto m : kAllMethods) {
        if (text == to_string(m)) {
            return m;
        }
    }
    return std::nullopt;
}

std::optional<Strategy> parse_strategy(std::string_view text) {
    for (auto s : kAllStrategies) {
        if (text == to_string(s)) {
            return s;
        }
    }
    return std::nullopt;
}

} // namespace msim
