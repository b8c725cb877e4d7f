#include "msim/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace msim {
namespace {

void require_non_negative(double v, const char* what) {
    if (!(v >= 0.0)) {
        throw std::invalid_argument(std::string(what) + " must be >= 0");
    }
}

std::string number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::to_string(v);
}

std::string cell(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

// Variants whose iteration count may set the blocking total's minimum.
bool counts_for_min(const GroupKey& key, const SummaryOptions& options) {
    if (key.strategy == Strategy::Blocking) {
        return false;
    }
    if (key.strategy == Strategy::Threading && is_rma(key.method)) {
        return options.include_threading_in_min;
    }
    return true;
}

} // namespace

std::optional<double> RunRecord::omega() const {
    if (n_it_overlapped == 0 || t_it_normal <= SimDuration::zero()) {
        return std::nullopt;
    }
    return msim::omega(static_cast<double>(t_it_during.count()),
                       static_cast<double>(t_it_normal.count()));
}

double omega(double t_it_during, double t_it_normal) {
    if (!(t_it_normal > 0.0)) {
        throw std::invalid_argument("omega needs a positive baseline iteration time");
    }
    return t_it_during / t_it_normal;
}

double total_time_blocking(double t_redis_bl, double t_it_nd, double min_n_it) {
    require_non_negative(t_redis_bl, "t_redis_bl");
    require_non_negative(t_it_nd, "t_it_nd");
    require_non_negative(min_n_it, "min_n_it");
    return t_redis_bl + t_it_nd * min_n_it;
}

double total_time_background(double t_redis_bc) {
    require_non_negative(t_redis_bc, "t_redis_bc");
    return t_redis_bc;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw std::invalid_argument("median of an empty set");
    }
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

const ReportRow* Report::find(const GroupKey& key) const {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const ReportRow& r) { return r.key == key; });
    return it == rows.end() ? nullptr : &*it;
}

Report summarize(std::span<const RunRecord> records, const SummaryOptions& options) {
    std::map<GroupKey, std::vector<const RunRecord*>> groups;
    for (const auto& r : records) {
        groups[GroupKey{r.method, r.strategy, r.ns, r.nd}].push_back(&r);
    }

    Report report;
    for (const auto& [key, members] : groups) {
        ReportRow row;
        row.key = key;
        row.runs = members.size();
        std::vector<double> t_redis, n_it, t_it_nd, omegas;
        for (const auto* r : members) {
            t_redis.push_back(to_seconds(r->t_redis));
            n_it.push_back(r->n_it_overlapped);
            t_it_nd.push_back(to_seconds(r->t_it_nd));
            if (auto w = r->omega()) {
                omegas.push_back(*w);
            }
        }
        row.t_redis = median(t_redis);
        row.n_it = median(n_it);
        row.t_it_nd = median(t_it_nd);
        if (!omegas.empty()) {
            row.omega = median(omegas);
        }
        if (key.strategy != Strategy::Blocking) {
            row.t_total_bc = total_time_background(row.t_redis);
        }
        report.rows.push_back(row);
    }

    // Blocking totals use the smallest median iteration count among the
    // background variants of the same (ns, nd).
    for (auto& row : report.rows) {
        if (row.key.strategy != Strategy::Blocking) {
            continue;
        }
        std::optional<double> min_n_it;
        for (const auto& other : report.rows) {
            if (other.key.ns == row.key.ns && other.key.nd == row.key.nd &&
                counts_for_min(other.key, options)) {
                min_n_it = min_n_it ? std::min(*min_n_it, other.n_it) : other.n_it;
            }
        }
        if (min_n_it) {
            row.t_total_bl = total_time_blocking(row.t_redis, row.t_it_nd, *min_n_it);
        }
    }

    for (const auto& key : options.expected) {
        if (!groups.contains(key)) {
            report.missing.push_back(key);
        }
    }
    std::sort(report.missing.begin(), report.missing.end());
    return report;
}

void write_csv(std::ostream& os, const Report& report) {
    os << "method,strategy,ns,nd,t_redis,omega,n_it,t_total_bl,t_total_bc\n";
    for (const auto& r : report.rows) {
        os << to_string(r.key.method) << ',' << to_string(r.key.strategy) << ',' << r.key.ns << ','
           << r.key.nd << ',' << number(r.t_redis) << ',' << cell(r.omega) << ',' << number(r.n_it)
           << ',' << cell(r.t_total_bl) << ',' << cell(r.t_total_bc) << '\n';
    }
}

void write_jsonl(std::ostream& os, const Report& report) {
    auto opt = [](const std::optional<double>& v) -> nlohmann::json {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    for (const auto& r : report.rows) {
        nlohmann::ordered_json j;
        j["method"] = to_string(r.key.method);
        j["strategy"] = to_string(r.key.strategy);
        j["ns"] = r.key.ns;
        j["nd"] = r.key.nd;
        j["runs"] = r.runs;
        j["t_redis"] = r.t_redis;
        j["omega"] = opt(r.omega);
        j["n_it"] = r.n_it;
        j["t_it_nd"] = r.t_it_nd;
        j["t_total_bl"] = opt(r.t_total_bl);
        j["t_total_bc"] = opt(r.t_total_bc);
        os << j.dump() << '\n';
    }
}

} // namespace msim
