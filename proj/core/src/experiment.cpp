#include "msim/experiment.hpp"

#include "msim/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace msim {
namespace {

namespace pt = boost::property_tree;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) {
            out.push_back(item.substr(b, e - b + 1));
        }
    }
    return out;
}

template <class T>
T value(const pt::ptree& node, const std::string& key) {
    try {
        return node.get_value<T>();
    } catch (const pt::ptree_bad_data&) {
        throw ConfigError(key + ": cannot parse '" + node.data() + "'");
    }
}

Method method_value(const std::string& text, const std::string& key) {
    if (auto m = parse_method(text)) {
        return *m;
    }
    throw ConfigError(key + ": unknown method '" + text + "'");
}

Strategy strategy_value(const std::string& text, const std::string& key) {
    if (auto s = parse_strategy(text)) {
        return *s;
    }
    throw ConfigError(key + ": unknown strategy '" + text + "'");
}

// Key handlers per section; each receives the node and its qualified name.
using Setter = std::function<void(const pt::ptree&, const std::string&)>;

std::map<std::string, Setter> setters(ExperimentConfig& c, std::optional<std::vector<Method>>& methods,
                                      std::optional<std::vector<Strategy>>& strategies,
                                      std::optional<int>& ns, std::optional<int>& nd) {
    std::map<std::string, Setter> s;
    auto seconds = [](SimDuration& field) {
        return [&field](const pt::ptree& n, const std::string& k) {
            field = from_seconds(value<double>(n, k));
        };
    };
    auto plain = [](auto& field) {
        return [&field](const pt::ptree& n, const std::string& k) {
            field = value<std::remove_reference_t<decltype(field)>>(n, k);
        };
    };

    s["experiment.ranks"] = [&c](const pt::ptree& n, const std::string& k) {
        c.ranks.clear();
        for (const auto& item : split_list(n.data())) {
            pt::ptree tmp(item);
            c.ranks.push_back(value<int>(tmp, k));
        }
    };
    s["experiment.variants"] = [&c](const pt::ptree& n, const std::string& k) {
        c.variants.clear();
        for (const auto& item : split_list(n.data())) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) {
                throw ConfigError(k + ": expected method:strategy, got '" + item + "'");
            }
            c.variants.push_back({method_value(item.substr(0, colon), k),
                                  strategy_value(item.substr(colon + 1), k)});
        }
    };
    s["experiment.methods"] = [&methods](const pt::ptree& n, const std::string& k) {
        methods.emplace();
        for (const auto& item : split_list(n.data())) {
            methods->push_back(method_value(item, k));
        }
    };
    s["experiment.strategies"] = [&strategies](const pt::ptree& n, const std::string& k) {
        strategies.emplace();
        for (const auto& item : split_list(n.data())) {
            strategies->push_back(strategy_value(item, k));
        }
    };
    s["experiment.ns"] = [&ns](const pt::ptree& n, const std::string& k) { ns = value<int>(n, k); };
    s["experiment.nd"] = [&nd](const pt::ptree& n, const std::string& k) { nd = value<int>(n, k); };
    s["experiment.repeats"] = plain(c.repeats);
    s["experiment.elements"] = plain(c.elements);
    s["experiment.element_width"] = plain(c.element_width);
    s["experiment.seed"] = plain(c.seed);
    s["experiment.allow_identity"] = plain(c.allow_identity);
    s["experiment.collective_blocks_background"] = plain(c.collective_blocks_background);
    s["experiment.include_threading_in_min"] = plain(c.include_threading_in_min);
    s["experiment.jobs"] = plain(c.jobs);

    s["cost.window_create_latency"] = seconds(c.cost.window_create_latency);
    s["cost.window_free_latency"] = seconds(c.cost.window_free_latency);
    s["cost.lock_latency"] = seconds(c.cost.lock_latency);
    s["cost.per_message_latency"] = seconds(c.cost.per_message_latency);
    s["cost.bandwidth"] = plain(c.cost.bandwidth);
    s["cost.barrier_latency"] = seconds(c.cost.barrier_latency);
    s["cost.spawn_latency"] = seconds(c.cost.spawn_latency);
    s["cost.test_cost"] = seconds(c.cost.test_cost);
    s["cost.oversubscription_factor"] = plain(c.cost.oversubscription_factor);
    s["cost.compute_jitter"] = plain(c.cost.compute_jitter);

    s["app.total_work"] = plain(c.app.total_work);
    s["app.sync_every"] = plain(c.app.sync_every);
    s["app.total_iterations"] = plain(c.app.total_iterations);
    s["app.reconfig_iteration"] = plain(c.app.reconfig_iteration);

    auto path = [](std::filesystem::path& field) {
        return [&field](const pt::ptree& n, const std::string&) { field = n.data(); };
    };
    s["output.report"] = path(c.report_path);
    s["output.jsonl"] = path(c.jsonl_path);
    s["output.trace"] = path(c.trace_path);
    return s;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void open_for_write(std::ofstream& os, const std::filesystem::path& path) {
    os.open(path, std::ios::binary);
    if (!os) {
        throw ConfigError("cannot open '" + path.string() + "' for writing");
    }
}

} // namespace

std::vector<Variant> all_variants() {
    std::vector<Variant> out;
    for (auto m : kAllMethods) {
        for (auto s : kAllStrategies) {
            if (eligible(m, s)) {
                out.push_back({m, s});
            }
        }
    }
    return out;
}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
    std::vector<std::string> out;
    if (c.only_pair) {
        const auto [ns, nd] = *c.only_pair;
        if (ns < 1 || nd < 1) {
            out.emplace_back("experiment.ns/nd: must be >= 1");
        } else if (ns == nd && !c.allow_identity) {
            out.emplace_back("experiment.ns/nd: ns == nd needs allow_identity");
        }
    } else {
        if (c.ranks.empty()) {
            out.emplace_back("experiment.ranks: must not be empty");
        }
        if (std::any_of(c.ranks.begin(), c.ranks.end(), [](int r) { return r < 1; })) {
            out.emplace_back("experiment.ranks: every rank count must be >= 1");
        }
        if (std::set<int>(c.ranks.begin(), c.ranks.end()).size() != c.ranks.size()) {
            out.emplace_back("experiment.ranks: duplicate rank counts");
        }
        if (!c.ranks.empty() && rank_pairs(c).empty()) {
            out.emplace_back("experiment.ranks: no (ns, nd) pair with ns != nd");
        }
    }
    if (c.variants.empty()) {
        out.emplace_back("experiment.variants: no method/strategy combination selected");
    }
    for (const auto& v : c.variants) {
        if (!eligible(v.method, v.strategy)) {
            out.push_back("experiment.variants: " + std::string(to_string(v.method)) + " cannot run " +
                          std::string(to_string(v.strategy)));
        }
    }
    for (std::size_t i = 0; i < c.variants.size(); ++i) {
        if (std::find(c.variants.begin(), c.variants.begin() + static_cast<std::ptrdiff_t>(i),
                      c.variants[i]) != c.variants.begin() + static_cast<std::ptrdiff_t>(i)) {
            out.emplace_back("experiment.variants: duplicate combination");
            break;
        }
    }
    if (c.repeats < 1) {
        out.emplace_back("experiment.repeats: must be >= 1");
    }
    if (c.elements < 0) {
        out.emplace_back("experiment.elements: must be >= 0");
    }
    if (c.element_width < 1) {
        out.emplace_back("experiment.element_width: must be >= 1");
    }
    if (c.jobs < 1) {
        out.emplace_back("experiment.jobs: must be >= 1");
    }
    for (auto& v : c.cost.violations()) {
        out.push_back(std::move(v));
    }
    for (auto& v : c.app.violations()) {
        out.push_back(std::move(v));
    }
    return out;
}

ExperimentConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }

    ExperimentConfig c;
    std::optional<std::vector<Method>> methods;
    std::optional<std::vector<Strategy>> strategies;
    std::optional<int> ns, nd;
    const auto table = setters(c, methods, strategies, ns, nd);

    for (const auto& [section, keys] : tree) {
        if (keys.empty() && !keys.data().empty()) {
            throw ConfigError(section + ": keys must be inside a section");
        }
        for (const auto& [key, node] : keys) {
            const auto name = section + "." + key;
            const auto it = table.find(name);
            if (it == table.end()) {
                throw ConfigError(name + ": unknown key");
            }
            it->second(node, name);
        }
    }

    if (methods || strategies) {
        c.variants.clear();
        for (auto m : methods.value_or(std::vector<Method>(kAllMethods.begin(), kAllMethods.end()))) {
            for (auto s : strategies.value_or(
                     std::vector<Strategy>(kAllStrategies.begin(), kAllStrategies.end()))) {
                if (eligible(m, s)) {
                    c.variants.push_back({m, s});
                }
            }
        }
    }
    if (ns.has_value() != nd.has_value()) {
        throw ConfigError("experiment.ns/nd: set both or neither");
    }
    if (ns) {
        c.only_pair = std::pair{*ns, *nd};
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config '" + path.string() + "'");
    }
    return parse_config(in);
}

std::vector<std::pair<int, int>> rank_pairs(const ExperimentConfig& c) {
    if (c.only_pair) {
        return {*c.only_pair};
    }
    std::vector<std::pair<int, int>> out;
    for (int ns : c.ranks) {
        for (int nd : c.ranks) {
            if (ns != nd || c.allow_identity) {
                out.emplace_back(ns, nd);
            }
        }
    }
    return out;
}

std::uint64_t run_seed(std::uint64_t seed, std::size_t index) {
    return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(index));
}

std::vector<RunSpec> expand(const ExperimentConfig& c) {
    std::vector<RunSpec> out;
    for (const auto& [ns, nd] : rank_pairs(c)) {
        for (const auto& v : c.variants) {
            for (int k = 0; k < c.repeats; ++k) {
                RunSpec run;
                run.index = out.size();
                run.repeat = k;
                run.spec.ns = ns;
                run.spec.nd = nd;
                run.spec.method = v.method;
                run.spec.strategy = v.strategy;
                run.spec.data = DataDescriptor{c.elements, DataCategory::Constant, c.element_width};
                run.spec.app = c.app;
                run.spec.cost = c.cost;
                run.spec.seed = run_seed(c.seed, run.index);
                run.spec.collective_blocks_background = c.collective_blocks_background;
                out.push_back(std::move(run));
            }
        }
    }
    return out;
}

MatrixResult run_matrix(const ExperimentConfig& c) {
    if (const auto problems = validate_config(c); !problems.empty()) {
        std::string msg = "invalid experiment config";
        for (const auto& p : problems) {
            msg += "; " + p;
        }
        throw ConfigError(msg);
    }

    const auto runs = expand(c);
    const bool keep_traces = !c.trace_path.empty();
    std::vector<ReconfigOutcome> outcomes(runs.size());
    std::vector<std::exception_ptr> errors(runs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            try {
                outcomes[i] = simulate_reconfiguration(runs[i].spec);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::min<std::size_t>(
        static_cast<std::size_t>(c.jobs), std::max<std::size_t>(runs.size(), 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    MatrixResult result;
    for (auto& o : outcomes) {
        result.records.push_back(o.record);
        if (keep_traces) {
            result.traces.push_back(std::move(o.trace));
        }
    }
    SummaryOptions options;
    options.include_threading_in_min = c.include_threading_in_min;
    for (const auto& [ns, nd] : rank_pairs(c)) {
        for (const auto& v : c.variants) {
            options.expected.push_back({v.method, v.strategy, ns, nd});
        }
    }
    result.report = summarize(result.records, options);
    return result;
}

void write_traces(std::ostream& os, const std::vector<RunSpec>& runs,
                  const std::vector<std::vector<TraceEvent>>& traces) {
    for (std::size_t i = 0; i < traces.size() && i < runs.size(); ++i) {
        const auto& s = runs[i].spec;
        os << "# run " << runs[i].index << " ns=" << s.ns << " nd=" << s.nd
           << " method=" << to_string(s.method) << " strategy=" << to_string(s.strategy)
           << " repeat=" << runs[i].repeat << " seed=" << s.seed << '\n';
        write_trace(os, traces[i]);
    }
}

void write_outputs(const ExperimentConfig& c, const MatrixResult& result) {
    if (!c.report_path.empty()) {
        std::ofstream os;
        open_for_write(os, c.report_path);
        write_csv(os, result.report);
    }
    if (!c.jsonl_path.empty()) {
        std::ofstream os;
        open_for_write(os, c.jsonl_path);
        write_jsonl(os, result.report);
    }
    if (!c.trace_path.empty()) {
        std::ofstream os;
        open_for_write(os, c.trace_path);
        write_traces(os, expand(c), result.traces);
    }
}

} // namespace msim
