// msim: runs reconfiguration experiments and writes the summary report.

#include "msim/errors.hpp"
#include "msim/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct Overrides {
    std::string config;
    std::optional<int> ns;
    std::optional<int> nd;
    std::string method;
    std::string strategy;
    std::optional<msim::Index> elements;
    std::optional<int> repeats;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::string trace;
    std::string out;
    std::string jsonl;
    bool include_threading = false;
    bool allow_identity = false;
    bool blocks_background = false;
};

void add_options(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--config", o.config, "INI experiment config")->check(CLI::ExistingFile);
    cmd.add_option("--ns", o.ns, "source rank count (with --nd: run only this pair)");
    cmd.add_option("--nd", o.nd, "drain rank count");
    cmd.add_option("--method", o.method, "col | rma-lock | rma-lockall");
    cmd.add_option("--strategy", o.strategy, "blocking | threading | nonblocking | wait-drains");
    cmd.add_option("--n", o.elements, "elements to redistribute");
    cmd.add_option("--repeats", o.repeats, "runs per matrix cell");
    cmd.add_option("--seed", o.seed, "base seed");
    cmd.add_option("--jobs", o.jobs, "worker threads");
    cmd.add_option("--trace", o.trace, "write every run's event trace here");
    cmd.add_option("--out", o.out, "write the CSV report here instead of stdout");
    cmd.add_option("--jsonl", o.jsonl, "also write the report as JSON lines");
    cmd.add_flag("--include-threading-in-min", o.include_threading,
                 "let one-sided threading runs set the blocking total's iteration count");
    cmd.add_flag("--allow-identity", o.allow_identity, "admit ns == nd reconfigurations");
    cmd.add_flag("--collective-blocks-background", o.blocks_background,
                 "application collectives wait for background transfers");
}

msim::ExperimentConfig build_config(const Overrides& o) {
    auto c = o.config.empty() ? msim::ExperimentConfig{} : msim::load_config(o.config);

    if (o.ns.has_value() != o.nd.has_value()) {
        throw msim::ConfigError("--ns and --nd go together");
    }
    if (o.ns) {
        c.only_pair = std::pair{*o.ns, *o.nd};
    }

    std::optional<msim::Method> method;
    std::optional<msim::Strategy> strategy;
    if (!o.method.empty() && !(method = msim::parse_method(o.method))) {
        throw msim::ConfigError("--method: unknown method '" + o.method + "'");
    }
    if (!o.strategy.empty() && !(strategy = msim::parse_strategy(o.strategy))) {
        throw msim::ConfigError("--strategy: unknown strategy '" + o.strategy + "'");
    }
    if (method && strategy) {
        // An explicit pair is kept even if ineligible so validation reports it.
        c.variants = {{*method, *strategy}};
    } else if (method || strategy) {
        std::erase_if(c.variants, [&](const msim::Variant& v) {
            return (method && v.method != *method) || (strategy && v.strategy != *strategy);
        });
    }

    if (o.elements) c.elements = *o.elements;
    if (o.repeats) c.repeats = *o.repeats;
    if (o.seed) c.seed = *o.seed;
    if (o.jobs) c.jobs = *o.jobs;
    if (!o.trace.empty()) c.trace_path = o.trace;
    if (!o.out.empty()) c.report_path = o.out;
    if (!o.jsonl.empty()) c.jsonl_path = o.jsonl;
    c.include_threading_in_min = c.include_threading_in_min || o.include_threading;
    c.allow_identity = c.allow_identity || o.allow_identity;
    c.collective_blocks_background = c.collective_blocks_background || o.blocks_background;
    return c;
}

int report_violations(const std::vector<std::string>& problems) {
    for (const auto& p : problems) {
        std::cerr << "msim: " << p << '\n';
    }
    return problems.empty() ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Virtual-time simulator of malleable MPI data redistribution"};
    app.require_subcommand(1);

    Overrides run_opts;
    auto* run = app.add_subcommand("run", "run the experiment matrix and write the report");
    add_options(*run, run_opts);

    Overrides check_opts;
    auto* validate = app.add_subcommand("validate", "check a configuration without running it");
    add_options(*validate, check_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto code = report_violations(msim::validate_config(build_config(check_opts)));
            if (code == 0) {
                std::cout << "config ok\n";
            }
            return code;
        }

        const auto config = build_config(run_opts);
        if (const auto code = report_violations(msim::validate_config(config)); code != 0) {
            return code;
        }
        const auto result = msim::run_matrix(config);
        msim::write_outputs(config, result);
        if (config.report_path.empty()) {
            msim::write_csv(std::cout, result.report);
        }
        return 0;
    } catch (const msim::ConfigError& e) {
        std::cerr << "msim: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "msim: " << e.what() << '\n';
        return 3;
    }
}
