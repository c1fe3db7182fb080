// Batch front end for the tse engine. Thin by design: argument parsing here,
// everything else behind the C API in libtse.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tse.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int exit_code_for(tse_status status) {
    switch (status) {
    case TSE_OK:
        return kExitOk;
    case TSE_ERR_CONFIG:
    case TSE_ERR_USAGE:
        return kExitUsage;
    default:
        return kExitRuntime;
    }
}

struct ConfigDeleter {
    void operator()(tse_config* c) const { tse_config_free(c); }
};
using ConfigPtr = std::unique_ptr<tse_config, ConfigDeleter>;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides; // key=value
    std::string output_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "JSON run configuration file");
    cmd->add_option("-s,--set", args.overrides,
                    "override a config key, e.g. --set eligibility.free_pre_days=30")
        ->type_name("KEY=VALUE");
    cmd->add_option("-o,--out", args.output_dir, "output directory (overrides config)");
}

int run_subcommand(const std::string& name, const CommonArgs& args,
                   const std::vector<std::pair<std::string, std::string>>& extra) {
    tse_config* raw = nullptr;
    tse_status status = args.config_path.empty() ? tse_config_create(&raw)
                                                 : tse_config_load(args.config_path.c_str(), &raw);
    if (status != TSE_OK) {
        std::fprintf(stderr, "tse: %s\n", tse_last_error());
        return exit_code_for(status);
    }
    ConfigPtr config(raw);

    auto set = [&](const std::string& key, const std::string& value) {
        tse_status s = tse_config_set(config.get(), key.c_str(), value.c_str());
        if (s != TSE_OK)
            std::fprintf(stderr, "tse: %s\n", tse_last_error());
        return s;
    };

    if (!args.output_dir.empty())
        if (tse_status s = set("output_dir", args.output_dir); s != TSE_OK)
            return exit_code_for(s);
    for (const auto& kv : args.overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "tse: --set expects KEY=VALUE, got '%s'\n", kv.c_str());
            return kExitUsage;
        }
        if (tse_status s = set(kv.substr(0, eq), kv.substr(eq + 1)); s != TSE_OK)
            return exit_code_for(s);
    }
    for (const auto& [key, value] : extra)
        if (tse_status s = set(key, value); s != TSE_OK)
            return exit_code_for(s);

    char* text = nullptr;
    status = tse_run(config.get(), name.c_str(), &text);
    if (status != TSE_OK) {
        std::fprintf(stderr, "tse: %s\n", tse_last_error());
        return exit_code_for(status);
    }
    if (text) {
        std::fputs(text, stdout);
        tse_string_free(text);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tse — referenced-sequence engine for time-stamped clinical event records"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tse_version()));

    struct Sub {
        CLI::App* cmd;
        CommonArgs args;
        std::vector<std::pair<std::string, std::string>> extra;
    };
    std::vector<std::unique_ptr<Sub>> subs;

    auto add = [&](const char* name, const char* help, bool hidden = false) {
        auto sub = std::make_unique<Sub>();
        sub->cmd = app.add_subcommand(name, help);
        if (hidden)
            sub->cmd->group("");
        add_common(sub->cmd, sub->args);
        subs.push_back(std::move(sub));
        return subs.back().get();
    };

    add("ingest", "parse and validate event files, write the ingest report");
    add("build", "compile event files into sequence stores");
    add("stats", "storage footprint of stores versus raw event files");
    add("eligibility", "evaluate cohort selection criteria per patient");
    add("cci-trend", "growing- and fixed-window comorbidity trend tables");
    add("covariates", "time-varying covariates over lookback windows");

    Sub* inspect = add("inspect", "render one patient's sequences as aligned text");
    std::string inspect_patient, inspect_from, inspect_to;
    int64_t inspect_ma = -1;
    inspect->cmd->add_option("patient", inspect_patient, "patient id")->required();
    inspect->cmd->add_option("--from", inspect_from, "range start (YYYY-MM-DD)");
    inspect->cmd->add_option("--to", inspect_to, "range end (YYYY-MM-DD)");
    inspect->cmd->add_option("--ma", inspect_ma, "emit moving averages with this window (days)");

    Sub* generate = add("generate", "write a seeded synthetic cohort dataset", true);
    int64_t gen_seed = -1;
    generate->cmd->add_option("--seed", gen_seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    for (auto& sub : subs) {
        if (!sub->cmd->parsed())
            continue;
        if (sub.get() == inspect) {
            sub->extra.emplace_back("inspect.patient", inspect_patient);
            if (!inspect_from.empty())
                sub->extra.emplace_back("inspect.from", inspect_from);
            if (!inspect_to.empty())
                sub->extra.emplace_back("inspect.to", inspect_to);
            if (inspect_ma >= 0)
                sub->extra.emplace_back("inspect.moving_average_days",
                                        std::to_string(inspect_ma));
        } else if (sub.get() == generate) {
            if (gen_seed >= 0)
                sub->extra.emplace_back("generate.seed", std::to_string(gen_seed));
        }
        return run_subcommand(sub->cmd->get_name(), sub->args, sub->extra);
    }
    std::fprintf(stderr, "tse: no subcommand given\n");
    return kExitUsage;
}
