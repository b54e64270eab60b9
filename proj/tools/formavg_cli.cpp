// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "formavg/formavg.h"

namespace
{

struct Options
{
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
};

// Messages already carry the status name.
int report_failure(const char* what, fa_status /*status*/)
{
    std::fprintf(stderr, "formavg: %s: %s\n", what, fa_last_error());
    return 1;
}

int run(const std::string& command, const Options& opt)
{
    fa_config* config = nullptr;
    fa_status st = fa_config_load(opt.config.c_str(), &config);
    if (st != FA_OK) {
        return report_failure("config", st);
    }
    if (opt.seed) {
        fa_config_set_seed(config, *opt.seed);
    }
    if (opt.tol && (st = fa_config_set_tolerance(config, *opt.tol)) != FA_OK) {
        fa_config_free(config);
        return report_failure("--tol", st);
    }
    const std::string out = opt.out.empty() ? fa_config_output(config) : opt.out;
    fa_result* result = nullptr;
    st = fa_run(config, command.c_str(), &result);
    fa_config_free(config);
    if (st != FA_OK) {
        return report_failure(command.c_str(), st);
    }
    st = fa_result_write(result, out.c_str());
    if (st != FA_OK) {
        fa_result_free(result);
        return report_failure("write", st);
    }
    std::printf("%s\n", fa_result_summary(result));
    for (std::size_t i = 0; i < fa_result_artifact_count(result); ++i) {
        const char* name = nullptr;
        fa_result_artifact(result, i, &name, nullptr, nullptr);
        std::printf("  wrote %s/%s\n", out.c_str(), name);
    }
    const int code = fa_result_passed(result) ? 0 : 2;
    fa_result_free(result);
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Form-averaging discretization studies"};
    app.require_subcommand(1);
    app.set_version_flag("--version", fa_version());

    Options opt;
    std::string chosen;
    for (std::size_t i = 0; i < fa_command_count(); ++i) {
        const std::string name = fa_command_name(i);
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config, "INI study description")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "Output directory (default: [study] output)");
        sub->add_option("--seed", opt.seed, "Override [study] seed");
        sub->add_option("--tol", opt.tol, "Override [tolerances] solver");
        sub->callback([&chosen, name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return run(chosen, opt);
}
