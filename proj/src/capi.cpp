// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include "formavg/formavg.h"

#include <exception>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include <fmt/format.h>

#include "formavg/discretize.hpp"
#include "formavg/error.hpp"
#include "formavg/study.hpp"

struct fa_config
{
    formavg::StudyConfig cfg;
};

struct fa_result
{
    formavg::CommandResult result;
};

namespace
{

thread_local std::string last_error;

fa_status record(fa_status status, const std::string& message)
{
    last_error = message;
    return status;
}

// Runs f and maps exceptions to status codes.
template <class F>
fa_status guard(F&& f)
{
    try {
        last_error.clear();
        f();
        return FA_OK;
    } catch (const formavg::Error& e) {
        return record(static_cast<fa_status>(static_cast<int>(e.code())), e.what());
    } catch (const std::bad_alloc&) {
        return record(FA_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return record(FA_INTERNAL, e.what());
    }
}

formavg::Modulus power_modulus(double c, double beta, double T)
{
    return formavg::Modulus::scaled_power(c, beta, T);
}

} // namespace

extern "C" {

const char* fa_version(void)
{
    return "0.1.0";
}

const char* fa_last_error(void)
{
    return last_error.c_str();
}

const char* fa_status_name(fa_status status)
{
    switch (status) {
    case FA_OK:
        return "ok";
    case FA_INTERNAL:
        return "internal";
    default:
        break;
    }
    const int code = static_cast<int>(status);
    if (code >= 1 && code <= 18) {
        return formavg::to_string(static_cast<formavg::ErrorCode>(code)).data();
    }
    return "unknown";
}

fa_status fa_config_load(const char* path, fa_config** out)
{
    if (path == nullptr || out == nullptr) {
        return record(FA_INVALID_ARGUMENT, "null argument");
    }
    *out = nullptr;
    return guard([&] { *out = new fa_config{formavg::load_config(path)}; });
}

fa_status fa_config_parse(const char* text, fa_config** out)
{
    if (text == nullptr || out == nullptr) {
        return record(FA_INVALID_ARGUMENT, "null argument");
    }
    *out = nullptr;
    return guard([&] { *out = new fa_config{formavg::parse_config(text)}; });
}

void fa_config_free(fa_config* config)
{
    delete config;
}

fa_status fa_config_set_seed(fa_config* config, uint64_t seed)
{
    if (config == nullptr) {
        return record(FA_INVALID_ARGUMENT, "null config");
    }
    config->cfg.seed = seed;
    return FA_OK;
}

fa_status fa_config_set_tolerance(fa_config* config, double tol)
{
    if (config == nullptr) {
        return record(FA_INVALID_ARGUMENT, "null config");
    }
    if (!(tol > 0.0) || tol >= 1.0) {
        return record(FA_INVALID_ARGUMENT, fmt::format("tolerance {} outside (0, 1)", tol));
    }
    config->cfg.solver_tol = tol;
    return FA_OK;
}

const char* fa_config_output(const fa_config* config)
{
    return config == nullptr ? "" : config->cfg.output.c_str();
}

size_t fa_command_count(void)
{
    return formavg::command_names().size();
}

const char* fa_command_name(size_t index)
{
    const auto& names = formavg::command_names();
    return index < names.size() ? names[index].c_str() : nullptr;
}

fa_status fa_run(const fa_config* config, const char* command, fa_result** out)
{
    if (config == nullptr || command == nullptr || out == nullptr) {
        return record(FA_INVALID_ARGUMENT, "null argument");
    }
    *out = nullptr;
    return guard([&] { *out = new fa_result{formavg::run_command(command, config->cfg)}; });
}

void fa_result_free(fa_result* result)
{
    delete result;
}

int fa_result_passed(const fa_result* result)
{
    return result != nullptr && result->result.pass ? 1 : 0;
}

const char* fa_result_summary(const fa_result* result)
{
    return result == nullptr ? "" : result->result.summary.c_str();
}

size_t fa_result_artifact_count(const fa_result* result)
{
    return result == nullptr ? 0 : result->result.artifacts.size();
}

fa_status fa_result_artifact(const fa_result* result, size_t index, const char** name,
                             const char** content, size_t* size)
{
    if (result == nullptr || index >= result->result.artifacts.size()) {
        return record(FA_INVALID_ARGUMENT, "artifact index out of range");
    }
    const auto& a = result->result.artifacts[index];
    if (name != nullptr) {
        *name = a.name.c_str();
    }
    if (content != nullptr) {
        *content = a.content.c_str();
    }
    if (size != nullptr) {
        *size = a.content.size();
    }
    return FA_OK;
}

fa_status fa_result_write(const fa_result* result, const char* dir)
{
    if (result == nullptr || dir == nullptr) {
        return record(FA_INVALID_ARGUMENT, "null argument");
    }
    return guard([&] {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) {
            formavg::fail(formavg::ErrorCode::Io,
                          fmt::format("cannot create '{}': {}", dir, ec.message()));
        }
        for (const auto& a : result->result.artifacts) {
            const fs::path p = fs::path(dir) / a.name;
            std::ofstream f(p, std::ios::binary);
            f << a.content;
            if (!f) {
                formavg::fail(formavg::ErrorCode::Io,
                              fmt::format("cannot write '{}'", p.string()));
            }
        }
    });
}

fa_status fa_bracket_bound(double c, double beta, double T, double gamma, double mesh,
                           double* out)
{
    if (out == nullptr) {
        return record(FA_INVALID_ARGUMENT, "null argument");
    }
    return guard([&] { *out = formavg::bracket_bound(power_modulus(c, beta, T), gamma, mesh); });
}

fa_status fa_two_subdivision_bound(double c, double beta, double T, double gamma,
                                   double mesh_coarse, double mesh_fine, double* out)
{
    if (out == nullptr) {
        return record(FA_INVALID_ARGUMENT, "null argument");
    }
    return guard([&] {
        *out = formavg::two_subdivision_bound(power_modulus(c, beta, T), gamma, mesh_coarse,
                                              mesh_fine);
    });
}

} // extern "C"
