// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "formavg/formavg.h"

namespace
{

const char* kConfig = R"(
[family]
name = holder
[triple]
m = 4
gamma = 0.5
[time]
meshes = 3, 7
grid_density = 16
[data]
bank = 2
[study]
samples = 50
)";

std::filesystem::path scratch(const std::string& name)
{
    const char* base = std::getenv("FORMAVG_TEST_TMP");
    return std::filesystem::path(base != nullptr ? base : ".") / name;
}

TEST(CApi, VersionAndStatusNames)
{
    EXPECT_STREQ(fa_version(), "0.1.0");
    EXPECT_STREQ(fa_status_name(FA_OK), "ok");
    EXPECT_STREQ(fa_status_name(FA_CONFIG_ERROR), "ConfigError");
    EXPECT_STREQ(fa_status_name(FA_INTERNAL), "internal");
    EXPECT_STREQ(fa_status_name(static_cast<fa_status>(55)), "unknown");
}

TEST(CApi, CommandList)
{
    ASSERT_EQ(fa_command_count(), 7u);
    EXPECT_STREQ(fa_command_name(0), "check-form");
    EXPECT_EQ(fa_command_name(7), nullptr);
}

TEST(CApi, ParseErrorsSetLastError)
{
    fa_config* c = nullptr;
    EXPECT_EQ(fa_config_parse("[family]\nname = quadratic\n", &c), FA_CONFIG_ERROR);
    EXPECT_EQ(c, nullptr);
    EXPECT_NE(std::string(fa_last_error()).find("quadratic"), std::string::npos);
    EXPECT_EQ(fa_config_parse(nullptr, &c), FA_INVALID_ARGUMENT);
    EXPECT_EQ(fa_config_load("/nonexistent.ini", &c), FA_IO);
}

TEST(CApi, SettersValidate)
{
    fa_config* c = nullptr;
    ASSERT_EQ(fa_config_parse(kConfig, &c), FA_OK);
    EXPECT_EQ(fa_config_set_seed(c, 9), FA_OK);
    EXPECT_EQ(fa_config_set_tolerance(c, 1e-9), FA_OK);
    EXPECT_EQ(fa_config_set_tolerance(c, 0.0), FA_INVALID_ARGUMENT);
    EXPECT_EQ(fa_config_set_tolerance(c, 2.0), FA_INVALID_ARGUMENT);
    EXPECT_STREQ(fa_config_output(c), "out");
    EXPECT_EQ(fa_config_set_seed(nullptr, 1), FA_INVALID_ARGUMENT);
    fa_config_free(c);
}

TEST(CApi, RunWriteAndInspect)
{
    fa_config* c = nullptr;
    ASSERT_EQ(fa_config_parse(kConfig, &c), FA_OK);
    fa_result* r = nullptr;
    ASSERT_EQ(fa_run(c, "check-form", &r), FA_OK) << fa_last_error();
    fa_config_free(c);
    EXPECT_EQ(fa_result_passed(r), 1);
    EXPECT_NE(std::string(fa_result_summary(r)), "");
    ASSERT_GE(fa_result_artifact_count(r), 1u);
    const char* name = nullptr;
    const char* content = nullptr;
    std::size_t size = 0;
    ASSERT_EQ(fa_result_artifact(r, 0, &name, &content, &size), FA_OK);
    EXPECT_EQ(std::string(content).size(), size);
    EXPECT_EQ(fa_result_artifact(r, 99, &name, &content, &size), FA_INVALID_ARGUMENT);

    const auto dir = scratch("capi_out/nested");
    std::filesystem::remove_all(dir);
    ASSERT_EQ(fa_result_write(r, dir.c_str()), FA_OK) << fa_last_error();
    std::ifstream in(dir / name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), std::string(content, size));
    fa_result_free(r);
}

TEST(CApi, ViolationIsNotAnError)
{
    fa_config* c = nullptr;
    const std::string text = std::string(kConfig) + "[modulus]\nkind = power\ncoefficient = 0.1\n"
                                                    "beta = 0.75\n";
    ASSERT_EQ(fa_config_parse(text.c_str(), &c), FA_OK) << fa_last_error();
    fa_result* r = nullptr;
    ASSERT_EQ(fa_run(c, "check-form", &r), FA_OK) << fa_last_error();
    EXPECT_EQ(fa_result_passed(r), 0);
    fa_result_free(r);
    fa_config_free(c);
}

TEST(CApi, UnknownCommand)
{
    fa_config* c = nullptr;
    ASSERT_EQ(fa_config_parse(kConfig, &c), FA_OK);
    fa_result* r = nullptr;
    EXPECT_EQ(fa_run(c, "integrate", &r), FA_INVALID_ARGUMENT);
    EXPECT_EQ(r, nullptr);
    fa_config_free(c);
}

TEST(CApi, BracketBounds)
{
    double b = 0.0;
    ASSERT_EQ(fa_bracket_bound(1.0, 1.0, 1.0, 0.0, 0.05, &b), FA_OK);
    EXPECT_NEAR(b, 0.3, 1e-13);
    ASSERT_EQ(fa_bracket_bound(1.0, 0.75, 1.0, 0.5, 0.01, &b), FA_OK);
    EXPECT_NEAR(b, 0.5042, 5e-4);
    double two = 0.0;
    ASSERT_EQ(fa_two_subdivision_bound(1.0, 0.75, 1.0, 0.5, 0.1, 0.05, &two), FA_OK);
    EXPECT_GT(two, 0.0);
    EXPECT_EQ(fa_bracket_bound(1.0, 0.2, 1.0, 0.5, 0.1, &b), FA_DIVERGENT_INTEGRAL);
    EXPECT_EQ(fa_bracket_bound(1.0, 1.0, 1.0, 0.0, 0.1, nullptr), FA_INVALID_ARGUMENT);
}

TEST(CApi, NullHandlesAreSafe)
{
    fa_config_free(nullptr);
    fa_result_free(nullptr);
    EXPECT_EQ(fa_result_passed(nullptr), 0);
    EXPECT_STREQ(fa_result_summary(nullptr), "");
    EXPECT_EQ(fa_result_artifact_count(nullptr), 0u);
    EXPECT_EQ(fa_result_write(nullptr, "x"), FA_INVALID_ARGUMENT);
}

} // namespace
