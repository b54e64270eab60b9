// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "formavg/error.hpp"
#include "formavg/study.hpp"

namespace formavg
{
namespace
{

const char* kSmall = R"(
[family]
name = holder
beta = 0.75

[triple]
m = 6
gamma = 0.5

[time]
meshes = 3, 7, 15
grid_density = 32

[data]
u0 = smooth
f = oscillating
bank = 3

[study]
samples = 100
seed = 2
)";

const Artifact& artifact(const CommandResult& r, const std::string& name)
{
    for (const auto& a : r.artifacts) {
        if (a.name == name) {
            return a;
        }
    }
    throw std::runtime_error("missing artifact " + name);
}

void expect_config_error(const std::string& text)
{
    try {
        parse_config(text);
        FAIL() << "expected ConfigError for:\n" << text;
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError) << e.what();
    }
}

TEST(Config, ParsesSectionsAndDefaults)
{
    const StudyConfig c = parse_config(kSmall);
    EXPECT_EQ(c.family, "holder");
    EXPECT_DOUBLE_EQ(c.params.beta, 0.75);
    EXPECT_EQ(c.m, 6);
    EXPECT_DOUBLE_EQ(c.gamma, 0.5);
    EXPECT_EQ(c.meshes, (std::vector<int>{3, 7, 15}));
    EXPECT_EQ(c.bank, 3);
    EXPECT_EQ(c.seed, 2u);
    EXPECT_DOUBLE_EQ(c.solver_tol, 1e-11);
    EXPECT_EQ(c.extension, Extension::Continue);
}

TEST(Config, ListsAndKnots)
{
    const StudyConfig c = parse_config(R"(
[triple]
weights = list
list = 1, 2.5, 10
[modulus]
kind = tabulated
knots = 0:0, 0.5:1, 1:2
[study]
compare = 3:7, 7:15
mu = 0, 5
)");
    EXPECT_EQ(c.weight_list, (std::vector<double>{1.0, 2.5, 10.0}));
    ASSERT_EQ(c.modulus_knots.size(), 3u);
    EXPECT_DOUBLE_EQ(c.modulus_knots[1].first, 0.5);
    EXPECT_DOUBLE_EQ(c.modulus_knots[2].second, 2.0);
    EXPECT_EQ(c.compare_pairs.size(), 2u);
    EXPECT_EQ(c.mu, (std::vector<double>{0.0, 5.0}));
}

TEST(Config, Rejections)
{
    expect_config_error("[bogus]\nx = 1\n");
    expect_config_error("[family]\ncolour = red\n");
    expect_config_error("[family]\nname = quadratic\n");
    expect_config_error("[time]\nmeshes = 7, 3\n");
    expect_config_error("[triple]\nm = many\n");
    expect_config_error("[data]\nu0 = spiky\n");
    expect_config_error("[family]\nextension = mirror\n");
}

TEST(Config, MissingFileIsReported)
{
    EXPECT_THROW(load_config("/nonexistent/study.ini"), Error);
}

TEST(Commands, NamesAndUnknown)
{
    EXPECT_EQ(command_names().size(), 7u);
    EXPECT_THROW(run_command("integrate", parse_config(kSmall)), Error);
}

TEST(Commands, CheckFormPasses)
{
    const CommandResult r = run_command("check-form", parse_config(kSmall));
    EXPECT_TRUE(r.pass) << r.summary;
    const auto j = nlohmann::json::parse(artifact(r, "check_form.json").content);
    EXPECT_LE(j["checks"]["dini_max_ratio"]["value"].get<double>(), 1.0 + 1e-9);
    EXPECT_FALSE(artifact(r, "check_form.csv").content.empty());
}

TEST(Commands, TooSmallModulusFailsCheckForm)
{
    StudyConfig c = parse_config(kSmall);
    c.modulus = "power";
    c.modulus_coefficient = 0.1;
    c.modulus_beta = 0.75;
    const CommandResult r = run_command("check-form", c);
    EXPECT_FALSE(r.pass);
}

TEST(Commands, DiscretizeHasHeader)
{
    const CommandResult r = run_command("discretize", parse_config(kSmall));
    EXPECT_TRUE(r.pass) << r.summary;
    const std::string& csv = artifact(r, "discretize.csv").content;
    EXPECT_EQ(csv.rfind("n,mesh,static_ratio,modulus_ratio,bracket", 0), 0u);
}

TEST(Convergence, ConstantFamilyIsExact)
{
    StudyConfig c = parse_config(kSmall);
    c.family = "constant";
    c.bank = 2;
    const ConvergenceReport r = run_convergence_study(c);
    EXPECT_TRUE(r.exact);
    EXPECT_TRUE(r.pass());
    for (const auto& row : r.rows) {
        EXPECT_LE(row.error.mr, 1e-8);
        EXPECT_LE(row.bank_max_error, 1e-8);
    }
}

TEST(Convergence, HolderBoundedRatios)
{
    const ConvergenceReport r = run_convergence_study(parse_config(kSmall));
    ASSERT_EQ(r.rows.size(), 3u);
    EXPECT_TRUE(r.complete);
    for (const auto& row : r.rows) {
        EXPECT_GT(row.bracket, 0.0);
        EXPECT_EQ(row.status, "ok");
    }
    EXPECT_TRUE(r.monotone_ok);
    EXPECT_TRUE(r.ratio_ok);
}

TEST(Compare, SameSubdivisionGivesZero)
{
    const CompareRow row = compare_subdivisions(parse_config(kSmall), 7, 7);
    EXPECT_EQ(row.c0V_gap, 0.0);
    EXPECT_TRUE(row.pass);
}

TEST(Compare, RequiresRefinement)
{
    EXPECT_THROW(compare_subdivisions(parse_config(kSmall), 3, 5), Error);
}

TEST(Compare, RefinedPairWithinBound)
{
    const CompareRow row = compare_subdivisions(parse_config(kSmall), 3, 7);
    EXPECT_GT(row.c0V_gap, 0.0);
    EXPECT_GT(row.bound, 0.0);
    EXPECT_NEAR(row.mesh_coarse, 0.25, 1e-15);
    EXPECT_NEAR(row.mesh_fine, 0.125, 1e-15);
}

TEST(Commands, Deterministic)
{
    const StudyConfig c = parse_config(kSmall);
    const CommandResult a = run_command("discretize", c);
    const CommandResult b = run_command("discretize", c);
    ASSERT_EQ(a.artifacts.size(), b.artifacts.size());
    for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
        EXPECT_EQ(a.artifacts[i].content, b.artifacts[i].content) << a.artifacts[i].name;
    }
}

} // namespace
} // namespace formavg
