// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_STUDY_HPP
#define FORMAVG_STUDY_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "formavg/builtin.hpp"
#include "formavg/discretize.hpp"
#include "formavg/evolve.hpp"

namespace formavg
{

/// Experiment description read from an INI file. See configs/ for the
/// documented schema.
struct StudyConfig
{
    // [family]
    std::string family = "holder";
    FamilyParams params;
    Extension extension = Extension::Continue;
    // [triple]
    std::string weights = "laplacian-1d"; // laplacian-1d | log-uniform | list
    int m = 16;
    double s_max = 1e10;
    std::vector<double> weight_list;
    double gamma = 0.0;
    // [modulus]
    std::string modulus = "auto"; // auto | power | tabulated
    double modulus_coefficient = 1.0;
    double modulus_beta = 1.0;
    std::vector<std::pair<double, double>> modulus_knots;
    // [time]
    double T = 1.0;
    std::vector<int> meshes{7, 15, 31, 63};
    int grid_density = 128;
    // [data]
    std::string u0 = "smooth";
    std::string f = "constant";
    std::vector<double> u0_list;
    std::vector<double> f_list;
    int bank = 20;
    // [tolerances]
    double solver_tol = 1e-11;
    double reference_tol = 1e-12;
    int quad_order = 8;
    // [study]
    std::uint64_t seed = 1;
    int samples = 1000;
    std::vector<std::pair<int, int>> compare_pairs;
    std::vector<double> mu{0.0, 1.0, 10.0, 100.0, 1000.0};
    int q_mesh = 9;
    int q_grid = 256;
    int p_grid = 64;
    double p_shift = 100.0;
    std::vector<int> gap_meshes;
    int gap_grid = 64;
    std::string output = "out";
};

/// Parses INI text. Unknown sections or keys raise ConfigError.
StudyConfig parse_config(const std::string& text);
StudyConfig load_config(const std::string& path);

GelfandTriple config_triple(const StudyConfig& cfg);
/// Built-in family; a non-auto [modulus] replaces the declared modulus.
FormFamily config_family(const StudyConfig& cfg);
SourceData config_data(const StudyConfig& cfg, const GelfandTriple& triple);

struct ConvergenceRow
{
    int n = 0;
    double mesh = 0.0;
    NormReport error;
    double bracket = 0.0;
    double ratio = 0.0;      // mr / bracket, 0 when bracket = 0
    double bank_ratio = 0.0; // worst mr / bracket over the data bank
    double bank_max_error = 0.0;
    std::string status = "ok";
};

struct ConvergenceReport
{
    std::vector<ConvergenceRow> rows; // mesh descending
    bool exact = false;               // zero modulus: exact-match assertion
    double rate_mr = 0.0;
    double rate_c0V = 0.0;
    int rate_points = 0;
    double expected_rate = 0.0; // beta - gamma/2 for power moduli, else 0
    double ratio_drift = 0.0;
    double bank_drift = 0.0;
    bool rate_ok = true;
    bool ratio_ok = true;
    bool monotone_ok = true;
    bool bank_ok = true;
    bool complete = true;

    bool pass() const { return rate_ok && ratio_ok && monotone_ok && bank_ok && complete; }
};

ConvergenceReport run_convergence_study(const StudyConfig& cfg);

struct CompareRow
{
    int n_coarse = 0;
    int n_fine = 0;
    double mesh_coarse = 0.0;
    double mesh_fine = 0.0;
    double c0V_gap = 0.0;
    double bound = 0.0;
    bool pass = true;
};

/// Sup-in-time V-norm gap between the two discretized solutions and the
/// four-term bound. (n_fine + 1) must be a multiple of (n_coarse + 1).
CompareRow compare_subdivisions(const StudyConfig& cfg, int n_coarse, int n_fine);

struct CompareReport
{
    double c_exp = 0.0;
    std::vector<CompareRow> rows;
    bool pass = true;
};

/// c_exp = 2 max_i c0V_i / bracket_i from the convergence study.
CompareReport run_compare(const StudyConfig& cfg, const ConvergenceReport& conv);

struct Artifact
{
    std::string name;
    std::string content;
};

struct CommandResult
{
    std::vector<Artifact> artifacts;
    bool pass = true;
    std::string summary;
};

/// One of check-form, discretize, solve, converge, compare, estimates,
/// qnorm. Bound violations are reported through pass = false; other
/// failures throw.
CommandResult run_command(const std::string& command, const StudyConfig& cfg);

const std::vector<std::string>& command_names();

} // namespace formavg

#endif // FORMAVG_STUDY_HPP
