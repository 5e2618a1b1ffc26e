#ifndef TOMFLOW_SCENARIO_HPP
#define TOMFLOW_SCENARIO_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tomflow/closures.hpp"
#include "tomflow/state.hpp"

namespace tomflow {

/// Closure spec as written in config files, e.g.
///   q = {kind="power", exponent=0.5, coeff=1.0}
///   Veq = {kind="affine", intercept=1.0, slope=-1.0}
///   Vc = {kind="greenshields", vmax=1.0}
struct ClosureSpec {
    std::string kind;
    double exponent = 1.0;
    double coeff = 1.0;
    double intercept = 0.0;
    double slope = 1.0;
    double vmax = 1.0;
};

/// A parsed and validated experiment description. Section/key names are
/// fixed; unknown keys are hard errors.
struct Scenario {
    std::string kind; // riemann | fvm | micro | analyze | sweep

    // [model]
    ClosureSpec q, h;
    std::optional<ClosureSpec> H, Veq, Vc;

    // [initial]
    double rho_left = 0.0, rho_right = 0.0;
    double v_left = 0.0, v_right = 0.0;
    std::optional<double> h_left, h_right; // default: rho^{3/2}
    double x0 = 0.0;
    std::string profile = "riemann"; // riemann | tanh
    double smooth_width = 0.05;
    bool has_initial = false;

    // [numerics]
    double T = 0.3;
    double xmin = -1.0, xmax = 1.0;
    int nx = 400;
    double cfl = 0.45;
    std::string ghost = "outflow";
    std::string variant = "none";
    std::string source_sign = "paper";
    double epsilon = 0.1;
    std::vector<double> epsilons;
    int n_vehicles = 400;
    std::vector<int> n_values;
    double total_car_length = 0.8;
    double dt_safety = 0.1;
    std::string integrator = "rk4";
    std::string micro_sign = "consistent";
    double rho_min = 0.05, rho_max = 0.95;
    int rho_samples = 81;
    double rho_cap = 1.0; // admissible density cap; exceeding warns only

    // [output]
    std::vector<double> times; // defaults to {T}
};

Scenario parse_scenario(const std::filesystem::path& path);
Scenario parse_scenario_text(const std::string& text, const std::string& origin);

/// Canonical serialization; parse(normalize(s)) == s byte-for-byte.
std::string normalize_scenario(const Scenario& s);

ClosureSet build_closures(const Scenario& s);
ScalarClosure build_scalar_closure(const ClosureSpec& spec, const std::string& name);

PrimState scenario_left_state(const Scenario& s, const ClosureSet& cs);
PrimState scenario_right_state(const Scenario& s, const ClosureSet& cs);

/// Runs the scenario and writes its CSV artifacts plus meta.txt into outdir.
/// Outputs are deterministic for identical configs. Throws on failure; no
/// partial outputs are left behind on validation errors.
void run_scenario(const Scenario& s, const std::filesystem::path& outdir);

/// Exit-code mapping used by the command-line tool:
/// 0 ok, 2 parse/validation, 3 solver, 4 i/o.
int exit_code_for(const Error& e);

} // namespace tomflow

#endif
