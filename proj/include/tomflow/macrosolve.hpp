#ifndef TOMFLOW_MACROSOLVE_HPP
#define TOMFLOW_MACROSOLVE_HPP

#include <functional>
#include <string>

#include "tomflow/waves.hpp"

namespace tomflow {

struct FvGrid {
    double a = 0.0;
    double b = 1.0;
    int n = 0;
    double dx() const { return (b - a) / n; }
    double center(int i) const { return a + (i + 0.5) * dx(); }
};

enum class GhostPolicy { outflow, periodic };

/// Cell-averaged conservative field. Snapshots are plain values; a step
/// produces a new field.
struct FvField {
    FvGrid grid;
    GhostPolicy ghost = GhostPolicy::outflow;
    std::vector<ConsState> U;
    double t = 0.0;
};

enum class RelaxationVariant { none, w_to_W, z_arz, z_vc };

/// Sign of the w-relaxation source. `paper` keeps -(W(rho) - w)/eps under
/// which deviations from equilibrium grow; `dissipative` flips it for
/// convergence experiments. Applies to w_to_W only.
enum class SourceSign { paper, dissipative };

struct RelaxationConfig {
    RelaxationVariant variant = RelaxationVariant::none;
    double epsilon = 1.0;
    SourceSign source_sign = SourceSign::paper;
    void validate() const;
};

struct FvStepInfo {
    double dt = 0.0;
    double max_speed = 0.0;
    int retries = 0;
};

FvField make_riemann_field(const FvGrid& grid, GhostPolicy ghost, const PrimState& u_left,
                           const PrimState& u_right, double x0, const ClosureSet& cs);
FvField make_field(const FvGrid& grid, GhostPolicy ghost,
                   const std::function<PrimState(double)>& init, const ClosureSet& cs);

/// One step of the first-order Rusanov scheme with Strang-split relaxation
/// source (integrated exactly per cell). dt = cfl * dx / max speed, capped by
/// dt_max; a post-step CFL violation triggers one internal halved-dt retry.
FvField fv_step(const FvField& f, const ClosureSet& cs, const RelaxationConfig& rc,
                double cfl, double dt_max = std::numeric_limits<double>::infinity(),
                FvStepInfo* info = nullptr);

FvField fv_solve(FvField f, const ClosureSet& cs, const RelaxationConfig& rc,
                 double cfl, double t_end);

/// (sum rho dx, sum z dx, sum w dx).
std::array<double, 3> fv_totals(const FvField& f);

std::vector<PrimState> fv_primitives(const FvField& f, const ClosureSet& cs);

/// Per-cell discrete entropy production of one homogeneous step:
/// (eta^{n+1} - eta^n)/dt + (Psi_{i+1/2} - Psi_{i-1/2})/dx with the
/// Rusanov-compatible numerical entropy flux built from `before`.
/// Negative values are dissipation; positive values violate the entropy
/// inequality.
std::vector<double> entropy_production(const FvField& before, const FvField& after,
                                       double dt, const EntropyPair& pair,
                                       const ClosureSet& cs);

/// 2x2 reference system in (rho, z) with hesitation P = q(H(rho)) and
/// relaxation source rho (V_eq - v)/eps on z; eps = inf turns the source off.
struct ArzField {
    FvGrid grid;
    GhostPolicy ghost = GhostPolicy::outflow;
    std::vector<std::array<double, 2>> U; // (rho, z)
    double t = 0.0;
};

double arz_velocity(const std::array<double, 2>& u, const ClosureSet& cs);

ArzField make_arz_riemann_field(const FvGrid& grid, GhostPolicy ghost, double rho_l,
                                double v_l, double rho_r, double v_r, double x0,
                                const ClosureSet& cs);
ArzField make_arz_field(const FvGrid& grid, GhostPolicy ghost,
                        const std::function<std::array<double, 2>(double)>& init_rho_v,
                        const ClosureSet& cs);

ArzField arz_step(const ArzField& f, const ClosureSet& cs, double epsilon, double cfl,
                  double dt_max = std::numeric_limits<double>::infinity(),
                  FvStepInfo* info = nullptr);
ArzField arz_solve(ArzField f, const ClosureSet& cs, double epsilon, double cfl,
                   double t_end);

/// Scalar Godunov solver for d_t rho + d_x (rho V_eq(rho)) = 0. The flux is
/// assumed unimodal on each interface bracket (true for decreasing V_eq).
struct ScalarField {
    FvGrid grid;
    GhostPolicy ghost = GhostPolicy::outflow;
    std::vector<double> rho;
    double t = 0.0;
};

ScalarField lwr_step(const ScalarField& f, const ScalarClosure& V_eq, double cfl,
                     double dt_max = std::numeric_limits<double>::infinity(),
                     FvStepInfo* info = nullptr);
ScalarField lwr_solve(ScalarField f, const ScalarClosure& V_eq, double cfl, double t_end);

/// Initial data and numerics shared by the relaxed run and its equilibrium
/// reference. h (and, for z_arz, v) is projected onto the equilibrium
/// manifold so the distance starts at zero.
struct SweepSetup {
    FvGrid grid;
    GhostPolicy ghost = GhostPolicy::outflow;
    std::function<PrimState(double)> initial; // h member is ignored
    double cfl = 0.45;
    double t_end = 0.3;
};

struct SweepEntry {
    double epsilon = 0.0;
    double l1_distance = 0.0;
    bool diverged = false;
    std::string note;
};

/// L1 distance at t_end between the relaxed solution and its equilibrium
/// reference (homogeneous ARZ for w_to_W, LWR for z_arz), per epsilon.
/// Divergence (non-finite values or |U| > 1e6) is recorded per entry.
std::vector<SweepEntry> epsilon_sweep(const SweepSetup& setup, RelaxationVariant variant,
                                      SourceSign sign, std::span<const double> epsilons,
                                      const ClosureSet& cs);

} // namespace tomflow

#endif
