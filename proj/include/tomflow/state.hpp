#ifndef TOMFLOW_STATE_HPP
#define TOMFLOW_STATE_HPP

#include <array>
#include <vector>

#include "tomflow/closures.hpp"

namespace tomflow {

/// Primitive state (rho, v, h). rho is dimensionless; densities above
/// rho_max (configuration, default 1) are legal but worth a warning at the
/// application layer, never an error here.
struct PrimState {
    double rho = 0.0;
    double v = 0.0;
    double h = 0.0;
};

/// Conservative state (rho, z, w) with z = rho*(v + q(h)) and
/// w = rho*(h - h_fn(rho)). w may be negative.
struct ConsState {
    double rho = 0.0;
    double z = 0.0;
    double w = 0.0;
};

/// Lagrangian state; exists for the coordinate-equivalence residual test
/// only (no Lagrangian time stepper).
struct LagState {
    double tau = 0.0; // specific volume 1/rho
    double v = 0.0;
    double h = 0.0;
    double X = 0.0;   // total car length up to x
    double T = 0.0;   // Lagrangian time (= t)
};

double omega(const PrimState& u, const ClosureSet& cs); // v + q(h)

ConsState prim_to_cons(const PrimState& u, const ClosureSet& cs);
PrimState cons_to_prim(const ConsState& u, const ClosureSet& cs);

/// Flux of the conservative formulation: (rho*v, z*v, w*v).
std::array<double, 3> flux_cons(const ConsState& u, const ClosureSet& cs);

/// Uniform space-time samples of (rho, v, h), row-major [it*nx + ix].
/// x and t must be uniformly spaced.
struct SpaceTimeField {
    std::vector<double> x;
    std::vector<double> t;
    std::vector<double> rho;
    std::vector<double> v;
    std::vector<double> h;

    std::size_t nx() const { return x.size(); }
    std::size_t nt() const { return t.size(); }
    std::size_t idx(std::size_t it, std::size_t ix) const { return it * nx() + ix; }
    void validate_shape() const;
};

/// Max-norm finite-difference residuals of the three Lagrangian equations,
/// evaluated on Eulerian data through the coordinate transforms
/// (material derivative and d/dX = (1/rho) d/dx).
struct LagrangianResiduals {
    double mass = 0.0;      // d_T tau - d_X v
    double invariant = 0.0; // d_T (v + q(h))
    double deviation = 0.0; // d_T (h - h_fn(rho))
    double max() const;
    bool flagged_non_smooth(double threshold = 0.1) const { return max() > threshold; }
};

LagrangianResiduals residual_lagrangian(const SpaceTimeField& f, const ClosureSet& cs);

} // namespace tomflow

#endif
