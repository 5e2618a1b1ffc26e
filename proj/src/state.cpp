#include "tomflow/state.hpp"

#include <algorithm>
#include <cmath>

namespace tomflow {

double omega(const PrimState& u, const ClosureSet& cs) { return u.v + cs.q(u.h); }

ConsState prim_to_cons(const PrimState& u, const ClosureSet& cs) {
    ConsState c;
    c.rho = u.rho;
    c.z = u.rho * (u.v + cs.q(u.h));
    c.w = u.rho * (u.h - cs.h_fn(u.rho));
    return c;
}

PrimState cons_to_prim(const ConsState& u, const ClosureSet& cs) {
    if (!(u.rho > 0.0))
        throw VacuumError("cons_to_prim: non-positive density " + std::to_string(u.rho));
    PrimState p;
    p.rho = u.rho;
    p.h = u.w / u.rho + cs.h_fn(u.rho);
    p.v = u.z / u.rho - cs.q(p.h);
    return p;
}

std::array<double, 3> flux_cons(const ConsState& u, const ClosureSet& cs) {
    const PrimState p = cons_to_prim(u, cs);
    return {u.rho * p.v, u.z * p.v, u.w * p.v};
}

void SpaceTimeField::validate_shape() const {
    const std::size_t n = nx() * nt();
    if (nx() < 3 || nt() < 3)
        throw ShapeError("SpaceTimeField: need at least 3 samples per axis");
    if (rho.size() != n || v.size() != n || h.size() != n)
        throw ShapeError("SpaceTimeField: field sizes do not match nx*nt");
}

double LagrangianResiduals::max() const {
    return std::max({mass, invariant, deviation});
}

LagrangianResiduals residual_lagrangian(const SpaceTimeField& f, const ClosureSet& cs) {
    f.validate_shape();
    const std::size_t nx = f.nx(), nt = f.nt();
    const double dx = f.x[1] - f.x[0];
    const double dt = f.t[1] - f.t[0];

    LagrangianResiduals res;
    for (std::size_t it = 1; it + 1 < nt; ++it) {
        for (std::size_t ix = 1; ix + 1 < nx; ++ix) {
            const auto at = [&](std::size_t jt, std::size_t jx) {
                return f.idx(jt, jx);
            };
            const std::size_t c = at(it, ix);
            const double rho = f.rho[c], v = f.v[c], h = f.h[c];
            if (!(rho > 0.0))
                throw VacuumError("residual_lagrangian: non-positive density sample");

            const auto ddt = [&](const std::vector<double>& a) {
                return (a[at(it + 1, ix)] - a[at(it - 1, ix)]) / (2.0 * dt);
            };
            const auto ddx = [&](const std::vector<double>& a) {
                return (a[at(it, ix + 1)] - a[at(it, ix - 1)]) / (2.0 * dx);
            };
            // Material derivative d_T = d_t + v d_x; d_X = (1/rho) d_x.
            const auto matd = [&](const std::vector<double>& a) {
                return ddt(a) + v * ddx(a);
            };

            // tau and the composite fields, sampled pointwise.
            const double tau_t = -ddt(f.rho) / (rho * rho) -
                                 v * ddx(f.rho) / (rho * rho);
            const double r_mass = tau_t - (1.0 / rho) * ddx(f.v);

            const double r_inv = matd(f.v) + cs.q.d1(h) * matd(f.h);

            const double r_dev = matd(f.h) - cs.h_fn.d1(rho) * matd(f.rho);

            res.mass = std::max(res.mass, std::abs(r_mass));
            res.invariant = std::max(res.invariant, std::abs(r_inv));
            res.deviation = std::max(res.deviation, std::abs(r_dev));
        }
    }
    return res;
}

} // namespace tomflow
