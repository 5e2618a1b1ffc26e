#include "tomflow/waves.hpp"

#include <cmath>

namespace tomflow {

Mat3 quasilinear_matrix(const PrimState& u, const ClosureSet& cs) {
    const double qp = cs.q.d1(u.h);
    const double hp = cs.h_fn.d1(u.rho);
    return Mat3{{{u.v, u.rho, 0.0},
                 {0.0, u.v - qp * hp * u.rho, 0.0},
                 {0.0, hp * u.rho, u.v}}};
}

std::array<double, 3> eigenvalues(const PrimState& u, const ClosureSet& cs) {
    const double lam1 = u.v - cs.q.d1(u.h) * cs.h_fn.d1(u.rho) * u.rho;
    return {lam1, u.v, u.v};
}

EigenDecomposition eigen_decomposition(const PrimState& u, const ClosureSet& cs) {
    const double qp = cs.q.d1(u.h);
    const double hp = cs.h_fn.d1(u.rho);
    const double beta = qp * hp * u.rho;

    EigenDecomposition d;
    d.lambda = {u.v - beta, u.v, u.v};
    d.diag = {u.v, u.v, u.v - beta};
    d.R = Mat3{{{1.0, 0.0, u.rho},
                {0.0, 0.0, -beta},
                {0.0, 1.0, hp * u.rho}}};
    d.near_vacuum = std::abs(beta) < 1e-10;
    const double inv = d.near_vacuum ? 0.0 : 1.0 / beta;
    d.L = Mat3{{{inv * beta, inv * u.rho, 0.0},
                {0.0, inv * hp * u.rho, inv * beta},
                {0.0, -inv, 0.0}}};
    return d;
}

std::array<double, 3> genuine_nonlinearity(const PrimState& u, const ClosureSet& cs) {
    const double qp = cs.q.d1(u.h);
    const double qpp = cs.q.d2(u.h);
    const double hp = cs.h_fn.d1(u.rho);
    const double hpp = cs.h_fn.d2(u.rho);
    const double g = -u.rho * qp * (hp + u.rho * hpp) - qp * hp * u.rho -
                     qpp * hp * hp * u.rho * u.rho;
    return {g, 0.0, 0.0};
}

std::array<double, 3> riemann_invariants(const PrimState& u, const ClosureSet& cs) {
    return {u.v + cs.q(u.h), u.v, u.v};
}

EntropyPair make_square_entropy() {
    EntropyPair p;
    p.F = [](double w) { return w * w; };
    p.dF = [](double w) { return 2.0 * w; };
    p.d2F = [](double) { return 2.0; };
    return p;
}

double entropy(const PrimState& u, const EntropyPair& pair, const ClosureSet& cs) {
    return u.rho * pair.F(omega(u, cs));
}

double entropy_flux(const PrimState& u, const EntropyPair& pair, const ClosureSet& cs) {
    return u.v * u.rho * pair.F(omega(u, cs));
}

double entropy_residual(const SpaceTimeField& f, const EntropyPair& pair,
                        const ClosureSet& cs) {
    f.validate_shape();
    if (!pair.F || !pair.d2F)
        throw InvalidEntropyError("entropy_residual: F and F'' required");

    const std::size_t nx = f.nx(), nt = f.nt();
    const double dx = f.x[1] - f.x[0];
    const double dt = f.t[1] - f.t[0];

    // Precompute eta and psi on the full grid, checking convexity as we go.
    std::vector<double> eta(nx * nt), psi(nx * nt);
    for (std::size_t k = 0; k < nx * nt; ++k) {
        const PrimState u{f.rho[k], f.v[k], f.h[k]};
        const double w = omega(u, cs);
        if (pair.d2F(w) < 0.0)
            throw InvalidEntropyError("entropy_residual: F'' < 0 at omega = " +
                                      std::to_string(w));
        eta[k] = u.rho * pair.F(w);
        psi[k] = u.v * eta[k];
    }

    double worst = 0.0;
    for (std::size_t it = 1; it + 1 < nt; ++it) {
        for (std::size_t ix = 1; ix + 1 < nx; ++ix) {
            const double de_dt =
                (eta[f.idx(it + 1, ix)] - eta[f.idx(it - 1, ix)]) / (2.0 * dt);
            const double dp_dx =
                (psi[f.idx(it, ix + 1)] - psi[f.idx(it, ix - 1)]) / (2.0 * dx);
            worst = std::max(worst, std::abs(de_dt + dp_dx));
        }
    }
    return worst;
}

} // namespace tomflow
