#ifndef TOMFLOW_WAVES_HPP
#define TOMFLOW_WAVES_HPP

#include <array>
#include <functional>

#include "tomflow/state.hpp"

namespace tomflow {

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Quasilinear matrix Q(u) of the primitive formulation.
Mat3 quasilinear_matrix(const PrimState& u, const ClosureSet& cs);

/// Eigenvalues in the labeled order (lambda_1, lambda_2, lambda_3)
/// = (v - q'(h) h'(rho) rho, v, v).
std::array<double, 3> eigenvalues(const PrimState& u, const ClosureSet& cs);

/// Right/left eigenvector matrices in their reference normalization; the
/// column (row) order of R (L) corresponds to the diagonal `diag` = (v, v,
/// lambda_1), i.e. Q R = R D and L Q = D L with D = diag(diag). `lambda`
/// carries the labeled order (lambda_1, v, v). The left matrix carries the
/// prefactor [q' h' rho]^-1; `near_vacuum` flags q' h' rho < 1e-10 where the
/// normalization is ill conditioned.
struct EigenDecomposition {
    std::array<double, 3> lambda{};
    std::array<double, 3> diag{};
    Mat3 R{};
    Mat3 L{};
    bool near_vacuum = false;
};

EigenDecomposition eigen_decomposition(const PrimState& u, const ClosureSet& cs);

/// grad(lambda_k) . r_k for k = 1,2,3. Fields 2 and 3 are linearly
/// degenerate, so the last two entries are identically zero; the first is
///   -rho q'(h) (h'(rho) + rho h''(rho)) - q'(h) h'(rho) rho
///   - q''(h) h'(rho)^2 rho^2.
std::array<double, 3> genuine_nonlinearity(const PrimState& u, const ClosureSet& cs);

/// (v + q(h), v, v).
std::array<double, 3> riemann_invariants(const PrimState& u, const ClosureSet& cs);

/// Convex generator F for an entropy pair eta = rho F(omega),
/// psi = v rho F(omega).
struct EntropyPair {
    std::function<double(double)> F;
    std::function<double(double)> dF;
    std::function<double(double)> d2F;
};

EntropyPair make_square_entropy(); // F(w) = w^2

double entropy(const PrimState& u, const EntropyPair& pair, const ClosureSet& cs);
double entropy_flux(const PrimState& u, const EntropyPair& pair, const ClosureSet& cs);

/// Max-norm central-difference residual of d_t eta + d_x psi on smooth
/// samples. Throws InvalidEntropyError when F'' < 0 at any sampled omega.
double entropy_residual(const SpaceTimeField& f, const EntropyPair& pair,
                        const ClosureSet& cs);

} // namespace tomflow

#endif
