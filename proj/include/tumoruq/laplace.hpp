#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "tumoruq/prior.hpp"

namespace tuq {

using LinearOperator = std::function<Vector(const Vector&)>;

// MAP point plus the leading prior-preconditioned eigenpairs of the misfit
// Hessian: H v_j = lambda_j R v_j with V^T R V = I, lambda sorted descending
// and clamped at zero. Together with the prior this is a low-rank Gaussian
// surrogate of the posterior.
struct LowRankPosterior {
    Vector m_map;
    Vector eigenvalues;   // k, descending, >= 0
    Matrix eigenvectors;  // n x k, R-orthonormal
    std::shared_ptr<const BlockPrior> prior;
    int oversample = 0;

    int rank() const { return static_cast<int>(eigenvalues.size()); }

    // Gamma_post v = Gamma_pr v - V diag(lambda/(1+lambda)) V^T v.
    Vector covariance_apply(const Vector& v) const;
    // Exact prior diagonal (by column solves) minus the low-rank correction,
    // clamped at zero.
    Vector pointwise_variance() const;
    // m_MAP + (I - V diag(1 - 1/sqrt(1+lambda)) V^T R) n_pr with n_pr a
    // zero-mean prior fluctuation; deterministic per seed.
    Vector sample(std::uint64_t seed) const;
};

// Double-pass randomized solve of the generalized eigenvalue problem
// H v = lambda R v for a symmetric positive semidefinite misfit-Hessian
// action. Returns k pairs computed with `oversample` extra probe vectors.
std::pair<Vector, Matrix> randomized_gevp(const LinearOperator& hessian_op,
                                          const BlockPrior& prior, int k, int oversample = 10,
                                          std::uint64_t seed = 0);

LowRankPosterior make_laplace_posterior(Vector m_map, std::shared_ptr<const BlockPrior> prior,
                                        const LinearOperator& hessian_op, int k,
                                        int oversample = 10, std::uint64_t seed = 0);

}  // namespace tuq
