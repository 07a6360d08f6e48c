#include "tumoruq/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "tumoruq/rng.hpp"

namespace tuq {

namespace {

// R-orthonormalization of the columns of Y (modified Gram-Schmidt, two
// passes). Z receives R * Q. Columns that collapse (range deficiency, e.g. a
// zero misfit Hessian) are replaced by fresh random directions so the basis
// stays well defined; their Ritz values are then ~0.
void r_orthonormalize(const BlockPrior& prior, Matrix& Q, Matrix& Z, Rng& rng) {
    const int l = static_cast<int>(Q.cols());
    const int n = static_cast<int>(Q.rows());
    for (int j = 0; j < l; ++j) {
        Vector v = Q.col(j);
        const double base_norm = std::sqrt(std::max(v.dot(prior.apply_R(v)), 0.0));
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i < j; ++i) {
                v -= Q.col(i) * Z.col(i).dot(v);
            }
        }
        Vector z = prior.apply_R(v);
        double norm = std::sqrt(std::max(v.dot(z), 0.0));
        int redraws = 0;
        while (norm <= 1e-13 * std::max(base_norm, 1.0) && redraws < 50) {
            for (int i = 0; i < n; ++i) v[i] = rng.normal();
            for (int pass = 0; pass < 2; ++pass) {
                for (int i = 0; i < j; ++i) v -= Q.col(i) * Z.col(i).dot(v);
            }
            z = prior.apply_R(v);
            norm = std::sqrt(std::max(v.dot(z), 0.0));
            ++redraws;
        }
        Q.col(j) = v / norm;
        Z.col(j) = z / norm;
    }
}

}  // namespace

std::pair<Vector, Matrix> randomized_gevp(const LinearOperator& hessian_op,
                                          const BlockPrior& prior, int k, int oversample,
                                          std::uint64_t seed) {
    const int n = prior.dim();
    if (k < 1 || k > n) {
        throw std::invalid_argument("randomized_gevp: rank must lie in [1, parameter dimension]");
    }
    if (oversample < 0) throw std::invalid_argument("randomized_gevp: oversample must be >= 0");
    const int l = std::min(k + oversample, n);

    Rng rng(mix_seed(seed, 0xeb5));
    Matrix omega(n, l);
    for (int j = 0; j < l; ++j) {
        for (int i = 0; i < n; ++i) omega(i, j) = rng.normal();
    }

    // Pass 1: range of Gamma_pr H.
    Matrix Y(n, l);
    for (int j = 0; j < l; ++j) Y.col(j) = prior.solve_R(hessian_op(omega.col(j)));

    Matrix Q = Y;
    Matrix Z(n, l);
    r_orthonormalize(prior, Q, Z, rng);

    // Pass 2: Rayleigh-Ritz on the R-orthonormal basis.
    Matrix HQ(n, l);
    for (int j = 0; j < l; ++j) HQ.col(j) = hessian_op(Q.col(j));
    Matrix T = Q.transpose() * HQ;
    T = 0.5 * (T + T.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> eig(T);
    Vector lambda(k);
    Matrix V(n, k);
    for (int j = 0; j < k; ++j) {
        const int src = l - 1 - j;  // ascending -> descending
        lambda[j] = std::max(eig.eigenvalues()[src], 0.0);
        V.col(j) = Q * eig.eigenvectors().col(src);
    }
    return {lambda, V};
}

LowRankPosterior make_laplace_posterior(Vector m_map, std::shared_ptr<const BlockPrior> prior,
                                        const LinearOperator& hessian_op, int k, int oversample,
                                        std::uint64_t seed) {
    LowRankPosterior post;
    post.m_map = std::move(m_map);
    post.prior = prior;
    post.oversample = oversample;
    std::tie(post.eigenvalues, post.eigenvectors) =
        randomized_gevp(hessian_op, *prior, k, oversample, seed);
    return post;
}

Vector LowRankPosterior::covariance_apply(const Vector& v) const {
    Vector out = prior->solve_R(v);
    if (rank() > 0) {
        const Vector w = eigenvectors.transpose() * v;
        const Vector scale = eigenvalues.array() / (1.0 + eigenvalues.array());
        out -= eigenvectors * scale.cwiseProduct(w);
    }
    return out;
}

Vector LowRankPosterior::pointwise_variance() const {
    const int n = prior->dim();
    Vector var(n);
    for (int b = 0; b < prior->n_blocks(); ++b) {
        const auto [offset, size] = prior->block_range(b);
        const GrfPrior& block = prior->block(b);
        Vector e = Vector::Zero(size);
        for (int i = 0; i < size; ++i) {
            e[i] = 1.0;
            var[offset + i] = block.solve_R(e)[i];
            e[i] = 0.0;
        }
    }
    for (int j = 0; j < rank(); ++j) {
        const double scale = eigenvalues[j] / (1.0 + eigenvalues[j]);
        var -= scale * eigenvectors.col(j).cwiseAbs2();
    }
    return var.cwiseMax(0.0);
}

Vector LowRankPosterior::sample(std::uint64_t seed) const {
    Vector fluct = prior->sample_fluctuation(seed);
    if (rank() > 0) {
        const Vector w = eigenvectors.transpose() * prior->apply_R(fluct);
        const Vector damp =
            Vector::Ones(rank()) - (Vector::Ones(rank()) + eigenvalues).cwiseSqrt().cwiseInverse();
        fluct -= eigenvectors * damp.cwiseProduct(w);
    }
    return m_map + fluct;
}

}  // namespace tuq
