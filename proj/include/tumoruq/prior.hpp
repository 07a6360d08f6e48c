#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCholesky>

#include "tumoruq/fem.hpp"
#include "tumoruq/rng.hpp"

namespace tuq {

// Maps target pointwise variance and correlation length (mm) to the
// reaction/diffusion weights of the squared elliptic covariance operator:
//   delta = sqrt(2)/(sigma rho sqrt(pi)),  gamma = rho/(4 sigma sqrt(2 pi)).
std::pair<double, double> prior_hyperparameters(double sigma2, double rho_mm);

// Gaussian random field with covariance (gamma K + delta M + beta_robin M_b)^{-1}
// M_lump (gamma K + delta M + beta_robin M_b)^{-1}. The Robin boundary mass
// term damps boundary variance artifacts; beta_robin defaults to
// sqrt(gamma delta)/1.42.
class GrfPrior {
public:
    GrfPrior(std::shared_ptr<const FemCache> cache, Field mean, double sigma2, double rho_mm,
             std::optional<double> robin_coeff = std::nullopt);

    int dim() const { return static_cast<int>(mean_.size()); }
    const Vector& mean() const { return mean_; }
    double gamma() const { return gamma_; }
    double delta() const { return delta_; }
    double robin_coeff() const { return robin_; }
    double sigma2_target() const { return sigma2_; }
    double rho() const { return rho_; }
    const SpMat& operator_matrix() const { return op_; }
    const Vector& lumped_mass() const { return lumped_; }
    const FemCache& cache() const { return *cache_; }

    // Precision action R v = A M_lump^{-1} A v.
    Vector apply_R(const Vector& v) const;
    // Covariance action R^{-1} v = A^{-1} M_lump A^{-1} v.
    Vector solve_R(const Vector& v) const;

    double cost(const Vector& m) const;
    Vector grad(const Vector& m) const;

    // Zero-mean fluctuation A^{-1} M_lump^{1/2} n with n iid standard normal.
    Vector sample_fluctuation(Rng& rng) const;
    Vector sample(std::uint64_t seed) const;

private:
    std::shared_ptr<const FemCache> cache_;
    Vector mean_;
    double sigma2_, rho_, gamma_, delta_, robin_;
    SpMat op_;
    Vector lumped_, sqrt_lumped_;
    Eigen::SimplicialLDLT<SpMat> solver_;
};

// Independent blocks over the parameter vector; cross-block precision is zero.
class BlockPrior {
public:
    void add_block(std::string name, std::shared_ptr<const GrfPrior> prior);

    int n_blocks() const { return static_cast<int>(blocks_.size()); }
    int dim() const { return dim_; }
    const GrfPrior& block(int b) const { return *blocks_[b].second; }
    const std::string& block_name(int b) const { return blocks_[b].first; }
    std::pair<int, int> block_range(int b) const;  // (offset, size)

    Vector mean() const;
    Vector apply_R(const Vector& v) const;
    Vector solve_R(const Vector& v) const;
    double cost(const Vector& m) const;
    Vector grad(const Vector& m) const;
    Vector sample(std::uint64_t seed) const;
    Vector sample_fluctuation(std::uint64_t seed) const;

private:
    std::vector<std::pair<std::string, std::shared_ptr<const GrfPrior>>> blocks_;
    int dim_ = 0;
};

}  // namespace tuq
