#include "tumoruq/prior.hpp"

#include <cmath>
#include <stdexcept>

#include "tumoruq/errors.hpp"

namespace tuq {

std::pair<double, double> prior_hyperparameters(double sigma2, double rho_mm) {
    if (!(sigma2 > 0) || !(rho_mm > 0)) {
        throw std::invalid_argument("prior_hyperparameters: sigma2 and rho must be positive");
    }
    const double sigma = std::sqrt(sigma2);
    const double delta = std::sqrt(2.0) / (sigma * rho_mm * std::sqrt(M_PI));
    const double gamma = rho_mm / (4.0 * sigma * std::sqrt(2.0 * M_PI));
    return {gamma, delta};
}

GrfPrior::GrfPrior(std::shared_ptr<const FemCache> cache, Field mean, double sigma2, double rho_mm,
                   std::optional<double> robin_coeff)
    : cache_(std::move(cache)), sigma2_(sigma2), rho_(rho_mm) {
    validate_field(mean, cache_->mesh(), "GrfPrior(mean)");
    mean_ = mean.values;
    std::tie(gamma_, delta_) = prior_hyperparameters(sigma2, rho_mm);
    robin_ = robin_coeff.value_or(std::sqrt(gamma_ * delta_) / 1.42);
    if (robin_ < 0) throw std::invalid_argument("GrfPrior: robin coefficient must be >= 0");

    const SpMat stiffness = cache_->matrix_from_values(cache_->unit_stiffness_values());
    const SpMat mass = assemble_mass(*cache_);
    op_ = gamma_ * stiffness + delta_ * mass;
    if (robin_ > 0) op_ = op_ + robin_ * assemble_boundary_mass(*cache_);
    op_.makeCompressed();

    lumped_ = assemble_lumped_mass(*cache_);
    sqrt_lumped_ = lumped_.cwiseSqrt();

    solver_.compute(op_);
    if (solver_.info() != Eigen::Success) {
        throw SolverError("GrfPrior: factorization of the elliptic operator failed");
    }
}

Vector GrfPrior::apply_R(const Vector& v) const {
    return op_ * (lumped_.cwiseInverse().cwiseProduct(op_ * v));
}

Vector GrfPrior::solve_R(const Vector& v) const {
    Vector w = solver_.solve(v);
    if (solver_.info() != Eigen::Success) throw SolverError("GrfPrior: solve failed");
    return solver_.solve(lumped_.cwiseProduct(w).eval());
}

double GrfPrior::cost(const Vector& m) const {
    const Vector d = m - mean_;
    return 0.5 * d.dot(apply_R(d));
}

Vector GrfPrior::grad(const Vector& m) const { return apply_R(m - mean_); }

Vector GrfPrior::sample_fluctuation(Rng& rng) const {
    Vector n(dim());
    for (int i = 0; i < dim(); ++i) n[i] = rng.normal();
    return solver_.solve(sqrt_lumped_.cwiseProduct(n).eval());
}

Vector GrfPrior::sample(std::uint64_t seed) const {
    Rng rng(seed);
    return mean_ + sample_fluctuation(rng);
}

void BlockPrior::add_block(std::string name, std::shared_ptr<const GrfPrior> prior) {
    dim_ += prior->dim();
    blocks_.emplace_back(std::move(name), std::move(prior));
}

std::pair<int, int> BlockPrior::block_range(int b) const {
    int offset = 0;
    for (int i = 0; i < b; ++i) offset += blocks_[i].second->dim();
    return {offset, blocks_[b].second->dim()};
}

Vector BlockPrior::mean() const {
    Vector out(dim_);
    int off = 0;
    for (const auto& [name, p] : blocks_) {
        out.segment(off, p->dim()) = p->mean();
        off += p->dim();
    }
    return out;
}

Vector BlockPrior::apply_R(const Vector& v) const {
    Vector out(dim_);
    int off = 0;
    for (const auto& [name, p] : blocks_) {
        out.segment(off, p->dim()) = p->apply_R(v.segment(off, p->dim()));
        off += p->dim();
    }
    return out;
}

Vector BlockPrior::solve_R(const Vector& v) const {
    Vector out(dim_);
    int off = 0;
    for (const auto& [name, p] : blocks_) {
        out.segment(off, p->dim()) = p->solve_R(v.segment(off, p->dim()));
        off += p->dim();
    }
    return out;
}

double BlockPrior::cost(const Vector& m) const {
    double total = 0.0;
    int off = 0;
    for (const auto& [name, p] : blocks_) {
        total += p->cost(m.segment(off, p->dim()));
        off += p->dim();
    }
    return total;
}

Vector BlockPrior::grad(const Vector& m) const {
    Vector out(dim_);
    int off = 0;
    for (const auto& [name, p] : blocks_) {
        out.segment(off, p->dim()) = p->grad(m.segment(off, p->dim()));
        off += p->dim();
    }
    return out;
}

Vector BlockPrior::sample_fluctuation(std::uint64_t seed) const {
    Vector out(dim_);
    int off = 0;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto& p = blocks_[b].second;
        Rng rng(mix_seed(seed, b));
        out.segment(off, p->dim()) = p->sample_fluctuation(rng);
        off += p->dim();
    }
    return out;
}

Vector BlockPrior::sample(std::uint64_t seed) const { return mean() + sample_fluctuation(seed); }

}  // namespace tuq
