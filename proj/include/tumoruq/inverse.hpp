#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/SparseCholesky>

#include "tumoruq/forward.hpp"
#include "tumoruq/prior.hpp"

namespace tuq {

enum class HessianMode { gauss_newton, full };

// Layout of the flat parameter vector: [m_D | m_kappa], or with the diffusion
// field split into independent gray/white components composited as
//   m_D = x_gray .* chi_gray + x_white .* (1 - chi_gray).
struct ParameterLayout {
    int n_vertices = 0;
    bool split_diffusion = false;
    Vector chi_gray;  // only used when split

    int dim() const { return (split_diffusion ? 3 : 2) * n_vertices; }
    int n_blocks() const { return split_diffusion ? 3 : 2; }
    std::pair<int, int> block_range(int b) const { return {b * n_vertices, n_vertices}; }

    // Composite physical fields (also valid for directions; the map is linear).
    void to_physical(const Vector& x, Vector& m_D, Vector& m_kappa) const;
    // Adjoint of to_physical applied to nodal gradients (g_D, g_kappa).
    Vector pullback(const Vector& g_D, const Vector& g_kappa) const;
};

ParameterLayout make_layout(const Mesh& mesh, bool split_diffusion);

// Misfit functional over the treated reaction-diffusion model: spatially
// varying (m_D, m_kappa) against timed point observations under an additive
// Gaussian noise model. The prior supplies regularization and the CG
// preconditioner.
struct InverseProblem {
    std::shared_ptr<const FemCache> cache;
    TimeGrid grid;
    TherapySchedule schedule;
    ObservationSet observations;
    std::shared_ptr<const BlockPrior> prior;
    Field u0;
    ParameterLayout layout;
    ForwardOptions forward_opts;

    // Derived on finalize().
    std::shared_ptr<const PointInterpolator> interpolator;
    std::vector<int> obs_nodes;

    void finalize();
    int param_dim() const { return layout.dim(); }
};

// Forward/adjoint state at a fixed parameter point, with the per-step
// linearization factored once. Gradient and Hessian actions reuse the stored
// factorizations, so a Hessian action costs two linearized sweeps.
class LinearizedState {
public:
    LinearizedState(const InverseProblem& problem, const Vector& x);

    double misfit() const { return misfit_; }
    const Vector& misfit_gradient() const { return gradient_; }
    const StateTrajectory& trajectory() const { return trajectory_; }
    const std::vector<Vector>& adjoint() const { return adjoint_; }

    // Misfit-Hessian action (Gauss-Newton part, or the exact second
    // derivative in full mode) in the flat parameter space.
    Vector hessian_action(const Vector& direction, HessianMode mode) const;

    // Tangent of the parameter-to-observable map around the stored state:
    // columns are B ut at the observation nodes.
    Matrix tangent_observables(const Vector& direction) const;
    // Exact transpose of tangent_observables (adjoint sweep with the given
    // observation-space weights).
    Vector adjoint_observables(const Matrix& weights) const;

private:
    const InverseProblem& problem_;
    std::unique_ptr<StepOperator> op_;
    StateTrajectory trajectory_;
    std::vector<std::unique_ptr<Eigen::SimplicialLDLT<SpMat>>> factors_;  // steps 1..N
    std::vector<Vector> adjoint_;                                         // steps 1..N
    Matrix residuals_;  // (B u - d)/sigma^2 per observation column
    double misfit_ = 0.0;
    Vector gradient_;
};

// Forward solve + observation only.
double misfit_cost(const InverseProblem& problem, const Vector& x);
// (gradient, cost) via one forward and one adjoint sweep.
std::pair<Vector, double> misfit_gradient(const InverseProblem& problem, const Vector& x);

double total_cost(const InverseProblem& problem, const Vector& x);
Vector total_gradient(const InverseProblem& problem, const Vector& x);

}  // namespace tuq
