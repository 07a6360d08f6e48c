#include "tumoruq/inverse.hpp"

#include <cmath>
#include <stdexcept>

#include "tumoruq/errors.hpp"

namespace tuq {

void ParameterLayout::to_physical(const Vector& x, Vector& m_D, Vector& m_kappa) const {
    if (x.size() != dim()) throw std::invalid_argument("ParameterLayout: bad vector size");
    if (split_diffusion) {
        m_D = x.segment(0, n_vertices).cwiseProduct(chi_gray) +
              x.segment(n_vertices, n_vertices).cwiseProduct(Vector::Ones(n_vertices) - chi_gray);
        m_kappa = x.segment(2 * n_vertices, n_vertices);
    } else {
        m_D = x.segment(0, n_vertices);
        m_kappa = x.segment(n_vertices, n_vertices);
    }
}

Vector ParameterLayout::pullback(const Vector& g_D, const Vector& g_kappa) const {
    Vector out(dim());
    if (split_diffusion) {
        out.segment(0, n_vertices) = g_D.cwiseProduct(chi_gray);
        out.segment(n_vertices, n_vertices) =
            g_D.cwiseProduct(Vector::Ones(n_vertices) - chi_gray);
        out.segment(2 * n_vertices, n_vertices) = g_kappa;
    } else {
        out.segment(0, n_vertices) = g_D;
        out.segment(n_vertices, n_vertices) = g_kappa;
    }
    return out;
}

ParameterLayout make_layout(const Mesh& mesh, bool split_diffusion) {
    ParameterLayout layout;
    layout.n_vertices = mesh.n_vertices();
    layout.split_diffusion = split_diffusion;
    if (split_diffusion) layout.chi_gray = gray_indicator(mesh);
    return layout;
}

void InverseProblem::finalize() {
    validate_field(u0, cache->mesh(), "InverseProblem(u0)");
    if (layout.n_vertices != cache->mesh().n_vertices()) {
        throw std::invalid_argument("InverseProblem: layout does not match the mesh");
    }
    if (prior && prior->dim() != layout.dim()) {
        throw std::invalid_argument("InverseProblem: prior dimension " +
                                    std::to_string(prior->dim()) + " != parameter dimension " +
                                    std::to_string(layout.dim()));
    }
    if (!observations.times.empty()) {
        observations.validate(grid, cache->mesh().dim);
    }
    interpolator = std::make_shared<PointInterpolator>(*cache, observations.points);
    obs_nodes.clear();
    for (double t : observations.times) obs_nodes.push_back(grid.node_index(t));
}

namespace {

// Per-cell gradient accumulation shared by the adjoint gradient and the
// Hessian accumulations: for every cell,
//   g_D  += e^{mD_c} (grad a . grad b) |c| / (d+1) at each vertex
//   g_k  -= e^{mk_c} abar(1-abar) bbar |c| / (d+1)     (logistic weight form)
// where a is a state-like and b an adjoint-like nodal vector.
void accumulate_blocks(const StepOperator& op, const Vector& state, const Vector& adj,
                       Vector& g_D, Vector& g_kappa) {
    const Mesh& m = op.cache().mesh();
    const int nv = m.dim + 1;
    for (int c = 0; c < m.n_cells(); ++c) {
        const double vol = op.cache().volume(c);
        const auto g = op.cache().grads(c);
        Eigen::RowVectorXd grad_u = Eigen::RowVectorXd::Zero(m.dim);
        Eigen::RowVectorXd grad_p = Eigen::RowVectorXd::Zero(m.dim);
        double ubar = 0.0, pbar = 0.0;
        for (int i = 0; i < nv; ++i) {
            const int vtx = m.cells(c, i);
            grad_u += state[vtx] * g.row(i);
            grad_p += adj[vtx] * g.row(i);
            ubar += state[vtx];
            pbar += adj[vtx];
        }
        ubar /= nv;
        pbar /= nv;
        const double wD = op.exp_mD_cell(c) * grad_u.dot(grad_p) * vol / nv;
        const double wk = op.exp_mkappa_cell(c) * ubar * (1.0 - ubar) * pbar * vol / nv;
        for (int i = 0; i < nv; ++i) {
            const int vtx = m.cells(c, i);
            g_D[vtx] += wD;
            g_kappa[vtx] -= wk;
        }
    }
}

// Second-order accumulation terms of the full Hessian that carry the first
// adjoint p: per cell,
//   g_D += e^{mD_c} [ mtD_c (grad u . grad p) + (grad ut . grad p) ] |c|/(d+1)
//   g_k -= e^{mk_c} [ mtk_c ubar(1-ubar) + (1-2 ubar) utbar ] pbar |c|/(d+1)
void accumulate_second_order(const StepOperator& op, const Vector& state, const Vector& adj,
                             const Vector& state_incr, const Vector& mtD, const Vector& mtk,
                             Vector& g_D, Vector& g_kappa) {
    const Mesh& m = op.cache().mesh();
    const int nv = m.dim + 1;
    for (int c = 0; c < m.n_cells(); ++c) {
        const double vol = op.cache().volume(c);
        const auto g = op.cache().grads(c);
        Eigen::RowVectorXd grad_u = Eigen::RowVectorXd::Zero(m.dim);
        Eigen::RowVectorXd grad_p = Eigen::RowVectorXd::Zero(m.dim);
        Eigen::RowVectorXd grad_ut = Eigen::RowVectorXd::Zero(m.dim);
        double ubar = 0.0, pbar = 0.0, utbar = 0.0, mtD_bar = 0.0, mtk_bar = 0.0;
        for (int i = 0; i < nv; ++i) {
            const int vtx = m.cells(c, i);
            grad_u += state[vtx] * g.row(i);
            grad_p += adj[vtx] * g.row(i);
            grad_ut += state_incr[vtx] * g.row(i);
            ubar += state[vtx];
            pbar += adj[vtx];
            utbar += state_incr[vtx];
            mtD_bar += mtD[vtx];
            mtk_bar += mtk[vtx];
        }
        ubar /= nv;
        pbar /= nv;
        utbar /= nv;
        mtD_bar /= nv;
        mtk_bar /= nv;
        const double wD = op.exp_mD_cell(c) *
                          (mtD_bar * grad_u.dot(grad_p) + grad_ut.dot(grad_p)) * vol / nv;
        const double wk = op.exp_mkappa_cell(c) *
                          (mtk_bar * ubar * (1.0 - ubar) + (1.0 - 2.0 * ubar) * utbar) * pbar *
                          vol / nv;
        for (int i = 0; i < nv; ++i) {
            const int vtx = m.cells(c, i);
            g_D[vtx] += wD;
            g_kappa[vtx] -= wk;
        }
    }
}

}  // namespace

LinearizedState::LinearizedState(const InverseProblem& problem, const Vector& x)
    : problem_(problem) {
    const Mesh& mesh = problem.cache->mesh();
    Vector mD, mk;
    problem.layout.to_physical(x, mD, mk);
    op_ = std::make_unique<StepOperator>(problem.cache, Field(problem.u0.mesh, mD),
                                         Field(problem.u0.mesh, mk), problem.schedule,
                                         problem.grid);
    trajectory_ = solve_forward(*op_, problem.u0, problem.forward_opts);

    const int n_steps = problem.grid.n_steps;
    factors_.resize(n_steps);
    for (int n = 1; n <= n_steps; ++n) {
        auto solver = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
        solver->compute(op_->step_matrix(n, trajectory_.pre_rt_state(n)));
        if (solver->info() != Eigen::Success) {
            throw SolverError("linearized step factorization failed at step " + std::to_string(n));
        }
        factors_[n - 1] = std::move(solver);
    }

    // Misfit and scaled residuals.
    const auto& B = *problem.interpolator;
    const double inv_var = 1.0 / problem.observations.noise_variance;
    const long n_times = static_cast<long>(problem.obs_nodes.size());
    residuals_.resize(B.n_points(), n_times);
    for (long i = 0; i < n_times; ++i) {
        const Vector diff = B.interpolate(trajectory_.state(problem.obs_nodes[i])) -
                            problem.observations.data.col(i);
        misfit_ += 0.5 * inv_var * diff.squaredNorm();
        residuals_.col(i) = inv_var * diff;
    }

    // Adjoint sweep: nu_n = -B^T r_n + (M/dt) p_{n+1}, p_n = A_n^{-1}(s_n nu_n).
    const int n_verts = mesh.n_vertices();
    adjoint_.assign(n_steps, Vector());
    Vector nu = Vector::Zero(n_verts);
    Vector g_D = Vector::Zero(n_verts);
    Vector g_k = Vector::Zero(n_verts);
    for (int n = n_steps; n >= 1; --n) {
        for (long i = 0; i < n_times; ++i) {
            if (problem.obs_nodes[i] == n) nu -= B.scatter(residuals_.col(i));
        }
        Vector p = factors_[n - 1]->solve((op_->rt_multiplier(n) * nu).eval());
        if (factors_[n - 1]->info() != Eigen::Success) {
            throw SolverError("adjoint solve failed at step " + std::to_string(n));
        }
        accumulate_blocks(*op_, trajectory_.pre_rt_state(n), p, g_D, g_k);
        nu = op_->lumped_mass().cwiseProduct(p) / problem.grid.dt;
        adjoint_[n - 1] = std::move(p);
    }
    gradient_ = problem.layout.pullback(g_D, g_k);
}

Vector LinearizedState::hessian_action(const Vector& direction, HessianMode mode) const {
    const InverseProblem& problem = problem_;
    const Mesh& mesh = problem.cache->mesh();
    const int n_verts = mesh.n_vertices();
    const int n_steps = problem.grid.n_steps;
    const auto& B = *problem.interpolator;
    const double inv_var = 1.0 / problem.observations.noise_variance;
    const long n_times = static_cast<long>(problem.obs_nodes.size());

    Vector mtD, mtk;
    problem.layout.to_physical(direction, mtD, mtk);

    // Incremental forward: linearized dynamics around the stored trajectory,
    // zero initial condition, parameter sources per step.
    std::vector<Vector> incr_pre(n_steps);
    Matrix incr_obs(B.n_points(), n_times);
    Vector ut_post = Vector::Zero(n_verts);
    for (int n = 1; n <= n_steps; ++n) {
        const Vector& u_pre = trajectory_.pre_rt_state(n);
        Vector rhs = op_->lumped_mass().cwiseProduct(ut_post) / problem.grid.dt;
        rhs -= op_->dK_times(mtD, u_pre);
        rhs += op_->db_times(mtk, u_pre);
        Vector ut = factors_[n - 1]->solve(rhs);
        ut_post = op_->rt_multiplier(n) * ut;
        for (long i = 0; i < n_times; ++i) {
            if (problem.obs_nodes[i] == n) incr_obs.col(i) = B.interpolate(ut_post);
        }
        incr_pre[n - 1] = std::move(ut);
    }
    for (long i = 0; i < n_times; ++i) {
        if (problem.obs_nodes[i] == 0) incr_obs.col(i).setZero();
    }

    // Incremental adjoint with sources -B^T (B ut)/sigma^2, plus the
    // linearization of the step matrix applied to p in full mode.
    Vector g_D = Vector::Zero(n_verts);
    Vector g_k = Vector::Zero(n_verts);
    Vector nu = Vector::Zero(n_verts);
    for (int n = n_steps; n >= 1; --n) {
        for (long i = 0; i < n_times; ++i) {
            if (problem.obs_nodes[i] == n) nu -= B.scatter((inv_var * incr_obs.col(i)).eval());
        }
        Vector rhs = op_->rt_multiplier(n) * nu;
        const Vector& u_pre = trajectory_.pre_rt_state(n);
        if (mode == HessianMode::full) {
            const Vector& p = adjoint_[n - 1];
            rhs -= op_->dK_times(mtD, p);
            rhs += op_->dJ_times(mtk, incr_pre[n - 1], u_pre, p);
        }
        Vector pt = factors_[n - 1]->solve(rhs);
        accumulate_blocks(*op_, u_pre, pt, g_D, g_k);
        if (mode == HessianMode::full) {
            accumulate_second_order(*op_, u_pre, adjoint_[n - 1], incr_pre[n - 1], mtD, mtk, g_D,
                                    g_k);
        }
        nu = op_->lumped_mass().cwiseProduct(pt) / problem.grid.dt;
    }
    return problem.layout.pullback(g_D, g_k);
}

Matrix LinearizedState::tangent_observables(const Vector& direction) const {
    const InverseProblem& problem = problem_;
    const auto& B = *problem.interpolator;
    const int n_steps = problem.grid.n_steps;
    const long n_times = static_cast<long>(problem.obs_nodes.size());
    Vector mtD, mtk;
    problem.layout.to_physical(direction, mtD, mtk);

    Matrix out = Matrix::Zero(B.n_points(), n_times);
    Vector ut_post = Vector::Zero(problem.cache->mesh().n_vertices());
    for (int n = 1; n <= n_steps; ++n) {
        const Vector& u_pre = trajectory_.pre_rt_state(n);
        Vector rhs = op_->lumped_mass().cwiseProduct(ut_post) / problem.grid.dt;
        rhs -= op_->dK_times(mtD, u_pre);
        rhs += op_->db_times(mtk, u_pre);
        ut_post = op_->rt_multiplier(n) * factors_[n - 1]->solve(rhs);
        for (long i = 0; i < n_times; ++i) {
            if (problem.obs_nodes[i] == n) out.col(i) = B.interpolate(ut_post);
        }
    }
    return out;
}

Vector LinearizedState::adjoint_observables(const Matrix& weights) const {
    const InverseProblem& problem = problem_;
    const auto& B = *problem.interpolator;
    const int n_steps = problem.grid.n_steps;
    const long n_times = static_cast<long>(problem.obs_nodes.size());
    const int n_verts = problem.cache->mesh().n_vertices();

    Vector g_D = Vector::Zero(n_verts);
    Vector g_k = Vector::Zero(n_verts);
    Vector nu = Vector::Zero(n_verts);
    for (int n = n_steps; n >= 1; --n) {
        for (long i = 0; i < n_times; ++i) {
            if (problem.obs_nodes[i] == n) nu -= B.scatter(weights.col(i));
        }
        Vector p = factors_[n - 1]->solve((op_->rt_multiplier(n) * nu).eval());
        accumulate_blocks(*op_, trajectory_.pre_rt_state(n), p, g_D, g_k);
        nu = op_->lumped_mass().cwiseProduct(p) / problem.grid.dt;
    }
    return problem.layout.pullback(g_D, g_k);
}

double misfit_cost(const InverseProblem& problem, const Vector& x) {
    Vector mD, mk;
    problem.layout.to_physical(x, mD, mk);
    StepOperator op(problem.cache, Field(problem.u0.mesh, mD), Field(problem.u0.mesh, mk),
                    problem.schedule, problem.grid);
    StateTrajectory traj = solve_forward(op, problem.u0, problem.forward_opts);
    const auto& B = *problem.interpolator;
    const double inv_var = 1.0 / problem.observations.noise_variance;
    double cost = 0.0;
    for (std::size_t i = 0; i < problem.obs_nodes.size(); ++i) {
        const Vector diff =
            B.interpolate(traj.state(problem.obs_nodes[i])) - problem.observations.data.col(i);
        cost += 0.5 * inv_var * diff.squaredNorm();
    }
    return cost;
}

std::pair<Vector, double> misfit_gradient(const InverseProblem& problem, const Vector& x) {
    LinearizedState state(problem, x);
    return {state.misfit_gradient(), state.misfit()};
}

double total_cost(const InverseProblem& problem, const Vector& x) {
    return misfit_cost(problem, x) + problem.prior->cost(x);
}

Vector total_gradient(const InverseProblem& problem, const Vector& x) {
    LinearizedState state(problem, x);
    return state.misfit_gradient() + problem.prior->grad(x);
}

}  // namespace tuq
