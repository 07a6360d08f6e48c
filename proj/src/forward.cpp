#include "tumoruq/forward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "tumoruq/errors.hpp"
#include "tumoruq/rng.hpp"

namespace tuq {

double TherapySchedule::default_beta_ct_rate() {
    // 1.8 hour clearance half-life expressed as a decay rate in 1/day.
    return std::log(2.0) / (1.8 / 24.0);
}

void TherapySchedule::validate() const {
    if (alpha_rt < 0 || beta_rt < 0 || alpha_ct < 0 || beta_ct_rate < 0) {
        throw std::invalid_argument("TherapySchedule: pharmacodynamic constants must be >= 0");
    }
    for (const auto& e : rt_events) {
        if (e.dose_gy < 0) throw std::invalid_argument("TherapySchedule: negative RT dose");
    }
    for (const auto& d : ct_doses) {
        if (d.dose < 0) throw std::invalid_argument("TherapySchedule: negative CT dose");
    }
}

double rt_surviving_fraction(double dose_gy, double alpha_rt, double beta_rt) {
    if (dose_gy < 0) throw std::invalid_argument("rt_surviving_fraction: negative dose");
    return std::exp(-alpha_rt * dose_gy - beta_rt * dose_gy * dose_gy);
}

double chemo_rate(double t_days, const TherapySchedule& schedule) {
    if (schedule.ct_doses.empty()) return 0.0;
    double rate = 0.0;
    bool any = false;
    for (const auto& dose : schedule.ct_doses) {
        if (dose.time_days <= t_days + 1e-12) {
            rate += std::exp(-schedule.beta_ct_rate * (t_days - dose.time_days));
            any = true;
        }
    }
    return any ? schedule.alpha_ct * rate : 0.0;
}

double chemo_rate_step_average(double t_begin, double t_end, const TherapySchedule& schedule) {
    if (!(t_end > t_begin)) throw std::invalid_argument("chemo_rate_step_average: empty interval");
    double integral = 0.0;
    for (const auto& dose : schedule.ct_doses) {
        const double lo = std::max(t_begin, dose.time_days);
        if (t_end <= dose.time_days) continue;
        if (schedule.beta_ct_rate == 0.0) {
            integral += t_end - lo;
        } else {
            integral += (std::exp(-schedule.beta_ct_rate * (lo - dose.time_days)) -
                         std::exp(-schedule.beta_ct_rate * (t_end - dose.time_days))) /
                        schedule.beta_ct_rate;
        }
    }
    return schedule.alpha_ct * integral / (t_end - t_begin);
}

TimeGrid::TimeGrid(double t0_days, double tf_days, double dt_days)
    : t0(t0_days), tf(tf_days), dt(dt_days) {
    if (!(dt > 0)) throw std::invalid_argument("TimeGrid: dt must be positive");
    if (tf < t0) throw std::invalid_argument("TimeGrid: tf must be >= t0");
    const double span = tf - t0;
    n_steps = static_cast<int>(std::llround(span / dt));
    if (std::abs(n_steps * dt - span) > 1e-9 * std::max(1.0, span)) {
        throw std::invalid_argument("TimeGrid: (tf - t0)/dt must be integral to 1e-9");
    }
}

int TimeGrid::node_index(double t_days) const {
    const int n = static_cast<int>(std::llround((t_days - t0) / dt));
    if (n < 0 || n > n_steps) return -1;
    if (std::abs(node_time(n) - t_days) > 1e-9 * std::max(1.0, std::abs(t_days))) return -1;
    return n;
}

void ObservationSet::validate(const TimeGrid& grid, int dim) const {
    if (!(noise_variance > 0)) {
        throw std::invalid_argument("ObservationSet: noise_variance must be positive");
    }
    if (points.cols() != dim) throw std::invalid_argument("ObservationSet: points must be n x dim");
    if (data.rows() != points.rows() || data.cols() != static_cast<long>(times.size())) {
        throw std::invalid_argument("ObservationSet: data must be n_points x n_times");
    }
    if (!data.allFinite()) throw std::invalid_argument("ObservationSet: data has non-finite entries");
    for (double t : times) {
        if (grid.node_index(t) < 0) {
            throw std::invalid_argument("ObservationSet: time " + std::to_string(t) +
                                        " does not coincide with a grid node");
        }
    }
}

StepOperator::StepOperator(std::shared_ptr<const FemCache> cache, const Field& m_D,
                           const Field& m_kappa, const TherapySchedule& schedule,
                           const TimeGrid& grid)
    : cache_(std::move(cache)), grid_(grid) {
    const Mesh& m = cache_->mesh();
    validate_field(m_D, m, "StepOperator(m_D)");
    validate_field(m_kappa, m, "StepOperator(m_kappa)");
    schedule.validate();

    lumped_ = assemble_lumped_mass(*cache_);
    stiffness_values_.assign(cache_->skeleton().nonZeros(), 0.0);
    const int nv = m.dim + 1;
    exp_mD_cell_.resize(m.n_cells());
    exp_mk_cell_.resize(m.n_cells());
    for (int c = 0; c < m.n_cells(); ++c) {
        double md = 0.0, mk = 0.0;
        for (int i = 0; i < nv; ++i) {
            md += m_D.values[m.cells(c, i)];
            mk += m_kappa.values[m.cells(c, i)];
        }
        exp_mD_cell_[c] = std::exp(md / nv);
        exp_mk_cell_[c] = std::exp(mk / nv);
        if (!std::isfinite(exp_mD_cell_[c]) || !std::isfinite(exp_mk_cell_[c])) {
            throw AssemblyError("non-finite coefficient on cell " + std::to_string(c));
        }
        const double vol = cache_->volume(c);
        const auto g = cache_->grads(c);
        for (int i = 0; i < nv; ++i) {
            for (int j = 0; j < nv; ++j) {
                stiffness_values_[cache_->entry_offset(c, i, j)] +=
                    exp_mD_cell_[c] * vol * g.row(i).dot(g.row(j));
            }
        }
    }

    chemo_.resize(grid_.n_steps + 1);
    rt_mult_.assign(grid_.n_steps + 1, 1.0);
    chemo_[0] = 0.0;
    for (int n = 1; n <= grid_.n_steps; ++n) {
        chemo_[n] = chemo_rate_step_average(grid_.node_time(n - 1), grid_.node_time(n), schedule);
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(grid_.tf));
    for (const auto& event : schedule.rt_events) {
        if (event.time_days <= grid_.t0 + tol) continue;  // before the window: no state to act on
        if (event.time_days > grid_.tf + tol) {
            throw std::invalid_argument("TherapySchedule: RT event at day " +
                                        std::to_string(event.time_days) +
                                        " lies after the simulation window");
        }
        const int node = grid_.node_index(event.time_days);
        if (node < 0) {
            throw std::invalid_argument("TherapySchedule: RT event at day " +
                                        std::to_string(event.time_days) +
                                        " does not coincide with a grid node");
        }
        const double surviving =
            rt_surviving_fraction(event.dose_gy, schedule.alpha_rt, schedule.beta_rt);
        rt_mult_[node] *= 1.0 - schedule.rt_gamma * (1.0 - surviving);
    }
}

Vector StepOperator::residual(int node, const Vector& u_next, const Vector& u_prev) const {
    const Mesh& m = cache_->mesh();
    const int nv = m.dim + 1;
    Vector r = lumped_.cwiseProduct((u_next - u_prev) / grid_.dt + chemo_[node] * u_next);
    // K u_next and -b(u_next) accumulated per cell.
    for (int c = 0; c < m.n_cells(); ++c) {
        const double vol = cache_->volume(c);
        const auto g = cache_->grads(c);
        Eigen::RowVectorXd grad_u = Eigen::RowVectorXd::Zero(m.dim);
        double ubar = 0.0;
        for (int i = 0; i < nv; ++i) {
            grad_u += u_next[m.cells(c, i)] * g.row(i);
            ubar += u_next[m.cells(c, i)];
        }
        ubar /= nv;
        const double react = exp_mk_cell_[c] * ubar * (1.0 - ubar) * vol / nv;
        for (int i = 0; i < nv; ++i) {
            r[m.cells(c, i)] += exp_mD_cell_[c] * vol * g.row(i).dot(grad_u) - react;
        }
    }
    return r;
}

SpMat StepOperator::step_matrix(int node, const Vector& u_next) const {
    const Mesh& m = cache_->mesh();
    const int nv = m.dim + 1;
    const double mass_coeff = 1.0 / grid_.dt + chemo_[node];
    std::vector<double> values = stiffness_values_;
    for (int c = 0; c < m.n_cells(); ++c) {
        const double w = mass_coeff * cache_->volume(c) / nv;
        for (int i = 0; i < nv; ++i) {
            values[cache_->entry_offset(c, i, i)] += w;
        }
    }
    for (int c = 0; c < m.n_cells(); ++c) {
        double ubar = 0.0;
        for (int i = 0; i < nv; ++i) ubar += u_next[m.cells(c, i)];
        ubar /= nv;
        const double jw = exp_mk_cell_[c] * (1.0 - 2.0 * ubar) * cache_->volume(c) / (nv * nv);
        for (int i = 0; i < nv; ++i) {
            for (int j = 0; j < nv; ++j) {
                values[cache_->entry_offset(c, i, j)] -= jw;
            }
        }
    }
    return cache_->matrix_from_values(values);
}

Vector StepOperator::dK_times(const Vector& mhat_D, const Vector& u) const {
    const Mesh& m = cache_->mesh();
    const int nv = m.dim + 1;
    Vector out = Vector::Zero(m.n_vertices());
    for (int c = 0; c < m.n_cells(); ++c) {
        const double vol = cache_->volume(c);
        const auto g = cache_->grads(c);
        Eigen::RowVectorXd grad_u = Eigen::RowVectorXd::Zero(m.dim);
        double mhat = 0.0;
        for (int i = 0; i < nv; ++i) {
            grad_u += u[m.cells(c, i)] * g.row(i);
            mhat += mhat_D[m.cells(c, i)];
        }
        mhat /= nv;
        const double w = exp_mD_cell_[c] * mhat * vol;
        for (int i = 0; i < nv; ++i) {
            out[m.cells(c, i)] += w * g.row(i).dot(grad_u);
        }
    }
    return out;
}

Vector StepOperator::db_times(const Vector& mhat_kappa, const Vector& u) const {
    const Mesh& m = cache_->mesh();
    const int nv = m.dim + 1;
    Vector out = Vector::Zero(m.n_vertices());
    for (int c = 0; c < m.n_cells(); ++c) {
        double mhat = 0.0, ubar = 0.0;
        for (int i = 0; i < nv; ++i) {
            mhat += mhat_kappa[m.cells(c, i)];
            ubar += u[m.cells(c, i)];
        }
        mhat /= nv;
        ubar /= nv;
        const double w = exp_mk_cell_[c] * mhat * ubar * (1.0 - ubar) * cache_->volume(c) / nv;
        for (int i = 0; i < nv; ++i) out[m.cells(c, i)] += w;
    }
    return out;
}

Vector StepOperator::dJ_times(const Vector& mhat_kappa, const Vector& u_increment, const Vector& u,
                              const Vector& v) const {
    const Mesh& m = cache_->mesh();
    const int nv = m.dim + 1;
    const bool has_mhat = mhat_kappa.size() > 0;
    const bool has_incr = u_increment.size() > 0;
    Vector out = Vector::Zero(m.n_vertices());
    for (int c = 0; c < m.n_cells(); ++c) {
        double mhat = 0.0, ubar = 0.0, wbar = 0.0, vbar = 0.0;
        for (int i = 0; i < nv; ++i) {
            const int vtx = m.cells(c, i);
            if (has_mhat) mhat += mhat_kappa[vtx];
            if (has_incr) wbar += u_increment[vtx];
            ubar += u[vtx];
            vbar += v[vtx];
        }
        mhat /= nv;
        ubar /= nv;
        wbar /= nv;
        vbar /= nv;
        const double w =
            exp_mk_cell_[c] * (mhat * (1.0 - 2.0 * ubar) - 2.0 * wbar) * vbar * cache_->volume(c) / nv;
        for (int i = 0; i < nv; ++i) out[m.cells(c, i)] += w;
    }
    return out;
}

StateTrajectory solve_forward(const StepOperator& op, const Field& u0, const ForwardOptions& opts) {
    const Mesh& m = op.cache().mesh();
    validate_field(u0, m, "solve_forward(u0)");
    if ((u0.values.array() < -1e-12).any() || (u0.values.array() > 1.0 + 1e-12).any()) {
        throw std::invalid_argument("solve_forward: u0 entries must lie in [0, 1]");
    }

    StateTrajectory traj;
    traj.mesh = u0.mesh;
    traj.grid = op.grid();
    traj.post.reserve(op.n_steps() + 1);
    traj.pre.reserve(op.n_steps());
    traj.post.push_back(u0.values);

    Eigen::SimplicialLDLT<SpMat> solver;
    for (int n = 1; n <= op.n_steps(); ++n) {
        const Vector& u_prev = traj.post[n - 1];
        Vector u = u_prev;
        Vector residual = op.residual(n, u, u_prev);
        const double r0 = residual.norm();
        double rnorm = r0;
        int iter = 0;
        while (rnorm > opts.newton_rtol * r0 && r0 > 0.0) {
            if (iter >= opts.max_newton) {
                throw SolverError("forward Newton failed to converge at step " + std::to_string(n) +
                                  ": residual " + std::to_string(rnorm));
            }
            solver.compute(op.step_matrix(n, u));
            if (solver.info() != Eigen::Success) {
                throw SolverError("step matrix factorization failed at step " + std::to_string(n));
            }
            u -= solver.solve(residual);
            if (!u.allFinite()) {
                throw SolverError("non-finite state at step " + std::to_string(n));
            }
            residual = op.residual(n, u, u_prev);
            rnorm = residual.norm();
            ++iter;
        }
        traj.pre.push_back(u);
        traj.post.push_back(op.rt_multiplier(n) * u);
    }
    return traj;
}

StateTrajectory solve_forward(std::shared_ptr<const FemCache> cache, const Field& m_D,
                              const Field& m_kappa, const Field& u0,
                              const TherapySchedule& schedule, const TimeGrid& grid,
                              const ForwardOptions& opts) {
    StepOperator op(std::move(cache), m_D, m_kappa, schedule, grid);
    return solve_forward(op, u0, opts);
}

Matrix observe(const StateTrajectory& trajectory, const std::vector<double>& obs_times,
               const PointInterpolator& interp) {
    Matrix out(interp.n_points(), static_cast<long>(obs_times.size()));
    for (std::size_t i = 0; i < obs_times.size(); ++i) {
        const int node = trajectory.grid.node_index(obs_times[i]);
        if (node < 0) {
            throw std::invalid_argument("observe: time " + std::to_string(obs_times[i]) +
                                        " is not a grid node");
        }
        out.col(static_cast<long>(i)) = interp.interpolate(trajectory.state(node));
    }
    return out;
}

Matrix observe(const FemCache& cache, const StateTrajectory& trajectory,
               const std::vector<double>& obs_times, const Matrix& points) {
    PointInterpolator interp(cache, points);
    return observe(trajectory, obs_times, interp);
}

std::pair<Matrix, double> add_noise(const Matrix& clean, double noise_percent,
                                    std::uint64_t rng_seed) {
    if (noise_percent < 0) throw std::invalid_argument("add_noise: noise_percent must be >= 0");
    const double floor_variance = 1e-12;
    if (noise_percent == 0.0) return {clean, floor_variance};
    const double sigma = noise_percent / 100.0 * clean.cwiseAbs().maxCoeff();
    Matrix noisy = clean;
    Rng rng(rng_seed);
    for (long j = 0; j < noisy.cols(); ++j) {
        for (long i = 0; i < noisy.rows(); ++i) {
            noisy(i, j) += sigma * rng.normal();
        }
    }
    return {noisy, std::max(sigma * sigma, floor_variance)};
}

}  // namespace tuq
