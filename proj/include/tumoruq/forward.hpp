#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tumoruq/fem.hpp"
#include "tumoruq/field.hpp"

namespace tuq {

struct RtEvent {
    double time_days = 0.0;
    double dose_gy = 0.0;
};

struct CtDose {
    double time_days = 0.0;
    double dose = 0.0;
};

// Radiotherapy fractions and chemotherapy doses with pharmacodynamic
// constants. Chemotherapy acts as a homogeneous decay rate; the recorded ct
// dose value does not scale the effect.
struct TherapySchedule {
    std::vector<RtEvent> rt_events;
    std::vector<CtDose> ct_doses;
    double alpha_rt = 0.025;                  // 1/Gy
    double beta_rt = 0.0025;                  // 1/Gy^2
    double alpha_ct = 0.9;                    // dimensionless efficacy
    double beta_ct_rate = default_beta_ct_rate();  // 1/day
    double rt_gamma = 1.0;

    static double default_beta_ct_rate();  // ln(2) / (1.8 h half-life in days)
    void validate() const;
};

// Linear-quadratic surviving fraction S = exp(-alpha z - beta z^2).
double rt_surviving_fraction(double dose_gy, double alpha_rt, double beta_rt);

// Decay rate C(t): 0 before the first dose, otherwise
// alpha_ct * sum over past doses of exp(-beta_ct_rate * (t - tau_k)).
double chemo_rate(double t_days, const TherapySchedule& schedule);

// Exact average of chemo_rate over [t_begin, t_end]. The implicit step uses
// this instead of the endpoint value: with a 1.8 h clearance half-life and
// one-day steps, endpoint sampling weights the fresh dose spike for a whole
// day (~8x the model's own integral) and wipes out the tumor.
double chemo_rate_step_average(double t_begin, double t_end, const TherapySchedule& schedule);

struct TimeGrid {
    double t0 = 0.0;
    double tf = 0.0;
    double dt = 1.0;
    int n_steps = 0;

    TimeGrid() = default;
    TimeGrid(double t0_days, double tf_days, double dt_days = 1.0);

    double node_time(int n) const { return t0 + n * dt; }
    // Node index of a time, or -1 if it does not coincide with a node (1e-9).
    int node_index(double t_days) const;
};

// States at every time node. Pre- and post-radiotherapy states are stored
// separately; they coincide away from RT event nodes.
struct StateTrajectory {
    MeshPtr mesh;
    TimeGrid grid;
    std::vector<Vector> post;  // index 0..n_steps, post[0] == u0
    std::vector<Vector> pre;   // index 1..n_steps at pre[n-1]

    const Vector& state(int node) const { return post[node]; }
    const Vector& pre_rt_state(int node) const { return pre[node - 1]; }
    const Vector& final_state() const { return post.back(); }
};

// Timed point-value data with a single scalar noise variance.
struct ObservationSet {
    std::vector<double> times;  // each coincides with a grid node
    Matrix points;              // n_points x dim
    Matrix data;                // n_points x n_times
    double noise_variance = 0.0;

    void validate(const TimeGrid& grid, int dim) const;
};

struct ForwardOptions {
    double newton_rtol = 1e-10;
    int max_newton = 25;
};

// Discrete treated reaction-diffusion step operator at fixed parameters:
// per implicit-Euler step,
//   M_L (u' - u)/dt + K(m_D) u' - R(m_kappa, u') + C_n M_L u' = 0,
// where C_n is the step-averaged chemotherapy decay rate and M_L the lumped
// mass matrix, with instantaneous multiplicative RT updates at event nodes.
// Lumping the time-derivative keeps steps near-monotone; consistent-mass
// undershoots land on the unstable side of the logistic term and blow up
// over multi-month horizons at desk-scale resolutions. This is the single source of
// truth for the residual and Jacobian used by the nonlinear solve, the
// adjoint, and the incremental (linearized) solves.
class StepOperator {
public:
    StepOperator(std::shared_ptr<const FemCache> cache, const Field& m_D, const Field& m_kappa,
                 const TherapySchedule& schedule, const TimeGrid& grid);

    const FemCache& cache() const { return *cache_; }
    std::shared_ptr<const FemCache> cache_ptr() const { return cache_; }
    const TimeGrid& grid() const { return grid_; }
    int n_steps() const { return grid_.n_steps; }

    double rt_multiplier(int node) const { return rt_mult_[node]; }
    // Step-averaged decay rate over (t_{node-1}, t_node].
    double chemo(int node) const { return chemo_[node]; }
    double exp_mD_cell(int cell) const { return exp_mD_cell_[cell]; }
    double exp_mkappa_cell(int cell) const { return exp_mk_cell_[cell]; }

    // G(u_next; u_prev) for the step that produces node n >= 1.
    Vector residual(int node, const Vector& u_next, const Vector& u_prev) const;
    // A_n = M (1/dt + C_n) + K - J_R(u_next); symmetric.
    SpMat step_matrix(int node, const Vector& u_next) const;

    // Directional parameter derivatives at a state u:
    //   dK(mhat_D; u)   with entries sum_c e^{mD_c} mhat_c (grad u . grad phi_i) |c|
    //   db(mhat_k; u)   with entries sum_c e^{mk_c} mhat_c u_c(1-u_c) |c|/(d+1)
    Vector dK_times(const Vector& mhat_D, const Vector& u) const;
    Vector db_times(const Vector& mhat_kappa, const Vector& u) const;
    // Derivative of the reaction Jacobian applied to v:
    //   (dJ v)_i = sum_c e^{mk_c} [mhat_c (1-2 u_c) - 2 w_c] v_c |c|/(d+1)
    // where w is the state increment; either direction may be zero.
    Vector dJ_times(const Vector& mhat_kappa, const Vector& u_increment, const Vector& u,
                    const Vector& v) const;

    const Vector& lumped_mass() const { return lumped_; }

private:
    std::shared_ptr<const FemCache> cache_;
    TimeGrid grid_;
    Vector lumped_;
    std::vector<double> stiffness_values_;  // K(m_D) on the shared skeleton
    std::vector<double> exp_mD_cell_;
    std::vector<double> exp_mk_cell_;
    std::vector<double> chemo_;    // per node, C(t_n)
    std::vector<double> rt_mult_;  // per node, product of (1 - gamma (1 - S))
};

// Implicit Euler with per-step Newton solves (full steps, relative residual
// 1e-10, at most 25 iterations). Throws SolverError with the step index and
// final residual on non-convergence or non-finite states.
StateTrajectory solve_forward(std::shared_ptr<const FemCache> cache, const Field& m_D,
                              const Field& m_kappa, const Field& u0,
                              const TherapySchedule& schedule, const TimeGrid& grid,
                              const ForwardOptions& opts = {});

StateTrajectory solve_forward(const StepOperator& op, const Field& u0,
                              const ForwardOptions& opts = {});

// Column i = point values of the (post-treatment) state at obs_times[i].
Matrix observe(const FemCache& cache, const StateTrajectory& trajectory,
               const std::vector<double>& obs_times, const Matrix& points);
Matrix observe(const StateTrajectory& trajectory, const std::vector<double>& obs_times,
               const PointInterpolator& interp);

// sigma = (noise_percent/100) * max|clean|, i.i.d. additive Gaussian,
// deterministic per seed. Returns the noisy matrix and the noise variance
// (floored at 1e-12).
std::pair<Matrix, double> add_noise(const Matrix& clean, double noise_percent,
                                    std::uint64_t rng_seed);

}  // namespace tuq
