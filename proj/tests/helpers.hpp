#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "tumoruq/inverse.hpp"
#include "tumoruq/rng.hpp"

namespace tuq::testing {

inline MeshPtr unit_square_mesh(int n, double extent = 1.0) {
    return generate_structured({extent, extent}, {n, n}, 2);
}

// Small treated twin problem on an n x n box: truth parameters generate the
// data on the same mesh/grid (zero noise unless polluted), observations on a
// coarse interior point lattice.
struct TwinProblem {
    MeshPtr mesh;
    std::shared_ptr<const FemCache> cache;
    std::shared_ptr<BlockPrior> prior;
    InverseProblem problem;
    Vector truth;

    int param_dim() const { return problem.param_dim(); }
};

struct TwinOptions {
    int resolution = 8;
    double extent_mm = 60.0;
    double t_final = 10.0;
    std::vector<double> obs_times = {5.0, 10.0};
    int obs_lattice = 4;            // interior points per axis
    bool therapy = true;
    double noise_percent = 0.0;
    double sigma2_prior_d = 0.05;
    double sigma2_prior_k = 0.02;
    double rho_mm = 40.0;
    std::uint64_t seed = 1234;
};

inline TwinProblem make_twin(const TwinOptions& opts = {}) {
    TwinProblem twin;
    twin.mesh = assign_labels(
        *generate_structured({opts.extent_mm, opts.extent_mm}, {opts.resolution, opts.resolution}, 2),
        halfplane_labeler(0, opts.extent_mm / 2.0, Tissue::gray, Tissue::white));
    twin.cache = std::make_shared<FemCache>(twin.mesh);

    TherapySchedule schedule;
    if (opts.therapy) {
        schedule.rt_events = {{3.0, 2.0}, {4.0, 2.0}};
        schedule.ct_doses = {{3.0, 1.0}, {4.0, 1.0}, {5.0, 1.0}};
    }
    const TimeGrid grid(0.0, opts.t_final, 1.0);

    // Heterogeneous truth.
    Vector mD(twin.mesh->n_vertices()), mk(twin.mesh->n_vertices());
    for (int v = 0; v < twin.mesh->n_vertices(); ++v) {
        mD[v] = std::log(twin.mesh->tissue_labels[v] == Tissue::white ? 0.3 : 0.03);
        mk[v] = std::log(0.15) + 0.2 * std::sin(twin.mesh->vertices(v, 0) / opts.extent_mm * 3.0);
    }
    twin.truth = Vector(2 * twin.mesh->n_vertices());
    twin.truth << mD, mk;

    Eigen::VectorXd center(2);
    center << opts.extent_mm * 0.5, opts.extent_mm * 0.5;
    Vector u0(twin.mesh->n_vertices());
    for (int v = 0; v < twin.mesh->n_vertices(); ++v) {
        const double r = (twin.mesh->vertices.row(v).transpose() - center).norm();
        u0[v] = r < opts.extent_mm * 0.25 ? 0.5 : (r < opts.extent_mm * 0.4 ? 0.16 : 0.0);
    }
    Field u0_field(twin.mesh, u0);

    StateTrajectory traj = solve_forward(twin.cache, Field(twin.mesh, mD), Field(twin.mesh, mk),
                                         u0_field, schedule, grid);

    Matrix points(opts.obs_lattice * opts.obs_lattice, 2);
    int p = 0;
    for (int i = 0; i < opts.obs_lattice; ++i) {
        for (int j = 0; j < opts.obs_lattice; ++j) {
            points(p, 0) = opts.extent_mm * (i + 1.0) / (opts.obs_lattice + 1.0);
            points(p, 1) = opts.extent_mm * (j + 1.0) / (opts.obs_lattice + 1.0);
            ++p;
        }
    }
    Matrix clean = observe(*twin.cache, traj, opts.obs_times, points);
    auto [noisy, variance] = add_noise(clean, opts.noise_percent, opts.seed);

    twin.prior = std::make_shared<BlockPrior>();
    twin.prior->add_block("m_D", std::make_shared<const GrfPrior>(
                                     twin.cache, Field(twin.mesh, -1.30), opts.sigma2_prior_d,
                                     opts.rho_mm));
    twin.prior->add_block("m_kappa", std::make_shared<const GrfPrior>(
                                         twin.cache, Field(twin.mesh, -1.00), opts.sigma2_prior_k,
                                         opts.rho_mm));

    InverseProblem problem;
    problem.cache = twin.cache;
    problem.grid = grid;
    problem.schedule = schedule;
    problem.observations.times = opts.obs_times;
    problem.observations.points = points;
    problem.observations.data = noisy;
    problem.observations.noise_variance = variance;
    problem.prior = twin.prior;
    problem.layout = make_layout(*twin.mesh, false);
    problem.u0 = u0_field;
    problem.finalize();
    twin.problem = std::move(problem);
    return twin;
}

template <typename A, typename B>
bool exact_equal(const A& a, const B& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

inline Vector random_vector(int n, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
    return v;
}

// Dense misfit Hessian by unit-vector actions.
inline Matrix dense_hessian(const LinearizedState& state, int dim, HessianMode mode) {
    Matrix H(dim, dim);
    Vector e = Vector::Zero(dim);
    for (int i = 0; i < dim; ++i) {
        e[i] = 1.0;
        H.col(i) = state.hessian_action(e, mode);
        e[i] = 0.0;
    }
    return 0.5 * (H + H.transpose());
}

// Dense prior precision R = A M_lump^{-1} A, block diagonal.
inline Matrix dense_precision(const BlockPrior& prior) {
    const int n = prior.dim();
    Matrix R = Matrix::Zero(n, n);
    for (int b = 0; b < prior.n_blocks(); ++b) {
        const auto [offset, size] = prior.block_range(b);
        const GrfPrior& block = prior.block(b);
        const Matrix A = Matrix(block.operator_matrix());
        R.block(offset, offset, size, size) =
            A * block.lumped_mass().cwiseInverse().asDiagonal() * A;
    }
    return R;
}

inline Matrix dense_prior_covariance(const BlockPrior& prior) {
    const int n = prior.dim();
    Matrix G = Matrix::Zero(n, n);
    for (int b = 0; b < prior.n_blocks(); ++b) {
        const auto [offset, size] = prior.block_range(b);
        const GrfPrior& block = prior.block(b);
        const Matrix A = Matrix(block.operator_matrix());
        const Matrix Ainv = A.inverse();
        G.block(offset, offset, size, size) =
            Ainv * block.lumped_mass().asDiagonal() * Ainv;
    }
    return G;
}

}  // namespace tuq::testing
