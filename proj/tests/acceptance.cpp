// Acceptance suite: one criterion per function, one pass/fail line each.
// Usage: acceptance_tests [criterion ...]; no arguments runs all ten.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "tumoruq/dataio.hpp"
#include "tumoruq/jsonio.hpp"
#include "tumoruq/laplace.hpp"
#include "tumoruq/map_solver.hpp"
#include "tumoruq/qoi.hpp"
#include "tumoruq/stats.hpp"
#include "tumoruq/study.hpp"

using namespace tuq;
using namespace tuq::testing;

namespace {

struct Criterion {
    int number;
    std::string name;
    std::function<bool(std::string&)> run;
    double budget_seconds = 0.0;  // 0 = no stated budget
};

bool check(bool ok, const std::string& what, std::string& detail) {
    if (!ok) detail += (detail.empty() ? "" : "; ") + what;
    return ok;
}

// ---------------------------------------------------------------------------
// 1. Adjoint gradient against central finite differences on a treated twin.
bool criterion_gradient(std::string& detail) {
    TwinOptions opts;
    opts.resolution = 20;
    opts.extent_mm = 60.0;
    opts.t_final = 10.0;
    opts.obs_times = {5.0, 10.0};
    opts.obs_lattice = 5;
    opts.therapy = true;
    TwinProblem twin = make_twin(opts);

    bool ok = true;
    for (std::uint64_t trial = 0; trial < 3; ++trial) {
        const Vector x = twin.truth + random_vector(twin.param_dim(), 17 + trial, 0.08);
        const Vector dir = random_vector(twin.param_dim(), 71 + trial);
        auto [grad, cost] = misfit_gradient(twin.problem, x);
        const double an = grad.dot(dir);
        const double h = 1e-5;
        const double fd =
            (misfit_cost(twin.problem, x + h * dir) - misfit_cost(twin.problem, x - h * dir)) /
            (2.0 * h);
        const double rel = std::abs(an - fd) / std::max(std::abs(fd), 1e-300);
        ok &= check(rel < 1e-5, "trial " + std::to_string(trial) + " rel err " +
                                    std::to_string(rel), detail);
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 2. Hessian symmetry, FD consistency, and the GN limit at zero residuals.
bool criterion_hessian(std::string& detail) {
    TwinOptions opts;
    opts.resolution = 12;
    opts.obs_times = {5.0, 10.0};
    TwinProblem twin = make_twin(opts);
    const Vector x = twin.truth + random_vector(twin.param_dim(), 3, 0.05);
    LinearizedState state(twin.problem, x);

    bool ok = true;
    {
        const Vector d1 = random_vector(twin.param_dim(), 4);
        const Vector d2 = random_vector(twin.param_dim(), 5);
        const double a = d2.dot(state.hessian_action(d1, HessianMode::gauss_newton));
        const double b = d1.dot(state.hessian_action(d2, HessianMode::gauss_newton));
        ok &= check(std::abs(a - b) <= 1e-8 * std::abs(a), "GN symmetry", detail);
    }
    {
        const Vector dir = random_vector(twin.param_dim(), 6);
        const Vector h_an = state.hessian_action(dir, HessianMode::full);
        const double h = 1e-5;
        auto [gp, cp] = misfit_gradient(twin.problem, x + h * dir);
        auto [gm, cm] = misfit_gradient(twin.problem, x - h * dir);
        const Vector h_fd = (gp - gm) / (2.0 * h);
        const double rel = (h_an - h_fd).norm() / h_fd.norm();
        ok &= check(rel < 1e-4, "full-vs-FD rel err " + std::to_string(rel), detail);
    }
    {
        LinearizedState at_truth(twin.problem, twin.truth);
        const Vector dir = random_vector(twin.param_dim(), 7);
        const Vector gn = at_truth.hessian_action(dir, HessianMode::gauss_newton);
        const Vector full = at_truth.hessian_action(dir, HessianMode::full);
        ok &= check((gn - full).norm() <= 1e-8 * gn.norm(), "full = GN at zero residual", detail);
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 3. Randomized GEVP and low-rank covariance against the dense oracle.
bool criterion_dense_laplace(std::string& detail) {
    TwinOptions opts;
    opts.resolution = 9;  // 100 vertices, 200 parameters
    opts.obs_times = {3.0, 6.0, 10.0};
    opts.obs_lattice = 4;
    TwinProblem twin = make_twin(opts);
    const int n = twin.param_dim();
    LinearizedState state(twin.problem, twin.truth);

    const Matrix H = dense_hessian(state, n, HessianMode::gauss_newton);
    const Matrix R = dense_precision(*twin.prior);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> dense(H, R);
    const Vector dense_eigs = dense.eigenvalues().reverse();

    LinearOperator hess = [&state](const Vector& v) {
        return state.hessian_action(v, HessianMode::gauss_newton);
    };
    auto [lambda, V] = randomized_gevp(hess, *twin.prior, 30, 10, 23);

    bool ok = true;
    int compared = 0;
    for (int j = 0; j < 30 && dense_eigs[j] > 0.1 * dense_eigs[0]; ++j) {
        const double rel = std::abs(lambda[j] - dense_eigs[j]) / dense_eigs[j];
        ok &= check(rel < 1e-6,
                    "eigenvalue " + std::to_string(j) + " rel err " + std::to_string(rel), detail);
        ++compared;
    }
    ok &= check(compared >= 3, "spectrum too flat to compare", detail);

    auto prior_ptr = std::shared_ptr<const BlockPrior>(twin.prior);
    LowRankPosterior full_rank = make_laplace_posterior(twin.truth, prior_ptr, hess, n, 0, 29);
    const Matrix dense_post = (H + R).inverse();
    for (std::uint64_t s = 0; s < 3; ++s) {
        const Vector v = random_vector(n, 900 + s);
        const double rel =
            (full_rank.covariance_apply(v) - dense_post * v).norm() / (dense_post * v).norm();
        ok &= check(rel < 1e-6, "covariance action rel err " + std::to_string(rel), detail);
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 4. Posterior sampling consistency and the damping identity.
bool criterion_sampling(std::string& detail) {
    bool ok = true;
    {
        Rng rng(1);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double lambda = std::abs(rng.normal()) * std::pow(10.0, (i % 9) - 4);
            const double d = 1.0 - 1.0 / std::sqrt(1.0 + lambda);
            worst = std::max(worst, std::abs((2.0 * d - d * d) - lambda / (1.0 + lambda)) /
                                        (1.0 + lambda));
        }
        ok &= check(worst <= 1e-14, "damping identity max err " + std::to_string(worst), detail);
    }

    TwinOptions opts;
    opts.resolution = 7;  // 64 vertices <= 100
    opts.obs_lattice = 3;
    TwinProblem twin = make_twin(opts);
    const int n = twin.param_dim();
    LinearizedState state(twin.problem, twin.truth);
    LinearOperator hess = [&state](const Vector& v) {
        return state.hessian_action(v, HessianMode::gauss_newton);
    };
    auto prior_ptr = std::shared_ptr<const BlockPrior>(twin.prior);
    LowRankPosterior post = make_laplace_posterior(twin.truth, prior_ptr, hess, 15, 10, 37);

    Matrix cov_op(n, n);
    Vector e = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        e[i] = 1.0;
        cov_op.col(i) = post.covariance_apply(e);
        e[i] = 0.0;
    }

    const int n_samples = 100000;
    Matrix scatter = Matrix::Zero(n, n);
    Vector sum = Vector::Zero(n);
    for (int s = 0; s < n_samples; ++s) {
        const Vector m = post.sample(90000 + s) - post.m_map;
        scatter.selfadjointView<Eigen::Lower>().rankUpdate(m);
        sum += m;
    }
    Matrix cov = Matrix(scatter.selfadjointView<Eigen::Lower>()) / n_samples;
    const Vector mean = sum / n_samples;
    cov -= mean * mean.transpose();

    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double se =
                std::sqrt((cov_op(i, i) * cov_op(j, j) + cov_op(i, j) * cov_op(i, j)) / n_samples);
            worst = std::max(worst, std::abs(cov(i, j) - cov_op(i, j)) / (5.0 * se));
        }
    }
    ok &= check(worst < 1.0, "worst entry at " + std::to_string(worst) + " of 5 MC SE", detail);
    return ok;
}

// ---------------------------------------------------------------------------
// 5. Prior sample statistics and the Robin boundary treatment.
bool criterion_prior_stats(std::string& detail) {
    // h/rho = 0.1 keeps the discrete pointwise-variance bias near 5%
    auto mesh = unit_square_mesh(40, 100.0);
    auto cache = std::make_shared<FemCache>(mesh);
    const double sigma2 = 0.04;
    GrfPrior prior(cache, Field(mesh, 0.0), sigma2, 25.0);

    const int n = prior.dim();
    const int n_samples = 10000;
    Vector sum = Vector::Zero(n), sumsq = Vector::Zero(n);
    for (int s = 0; s < n_samples; ++s) {
        const Vector m = prior.sample(60000 + s);
        sum += m;
        sumsq += m.cwiseAbs2();
    }
    const Vector mean = sum / n_samples;
    const Vector var = sumsq / n_samples - mean.cwiseAbs2();

    bool ok = true;
    double worst_rel = 0.0;
    for (int v = 0; v < n; ++v) {
        const double x = mesh->vertices(v, 0), y = mesh->vertices(v, 1);
        if (x < 30 || x > 70 || y < 30 || y > 70) continue;
        worst_rel = std::max(worst_rel, std::abs(var[v] - sigma2) / sigma2);
    }
    ok &= check(worst_rel < 0.15,
                "interior variance off by " + std::to_string(100 * worst_rel) + "%", detail);

    GrfPrior no_robin(cache, Field(mesh, 0.0), sigma2, 25.0, 0.0);
    auto ratio = [&](const GrfPrior& p) {
        Vector unit = Vector::Zero(n);
        double boundary = 0.0, interior = 0.0;
        int nb = 0, ni = 0;
        for (int v = 0; v < n; ++v) {
            unit[v] = 1.0;
            const double pv = p.solve_R(unit)[v];
            unit[v] = 0.0;
            const double x = mesh->vertices(v, 0), y = mesh->vertices(v, 1);
            if (x == 0.0 || y == 0.0 || x == 100.0 || y == 100.0) {
                boundary += pv;
                ++nb;
            } else if (x > 30 && x < 70 && y > 30 && y < 70) {
                interior += pv;
                ++ni;
            }
        }
        return (boundary / nb) / (interior / ni);
    };
    const double with_robin = ratio(prior);
    const double without = ratio(no_robin);
    ok &= check(std::abs(with_robin - 1.0) < std::abs(without - 1.0),
                "robin " + std::to_string(with_robin) + " vs neumann " + std::to_string(without),
                detail);
    return ok;
}

// ---------------------------------------------------------------------------
// 6. Forward solver: logistic oracle, LQ fraction, first-order convergence.
bool criterion_forward(std::string& detail) {
    bool ok = true;
    {
        auto mesh = unit_square_mesh(6, 20.0);
        auto cache = std::make_shared<FemCache>(mesh);
        const double kappa = 0.15;
        auto traj = solve_forward(cache, Field(mesh, std::log(0.25)), Field(mesh, std::log(kappa)),
                                  Field(mesh, 0.1), TherapySchedule{}, TimeGrid(0.0, 25.0, 1.0));
        double w = 0.1;
        double worst = 0.0;
        for (int step = 1; step <= 25; ++step) {
            double next = w;
            for (int it = 0; it < 60; ++it) {
                const double g = next - w - kappa * next * (1.0 - next);
                next -= g / (1.0 - kappa * (1.0 - 2.0 * next));
            }
            w = next;
            worst = std::max(worst,
                             (traj.state(step).array() - w).abs().maxCoeff() / std::abs(w));
        }
        ok &= check(worst < 1e-10, "logistic oracle rel err " + std::to_string(worst), detail);
    }
    {
        const double s = rt_surviving_fraction(2.0, 0.025, 0.0025);
        ok &= check(std::abs(s - std::exp(-0.06)) < 1e-15, "LQ fraction at 2 Gy", detail);

        auto mesh = unit_square_mesh(4, 10.0);
        auto cache = std::make_shared<FemCache>(mesh);
        TherapySchedule sched;
        sched.rt_events = {{2.0, 2.0}};
        auto traj = solve_forward(cache, Field(mesh, std::log(0.1)), Field(mesh, std::log(0.1)),
                                  Field(mesh, 0.5), sched, TimeGrid(0.0, 3.0, 1.0));
        const double rel =
            ((traj.state(2) - std::exp(-0.06) * traj.pre_rt_state(2)).cwiseAbs()).maxCoeff();
        ok &= check(rel < 1e-14, "RT multiplies the state by exp(-0.06)", detail);
    }
    {
        auto mesh = unit_square_mesh(8, 40.0);
        auto cache = std::make_shared<FemCache>(mesh);
        Vector u0(mesh->n_vertices());
        for (int v = 0; v < mesh->n_vertices(); ++v) {
            const double dx = mesh->vertices(v, 0) - 20.0, dy = mesh->vertices(v, 1) - 20.0;
            u0[v] = 0.6 * std::exp(-(dx * dx + dy * dy) / 90.0);
        }
        Field mD(mesh, std::log(0.3)), mk(mesh, std::log(0.15)), u0f(mesh, u0);
        auto final_state = [&](double dt) {
            return solve_forward(cache, mD, mk, u0f, TherapySchedule{}, TimeGrid(0.0, 8.0, dt))
                .final_state();
        };
        auto error = [&](double dt) { return (final_state(dt) - final_state(dt / 8.0)).norm(); };
        const double ratio = error(1.0) / error(0.5);
        ok &= check(ratio > 1.7 && ratio < 2.3, "dt ratio " + std::to_string(ratio), detail);
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 7. Imaging-frequency study (scaled, qualitative orderings).
bool criterion_study(std::string& detail) {
    ScenarioConfig config;  // defaults: 40x40 coarse, 80x80 fine, n = 500, rank 50
    config.seed = 90123;
    StudyReport report =
        run_frequency_study(config, {Cadence::daily, Cadence::weekly, Cadence::fortnightly});

    bool ok = true;
    const Vector& daily = report.cadences[0].eigenvalues;
    const Vector& weekly = report.cadences[1].eigenvalues;
    const Vector& fortnightly = report.cadences[2].eigenvalues;
    for (int j = 0; j < 10; ++j) {
        ok &= check(daily[j] >= weekly[j],
                    "eigenvalue " + std::to_string(j) + " daily < weekly", detail);
        ok &= check(weekly[j] >= fortnightly[j],
                    "eigenvalue " + std::to_string(j) + " weekly < fortnightly", detail);
    }

    for (const auto& outcome : report.cadences) {
        const std::string name = cadence_name(outcome.cadence);
        ok &= check(outcome.summary.rel_err_tv_variance < report.prior_summary.rel_err_tv_variance,
                    name + ": rel-err-TV variance not reduced", detail);
        ok &= check(outcome.summary.ccc_variance < report.prior_summary.ccc_variance,
                    name + ": CCC variance not reduced", detail);
    }

    const double ccc_daily = report.cadences[0].summary.ccc_median;
    const double ccc_weekly = report.cadences[1].summary.ccc_median;
    const double ccc_fortnightly = report.cadences[2].summary.ccc_median;
    ok &= check(ccc_daily >= ccc_weekly && ccc_weekly >= ccc_fortnightly,
                "median CCC ordering " + std::to_string(ccc_daily) + " / " +
                    std::to_string(ccc_weekly) + " / " + std::to_string(ccc_fortnightly),
                detail);

    std::printf("    eigenvalue heads: daily %.4g, weekly %.4g, fortnightly %.4g\n", daily[0],
                weekly[0], fortnightly[0]);
    std::printf("    median CCC: daily %.4f, weekly %.4f, fortnightly %.4f\n", ccc_daily,
                ccc_weekly, ccc_fortnightly);
    std::printf("    rel-err-TV variance: prior %.4g, daily %.4g, weekly %.4g, fortnightly %.4g\n",
                report.prior_summary.rel_err_tv_variance,
                report.cadences[0].summary.rel_err_tv_variance,
                report.cadences[1].summary.rel_err_tv_variance,
                report.cadences[2].summary.rel_err_tv_variance);
    return ok;
}

// ---------------------------------------------------------------------------
// 8. MAP solver behavior and mesh-independent CG counts.
bool criterion_map(std::string& detail) {
    bool ok = true;
    {
        TwinOptions opts;
        opts.resolution = 10;
        TwinProblem twin = make_twin(opts);
        twin.problem.observations = ObservationSet{};
        twin.problem.finalize();
        const Vector m0 = twin.prior->mean() + random_vector(twin.param_dim(), 2, 0.3);
        MapResult result = compute_map(twin.problem, m0);
        ok &= check(result.converged && result.newton_iterations == 1,
                    "prior-only solve took " + std::to_string(result.newton_iterations) +
                        " iterations", detail);
    }

    auto median_cg = [](const MapResult& result) {
        std::vector<double> counts;
        for (const auto& rec : result.history) counts.push_back(rec.cg_iters);
        return median(counts);
    };

    double cg20 = 0.0, cg40 = 0.0;
    for (int resolution : {20, 40}) {
        TwinOptions opts;
        opts.resolution = resolution;
        opts.extent_mm = 60.0;
        opts.obs_times = {2.0, 4.0, 6.0, 8.0, 10.0};
        opts.obs_lattice = 5;
        TwinProblem twin = make_twin(opts);
        const Vector mean = twin.prior->mean();
        const double misfit_mean = misfit_cost(twin.problem, mean);
        NewtonOptions nopts;
        nopts.max_newton = 40;
        MapResult result = compute_map(twin.problem, mean, nopts);
        const double misfit_map = misfit_cost(twin.problem, result.m_map);
        ok &= check(result.converged, std::to_string(resolution) + ": MAP did not converge",
                    detail);
        ok &= check(misfit_map * 10.0 <= misfit_mean,
                    std::to_string(resolution) + ": misfit reduced only " +
                        std::to_string(misfit_mean / std::max(misfit_map, 1e-300)) + "x",
                    detail);
        (resolution == 20 ? cg20 : cg40) = median_cg(result);
    }
    const double cg_ratio = std::max(cg20, cg40) / std::max(1.0, std::min(cg20, cg40));
    ok &= check(cg_ratio < 2.0,
                "median CG per Newton " + std::to_string(cg20) + " vs " + std::to_string(cg40),
                detail);
    std::printf("    median CG per Newton: 20x20 -> %.1f, 40x40 -> %.1f\n", cg20, cg40);
    return ok;
}

// ---------------------------------------------------------------------------
// 9. QoI and statistics units against enumerated oracles.
bool criterion_qoi_stats(std::string& detail) {
    bool ok = true;
    auto mesh = unit_square_mesh(4);
    FemCache cache(mesh);
    ok &= check(std::abs(ttc(cache, Field(mesh, 0.5)) - 0.5) < 1e-14, "ttc constant", detail);
    ok &= check(std::abs(tv(cache, Field(mesh, 0.5)) - 1.0) < 1e-14, "tv constant", detail);
    ok &= check(ttc(cache, Field(mesh, 0.05)) == 0.0, "ttc below threshold", detail);

    ok &= check(std::abs(ccc({1, 2, 3}, {3, 2, 1}) + 1.0) < 1e-14, "ccc antithetic", detail);
    ok &= check(ccc({2, 2, 2}, {5, 5, 5}) == 0.0, "ccc degenerate", detail);
    ok &= check(std::abs(dice({1, 1, 1, 1, 0, 0, 0, 0, 0}, {1, 1, 1, 0, 1, 1, 1, 0, 0}) - 0.6) <
                    1e-14,
                "dice 3/5", detail);
    ok &= check(dice({}, {}) == 1.0, "dice empty", detail);

    ok &= check(mann_whitney_u({1, 2, 3}, {4, 5, 6}).u == 0.0, "mann-whitney separated", detail);
    ok &= check(std::abs(mann_whitney_u({1, 2, 2, 5}, {1, 2, 2, 5}).u - 8.0) < 1e-14,
                "mann-whitney tied", detail);
    {
        auto res = levene({1, 2, 3, 4}, {10, 20, 30, 40});
        // hand value: 6 * (4*(1-5.5)^2 + 4*(10-5.5)^2) / (2*(0.5)^2*2 + 2*(5)^2*2)
        const double between = 4 * 4.5 * 4.5 + 4 * 4.5 * 4.5;
        const double within = 2 * 0.25 + 2 * 0.25 + 2 * 25.0 + 2 * 25.0;
        const double w_hand = 6.0 * between / within;
        ok &= check(std::abs(res.w - w_hand) < 1e-12, "levene hand computation", detail);
        ok &= check(levene({1, 2, 3}, {1, 2, 3}).p == 1.0, "levene identical", detail);
    }
    {
        std::vector<double> v;
        for (int i = 0; i <= 100; ++i) v.push_back(i);
        auto s = summarize(v);
        ok &= check(s.ci_lower == 5.0 && s.ci_upper == 95.0, "percentile convention", detail);
        ok &= check(std::abs(s.mean - 50.0) < 1e-14, "mean", detail);
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 10. Determinism and bit-exact formats.
bool criterion_determinism(std::string& detail) {
    namespace fs = std::filesystem;
    bool ok = true;
    const fs::path dir = fs::temp_directory_path() / "tumoruq_acceptance_10";
    fs::remove_all(dir);
    fs::create_directories(dir);

    {
        auto mesh = assign_labels(*generate_structured({20.0, 15.0, 10.0}, {3, 3, 2}, 3),
                                  halfplane_labeler(2, 5.0, Tissue::gray, Tissue::white));
        save_mesh(*mesh, (dir / "m.twmesh").string());
        auto loaded = load_mesh((dir / "m.twmesh").string());
        ok &= check(exact_equal(loaded->vertices, mesh->vertices) &&
                        exact_equal(loaded->cells, mesh->cells) &&
                        loaded->tissue_labels == mesh->tissue_labels,
                    "mesh round trip", detail);
        save_mesh(*loaded, (dir / "m2.twmesh").string());
        auto bytes = [](const fs::path& p) {
            std::ifstream is(p, std::ios::binary);
            std::stringstream ss;
            ss << is.rdbuf();
            return ss.str();
        };
        ok &= check(bytes(dir / "m.twmesh.bin") == bytes(dir / "m2.twmesh.bin"),
                    "mesh re-save bytes", detail);
    }
    {
        VoxelImage img = make_voxel_image({5, 4}, {1.0, 2.0}, {0.5, -1.0});
        for (long i = 0; i < img.size(); ++i) img.data[i] = static_cast<float>(std::sin(0.7 * i));
        save_voxel_image(img, (dir / "i.twimg").string());
        const VoxelImage loaded = load_voxel_image((dir / "i.twimg").string());
        ok &= check(loaded.data == img.data && loaded.dims == img.dims, "image round trip",
                    detail);
    }
    {
        Matrix clean = Matrix::Constant(40, 5, 0.3);
        auto [a, va] = add_noise(clean, 2.0, 99);
        auto [b, vb] = add_noise(clean, 2.0, 99);
        ok &= check(exact_equal(a, b) && va == vb, "noise determinism", detail);
    }
    {
        // pushforward twice with one thread and several threads: identical CSVs
        auto mesh = unit_square_mesh(5, 20.0);
        auto cache = std::make_shared<FemCache>(mesh);
        PredictConfig config;
        config.cache = cache;
        config.layout = make_layout(*mesh, false);
        config.u0 = Field(mesh, 0.2);
        config.window = TimeGrid(0.0, 5.0, 1.0);
        QoiSpec spec;
        spec.kind = QoiSpec::Kind::ttc;
        ParameterSampler sampler = [&](std::uint64_t seed) {
            Rng rng(seed);
            Vector x = Vector::Constant(2 * mesh->n_vertices(), std::log(0.15));
            x.array() += 0.05 * rng.normal();
            return x;
        };
        const PushforwardResult serial = pushforward(sampler, "prior", config, spec, 24, 11, 1);
        const PushforwardResult threaded = pushforward(sampler, "prior", config, spec, 24, 11, 4);
        write_pushforward_csv(serial, (dir / "pf1.csv").string());
        write_pushforward_csv(threaded, (dir / "pf2.csv").string());
        std::ifstream f1(dir / "pf1.csv"), f2(dir / "pf2.csv");
        std::stringstream s1, s2;
        s1 << f1.rdbuf();
        s2 << f2.rdbuf();
        ok &= check(s1.str() == s2.str() && s1.str().size() > 0, "pushforward CSV bytes", detail);
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> criteria = {
        {1, "adjoint gradient matches finite differences", criterion_gradient, 60.0},
        {2, "Hessian symmetry, FD consistency, GN limit", criterion_hessian, 120.0},
        {3, "randomized GEVP and covariance vs dense oracle", criterion_dense_laplace, 120.0},
        {4, "posterior sampling consistency", criterion_sampling},
        {5, "prior statistics and Robin treatment", criterion_prior_stats},
        {6, "forward solver oracles", criterion_forward},
        {7, "imaging-frequency study orderings", criterion_study, 45.0 * 60.0},
        {8, "MAP solver behavior and CG mesh-independence", criterion_map},
        {9, "QoI and statistics oracles", criterion_qoi_stats, 10.0},
        {10, "determinism and bit-exact formats", criterion_determinism},
    };

    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& criterion : criteria) {
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), criterion.number) == selected.end()) {
            continue;
        }
        std::string detail;
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = criterion.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (ok && criterion.budget_seconds > 0 && seconds > criterion.budget_seconds) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + std::string("runtime budget exceeded: ") +
                      std::to_string(seconds) + "s > " + std::to_string(criterion.budget_seconds) +
                      "s";
        }
        std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", criterion.number,
                    criterion.name.c_str(), seconds, detail.empty() ? "" : " -- ",
                    detail.c_str());
        std::fflush(stdout);
        failures += !ok;
    }
    return failures == 0 ? 0 : 1;
}
