#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "tumoruq/prior.hpp"

using namespace tuq;
using namespace tuq::testing;

TEST_SUITE_BEGIN("prior");

TEST_CASE("hyperparameter mapping") {
    SUBCASE("direct evaluation") {
        auto [gamma, delta] = prior_hyperparameters(0.05, 180.0);
        const double sigma = std::sqrt(0.05);
        CHECK(delta == doctest::Approx(std::sqrt(2.0) / (sigma * 180.0 * std::sqrt(M_PI)))
                           .epsilon(1e-14));
        CHECK(gamma ==
              doctest::Approx(180.0 / (4.0 * sigma * std::sqrt(2.0 * M_PI))).epsilon(1e-14));
        CHECK(delta == doctest::Approx(0.019827).epsilon(3e-4));
        CHECK(gamma == doctest::Approx(80.28).epsilon(1e-3));
    }

    SUBCASE("scaling structure: doubling rho doubles gamma, halves delta") {
        auto [g1, d1] = prior_hyperparameters(0.05, 100.0);
        auto [g2, d2] = prior_hyperparameters(0.05, 200.0);
        CHECK(g2 == doctest::Approx(2.0 * g1).epsilon(1e-14));
        CHECK(d2 == doctest::Approx(0.5 * d1).epsilon(1e-14));
    }

    SUBCASE("nonpositive inputs rejected") {
        CHECK_THROWS_AS(prior_hyperparameters(0.0, 100.0), std::invalid_argument);
        CHECK_THROWS_AS(prior_hyperparameters(0.1, -1.0), std::invalid_argument);
    }
}

TEST_CASE("precision and covariance actions") {
    auto mesh = unit_square_mesh(6, 50.0);
    auto cache = std::make_shared<FemCache>(mesh);
    GrfPrior prior(cache, Field(mesh, -1.0), 0.05, 20.0);
    const int n = prior.dim();

    SUBCASE("inverse pair") {
        const Vector v = random_vector(n, 1);
        const Vector w = prior.solve_R(prior.apply_R(v));
        CHECK((w - v).norm() <= 1e-10 * v.norm());
        const Vector w2 = prior.apply_R(prior.solve_R(v));
        CHECK((w2 - v).norm() <= 1e-10 * v.norm());
    }

    SUBCASE("R is symmetric") {
        const Vector v = random_vector(n, 2);
        const Vector w = random_vector(n, 3);
        const double a = w.dot(prior.apply_R(v));
        const double b = v.dot(prior.apply_R(w));
        CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
    }

    SUBCASE("dense oracle for R") {
        const Matrix A = Matrix(prior.operator_matrix());
        const Matrix R_dense = A * prior.lumped_mass().cwiseInverse().asDiagonal() * A;
        const Vector v = random_vector(n, 4);
        CHECK((prior.apply_R(v) - R_dense * v).norm() <= 1e-11 * (R_dense * v).norm());
    }

    SUBCASE("operator is positive definite") {
        const Matrix A = Matrix(prior.operator_matrix());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
        CHECK(eig.eigenvalues()[0] > 0.0);
    }
}

TEST_CASE("cost and gradient") {
    auto mesh = unit_square_mesh(5, 30.0);
    auto cache = std::make_shared<FemCache>(mesh);
    GrfPrior prior(cache, Field(mesh, -1.3), 0.05, 15.0);
    const int n = prior.dim();
    const Vector mean = prior.mean();
    const Vector v = random_vector(n, 5, 0.1);

    CHECK(prior.cost(mean) == 0.0);
    CHECK(prior.grad(mean).norm() == 0.0);
    CHECK(prior.cost(mean + 2.0 * v) ==
          doctest::Approx(4.0 * prior.cost(mean + v)).epsilon(1e-12));

    SUBCASE("gradient matches finite differences") {
        const Vector m = mean + v;
        const Vector dir = random_vector(n, 6);
        const double h = 1e-6;
        const double fd =
            (prior.cost(m + h * dir) - prior.cost(m - h * dir)) / (2.0 * h);
        const double an = prior.grad(m).dot(dir);
        CHECK(an == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("sampling statistics") {
    // rho small against the domain (interior far from the boundary) but well
    // resolved by the mesh: the discrete pointwise variance carries an O(h/rho)
    // bias, ~5% at h/rho = 0.1
    auto mesh = unit_square_mesh(40, 100.0);
    auto cache = std::make_shared<FemCache>(mesh);
    const double sigma2 = 0.04;
    GrfPrior prior(cache, Field(mesh, 0.0), sigma2, 25.0);
    const int n = prior.dim();

    SUBCASE("determinism") {
        const Vector a = prior.sample(11);
        const Vector b = prior.sample(11);
        const Vector c = prior.sample(12);
        CHECK(exact_equal(a, b));
        CHECK(!exact_equal(a, c));
    }

    SUBCASE("mean and pointwise variance over 1e4 samples") {
        const int n_samples = 10000;
        Vector sum = Vector::Zero(n), sumsq = Vector::Zero(n);
        for (int s = 0; s < n_samples; ++s) {
            const Vector m = prior.sample(1000 + s);
            sum += m;
            sumsq += m.cwiseAbs2();
        }
        const Vector mean = sum / n_samples;
        const Vector var = sumsq / n_samples - mean.cwiseAbs2();

        // interior nodes: at least rho away from every side; the 3-sigma mean
        // test tolerates the expected multiple-testing violation count
        int checked = 0, mean_violations = 0;
        for (int v = 0; v < n; ++v) {
            const double x = mesh->vertices(v, 0), y = mesh->vertices(v, 1);
            if (x < 30 || x > 70 || y < 30 || y > 70) continue;
            ++checked;
            const double se = std::sqrt(var[v] / n_samples);
            mean_violations += std::abs(mean[v]) >= 3.0 * se;
            CHECK(std::abs(mean[v]) < 5.0 * se);
            CHECK(std::abs(var[v] - sigma2) / sigma2 < 0.15);
        }
        CHECK(checked > 50);
        CHECK(mean_violations <= std::max(2, checked / 50));
    }
}

TEST_CASE("empirical covariance matches the dense prior covariance") {
    auto mesh = unit_square_mesh(8, 60.0);  // 81 vertices
    auto cache = std::make_shared<FemCache>(mesh);
    GrfPrior prior(cache, Field(mesh, 0.0), 0.05, 25.0);
    const int n = prior.dim();

    BlockPrior block;
    block.add_block("m", std::make_shared<const GrfPrior>(cache, Field(mesh, 0.0), 0.05, 25.0));
    const Matrix G = dense_prior_covariance(block);

    const int n_samples = 100000;
    Matrix scatter = Matrix::Zero(n, n);
    Vector sum = Vector::Zero(n);
    for (int s = 0; s < n_samples; ++s) {
        Rng rng(mix_seed(500, s));
        const Vector m = prior.sample_fluctuation(rng);
        scatter.selfadjointView<Eigen::Lower>().rankUpdate(m);
        sum += m;
    }
    Matrix cov = Matrix(scatter.selfadjointView<Eigen::Lower>()) / n_samples;
    const Vector mean = sum / n_samples;
    cov -= mean * mean.transpose();

    double max_violation = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double se =
                std::sqrt((G(i, i) * G(j, j) + G(i, j) * G(i, j)) / n_samples);
            max_violation = std::max(max_violation, std::abs(cov(i, j) - G(i, j)) / (5.0 * se));
        }
    }
    CHECK(max_violation < 1.0);
}

TEST_CASE("Robin term reduces boundary variance inflation") {
    auto mesh = unit_square_mesh(16, 80.0);
    auto cache = std::make_shared<FemCache>(mesh);
    GrfPrior with_robin(cache, Field(mesh, 0.0), 0.05, 20.0);
    GrfPrior without(cache, Field(mesh, 0.0), 0.05, 20.0, 0.0);
    CHECK(with_robin.robin_coeff() > 0.0);

    auto variance_ratio = [&](const GrfPrior& p) {
        const int n = p.dim();
        Vector e = Vector::Zero(n);
        double boundary = 0.0, interior = 0.0;
        int nb = 0, ni = 0;
        for (int v = 0; v < n; ++v) {
            e[v] = 1.0;
            const double var = p.solve_R(e)[v];
            e[v] = 0.0;
            const double x = mesh->vertices(v, 0), y = mesh->vertices(v, 1);
            const bool on_boundary = x == 0.0 || y == 0.0 || x == 80.0 || y == 80.0;
            if (on_boundary) {
                boundary += var;
                ++nb;
            } else if (x > 25 && x < 55 && y > 25 && y < 55) {
                interior += var;
                ++ni;
            }
        }
        return (boundary / nb) / (interior / ni);
    };

    const double ratio_robin = variance_ratio(with_robin);
    const double ratio_neumann = variance_ratio(without);
    CHECK(std::abs(ratio_robin - 1.0) < std::abs(ratio_neumann - 1.0));
}

TEST_CASE("block prior") {
    auto mesh = unit_square_mesh(6, 40.0);
    auto cache = std::make_shared<FemCache>(mesh);
    auto block_d = std::make_shared<const GrfPrior>(cache, Field(mesh, -1.3), 0.05, 15.0);
    auto block_k = std::make_shared<const GrfPrior>(cache, Field(mesh, -1.0), 0.02, 15.0);
    BlockPrior prior;
    prior.add_block("m_D", block_d);
    prior.add_block("m_kappa", block_k);
    const int n = mesh->n_vertices();
    CHECK(prior.dim() == 2 * n);

    SUBCASE("block structure of cost and actions") {
        const Vector m = prior.sample(3);
        CHECK(prior.cost(m) == doctest::Approx(block_d->cost(m.head(n)) +
                                               block_k->cost(m.tail(n)))
                                   .epsilon(1e-12));
        const Vector v = random_vector(2 * n, 9);
        const Vector rv = prior.apply_R(v);
        CHECK((rv.head(n) - block_d->apply_R(v.head(n))).norm() == 0.0);
        CHECK((rv.tail(n) - block_k->apply_R(v.tail(n))).norm() == 0.0);
    }

    SUBCASE("cross-block independence in samples") {
        const int n_samples = 4000;
        // correlation between one node in block D and one in block kappa
        const int i = n / 2, j = 2 * n / 3;
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (int s = 0; s < n_samples; ++s) {
            const Vector m = prior.sample_fluctuation(700 + s);
            const double x = m[i], y = m[n + j];
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
        const double cx = sxx / n_samples - (sx / n_samples) * (sx / n_samples);
        const double cy = syy / n_samples - (sy / n_samples) * (sy / n_samples);
        const double cxy = sxy / n_samples - (sx / n_samples) * (sy / n_samples);
        const double corr = cxy / std::sqrt(cx * cy);
        CHECK(std::abs(corr) < 5.0 / std::sqrt(static_cast<double>(n_samples)));
    }
}

TEST_SUITE_END();
