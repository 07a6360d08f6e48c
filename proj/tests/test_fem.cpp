#include <doctest.h>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "tumoruq/errors.hpp"
#include "tumoruq/fem.hpp"

using namespace tuq;
using tuq::testing::random_vector;

namespace {

MeshPtr reference_triangle() {
    auto mesh = std::make_shared<Mesh>();
    mesh->dim = 2;
    mesh->vertices.resize(3, 2);
    mesh->vertices << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0;
    mesh->cells.resize(1, 3);
    mesh->cells << 0, 1, 2;
    mesh->tissue_labels.assign(3, Tissue::none);
    mesh->boundary_facets = extract_boundary_facets(2, mesh->cells);
    return mesh;
}

// Dense assembly of the mass matrix with an arbitrary quadrature rule;
// independent of the skeleton-based production path.
Matrix quadrature_mass_oracle(const Mesh& mesh, const Quadrature& quad) {
    Matrix M = Matrix::Zero(mesh.n_vertices(), mesh.n_vertices());
    const int nv = mesh.dim + 1;
    const double ref_vol = mesh.dim == 2 ? 0.5 : 1.0 / 6.0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const double vol = cell_volume(mesh, c);
        for (int q = 0; q < quad.points.rows(); ++q) {
            const double w = quad.weights[q] / ref_vol * vol;
            for (int i = 0; i < nv; ++i) {
                for (int j = 0; j < nv; ++j) {
                    M(mesh.cells(c, i), mesh.cells(c, j)) +=
                        w * quad.points(q, i) * quad.points(q, j);
                }
            }
        }
    }
    return M;
}

}  // namespace

TEST_SUITE_BEGIN("fem");

TEST_CASE("quadrature weights sum to reference volume") {
    for (int dim : {2, 3}) {
        for (auto rule : {QuadratureRule::vertex, QuadratureRule::centroid, QuadratureRule::degree2}) {
            const Quadrature q = make_quadrature(rule, dim);
            const double ref = dim == 2 ? 0.5 : 1.0 / 6.0;
            CHECK(q.weights.sum() == doctest::Approx(ref).epsilon(1e-14));
        }
    }
}

TEST_CASE("mass matrix on the reference triangle") {
    FemCache cache(reference_triangle());
    const Matrix M = Matrix(assemble_mass(cache));
    const double A = 0.5;
    Matrix expected(3, 3);
    expected << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    expected *= A / 12.0;
    CHECK((M - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("partition of unity: 1^T M 1 = volume") {
    FemCache cache(generate_structured({2.0, 3.0}, {4, 5}, 2));
    const SpMat M = assemble_mass(cache);
    const Vector ones = Vector::Ones(cache.mesh().n_vertices());
    CHECK(ones.dot(M * ones) == doctest::Approx(6.0).epsilon(1e-13));
}

TEST_CASE("mass matches degree-2 quadrature oracle") {
    FemCache cache(generate_structured({1.0, 1.0}, {2, 2}, 2));
    const Matrix M = Matrix(assemble_mass(cache));
    const Matrix oracle =
        quadrature_mass_oracle(cache.mesh(), make_quadrature(QuadratureRule::degree2, 2));
    CHECK((M - oracle).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("lumped mass") {
    SUBCASE("reference triangle diag A/3") {
        FemCache cache(reference_triangle());
        const Vector lumped = assemble_lumped_mass(cache);
        for (int i = 0; i < 3; ++i) CHECK(lumped[i] == doctest::Approx(0.5 / 3.0).epsilon(1e-15));
    }
    SUBCASE("trace equals volume and positivity") {
        FemCache cache(generate_structured({4.0, 5.0, 2.0}, {2, 2, 3}, 3));
        const Vector lumped = assemble_lumped_mass(cache);
        CHECK(lumped.sum() == doctest::Approx(40.0).epsilon(1e-13));
        CHECK(lumped.minCoeff() > 0.0);
        // row sums of consistent M equal the lumped diagonal
        const SpMat M = assemble_mass(cache);
        const Vector rowsums = M * Vector::Ones(cache.mesh().n_vertices());
        CHECK((rowsums - lumped).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("stiffness") {
    auto mesh = generate_structured({1.0, 1.0}, {3, 3}, 2);
    FemCache cache(mesh);

    SUBCASE("constants in the kernel") {
        const SpMat K = assemble_stiffness(cache, Field(mesh, 0.0));
        const Vector K1 = K * Vector::Ones(mesh->n_vertices());
        CHECK(K1.cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("constant log coefficient scales") {
        const Matrix K0 = Matrix(assemble_stiffness(cache, Field(mesh, 0.0)));
        const Matrix Kc = Matrix(assemble_stiffness(cache, Field(mesh, 1.7)));
        CHECK((Kc - std::exp(1.7) * K0).cwiseAbs().maxCoeff() < 1e-12 * Kc.cwiseAbs().maxCoeff());
    }

    SUBCASE("random coefficient matches per-cell hand assembly") {
        auto two_tri = generate_structured({1.0, 2.0}, {1, 1}, 2);
        FemCache small(two_tri);
        Field log_coeff(two_tri, random_vector(two_tri->n_vertices(), 42, 0.5));
        const Matrix K = Matrix(assemble_stiffness(small, log_coeff));

        Matrix oracle = Matrix::Zero(4, 4);
        for (int c = 0; c < two_tri->n_cells(); ++c) {
            double mbar = 0.0;
            for (int i = 0; i < 3; ++i) mbar += log_coeff.values[two_tri->cells(c, i)];
            const double coeff = std::exp(mbar / 3.0);
            // hand gradients from vertex coordinates
            Eigen::Matrix2d E;
            E.col(0) = (two_tri->vertices.row(two_tri->cells(c, 1)) -
                        two_tri->vertices.row(two_tri->cells(c, 0)))
                           .transpose();
            E.col(1) = (two_tri->vertices.row(two_tri->cells(c, 2)) -
                        two_tri->vertices.row(two_tri->cells(c, 0)))
                           .transpose();
            Eigen::Matrix2d Ginv = E.inverse().transpose();
            Eigen::Matrix<double, 3, 2> g;
            g.row(1) = Ginv.col(0).transpose();
            g.row(2) = Ginv.col(1).transpose();
            g.row(0) = -g.row(1) - g.row(2);
            const double vol = cell_volume(*two_tri, c);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    oracle(two_tri->cells(c, i), two_tri->cells(c, j)) +=
                        coeff * vol * g.row(i).dot(g.row(j));
                }
            }
        }
        CHECK((K - oracle).cwiseAbs().maxCoeff() < 1e-13);
    }

    SUBCASE("non-finite coefficient rejected") {
        Vector bad = Vector::Zero(mesh->n_vertices());
        bad[0] = 1e300;  // exp overflows to inf
        CHECK_THROWS_AS(assemble_stiffness(cache, Field(mesh, bad)), AssemblyError);
    }
}

TEST_CASE("assembled matrices are symmetric") {
    auto mesh = generate_structured({2.0, 1.0, 1.0}, {2, 2, 2}, 3);
    FemCache cache(mesh);
    Field coeff(mesh, random_vector(mesh->n_vertices(), 7, 0.3));
    for (const Matrix M : {Matrix(assemble_mass(cache)), Matrix(assemble_stiffness(cache, coeff))}) {
        CHECK((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * M.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("stiffness kernel is exactly the constants") {
    auto mesh = generate_structured({1.0, 1.0}, {3, 3}, 2);
    FemCache cache(mesh);
    const Matrix K = Matrix(assemble_stiffness(cache, Field(mesh, 0.0)));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
    CHECK(std::abs(eig.eigenvalues()[0]) < 1e-12 * K.cwiseAbs().maxCoeff());
    CHECK(eig.eigenvalues()[1] > 1e-10);
}

TEST_CASE("reaction term") {
    auto mesh = generate_structured({1.0, 1.0}, {2, 2}, 2);
    FemCache cache(mesh);
    Field kappa(mesh, 0.3);

    SUBCASE("u = 0 and u = 1 are logistic fixed points") {
        auto r0 = assemble_reaction(cache, kappa, Field(mesh, 0.0));
        CHECK(r0.vector.cwiseAbs().maxCoeff() == 0.0);
        auto r1 = assemble_reaction(cache, kappa, Field(mesh, 1.0));
        CHECK(r1.vector.cwiseAbs().maxCoeff() < 1e-15);
        // J at u=1: -int e^{mk} phi phi under centroid quadrature
        const Matrix J = Matrix(r1.jacobian);
        const Matrix centroid_mass =
            quadrature_mass_oracle(cache.mesh(), make_quadrature(QuadratureRule::centroid, 2));
        CHECK((J + std::exp(0.3) * centroid_mass).cwiseAbs().maxCoeff() < 1e-14);
    }

    SUBCASE("u = 0.5 on the reference triangle matches quadrature oracle") {
        FemCache ref(reference_triangle());
        auto r = assemble_reaction(ref, Field(ref.mesh_ptr(), 0.0), Field(ref.mesh_ptr(), 0.5));
        // integrand 0.25 * phi_i, centroid rule: 0.25 * (1/3) * A per vertex
        for (int i = 0; i < 3; ++i) {
            CHECK(r.vector[i] == doctest::Approx(0.25 * 0.5 / 3.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("point interpolation") {
    auto mesh = generate_structured({2.0, 2.0}, {4, 4}, 2);
    FemCache cache(mesh);

    SUBCASE("P1 reproduces affine fields") {
        Vector affine(mesh->n_vertices());
        for (int v = 0; v < mesh->n_vertices(); ++v) {
            affine[v] = 3.0 * mesh->vertices(v, 0) - 2.0 * mesh->vertices(v, 1) + 0.5;
        }
        Matrix pts(3, 2);
        pts << 0.37, 1.21, 1.99, 0.01, 1.0, 1.0;
        const Vector vals = interpolate_at_points(cache, Field(mesh, affine), pts);
        for (int p = 0; p < 3; ++p) {
            CHECK(vals[p] ==
                  doctest::Approx(3.0 * pts(p, 0) - 2.0 * pts(p, 1) + 0.5).epsilon(1e-13));
        }
    }

    SUBCASE("vertex point returns the vertex value") {
        Vector f = random_vector(mesh->n_vertices(), 5);
        Matrix pts(1, 2);
        pts << mesh->vertices(7, 0), mesh->vertices(7, 1);
        const Vector vals = interpolate_at_points(cache, Field(mesh, f), pts);
        CHECK(vals[0] == doctest::Approx(f[7]).epsilon(1e-13));
    }

    SUBCASE("adjoint identity") {
        Matrix pts(5, 2);
        pts << 0.1, 0.2, 1.5, 1.7, 0.33, 1.99, 1.01, 0.77, 0.5, 0.5;
        PointInterpolator interp(cache, pts);
        const Vector u = random_vector(mesh->n_vertices(), 11);
        const Vector y = random_vector(5, 12);
        const double lhs = interp.interpolate(u).dot(y);
        const double rhs = u.dot(interp.scatter(y));
        CHECK(std::abs(lhs - rhs) <= 1e-13 * std::max(std::abs(lhs), 1.0));
    }

    SUBCASE("outside point raises with its index") {
        Matrix pts(2, 2);
        pts << 0.5, 0.5, 5.0, 5.0;
        try {
            PointInterpolator interp(cache, pts);
            CHECK(false);
        } catch (const OutOfDomainError& e) {
            CHECK(std::string(e.what()).find("1") != std::string::npos);
        }
    }
}

TEST_CASE("integrate") {
    auto mesh = generate_structured({1.0, 1.0}, {5, 5}, 2);
    FemCache cache(mesh);

    SUBCASE("constants give the volume") {
        CHECK(integrate(cache, Vector::Ones(mesh->n_vertices())) ==
              doctest::Approx(1.0).epsilon(1e-14));
    }

    SUBCASE("affine integrand is exact") {
        Vector affine(mesh->n_vertices());
        for (int v = 0; v < mesh->n_vertices(); ++v) {
            affine[v] = 2.0 * mesh->vertices(v, 0) + mesh->vertices(v, 1);
        }
        // int over unit square of 2x + y = 1.5
        CHECK(integrate(cache, affine) == doctest::Approx(1.5).epsilon(1e-14));
    }

    SUBCASE("linearity") {
        const Vector f = random_vector(mesh->n_vertices(), 3);
        const Vector g = random_vector(mesh->n_vertices(), 4);
        const double lhs = integrate(cache, (2.5 * f - 1.25 * g).eval());
        const double rhs = 2.5 * integrate(cache, f) - 1.25 * integrate(cache, g);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
    }
}

TEST_SUITE_END();
