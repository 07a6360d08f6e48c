#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "tumoruq/field.hpp"
#include "tumoruq/mesh.hpp"

namespace tuq {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

enum class QuadratureRule { vertex, centroid, degree2 };

// Points (barycentric coordinates, one row per point) and weights on the
// reference simplex; weights sum to the reference-cell volume.
struct Quadrature {
    QuadratureRule rule;
    Matrix points;    // n_points x (dim+1)
    Vector weights;   // n_points
};

Quadrature make_quadrature(QuadratureRule rule, int dim);

// Precomputed per-cell geometry plus a shared sparsity skeleton for the P1
// vertex-coupling graph. All assembled matrices (mass, stiffness, reaction
// Jacobian) live on this pattern, so repeated assembly is a flat pass over
// cells with no hashing.
class FemCache {
public:
    explicit FemCache(MeshPtr mesh);

    const Mesh& mesh() const { return *mesh_; }
    MeshPtr mesh_ptr() const { return mesh_; }

    double volume(int cell) const { return volumes_[cell]; }
    double total_volume() const { return total_volume_; }
    // (dim+1) x dim matrix of P1 basis gradients on a cell.
    Eigen::Map<const Matrix> grads(int cell) const {
        const int nv = mesh_->dim + 1;
        return Eigen::Map<const Matrix>(grads_.data() + static_cast<std::ptrdiff_t>(cell) * nv * mesh_->dim,
                                        nv, mesh_->dim);
    }

    // Zero-valued compressed matrix with the coupling pattern.
    const SpMat& skeleton() const { return skeleton_; }
    // Offset into valuePtr() for local entry (i,j) of a cell, row-major over
    // the (dim+1)^2 local matrix.
    int entry_offset(int cell, int i, int j) const {
        const int nv = mesh_->dim + 1;
        return offsets_[(static_cast<std::ptrdiff_t>(cell) * nv + i) * nv + j];
    }

    // Value arrays (aligned with skeleton) for the constant-coefficient mass
    // matrix and the unit-coefficient stiffness matrix.
    const std::vector<double>& mass_values() const { return mass_values_; }
    const std::vector<double>& unit_stiffness_values() const { return unit_stiffness_values_; }

    SpMat matrix_from_values(const std::vector<double>& values) const;

    // Containing cell of a point (with 1e-10 barycentric slack) or -1;
    // optionally fills the barycentric coordinates.
    int find_cell(const Eigen::RowVectorXd& point, Vector* barycentric = nullptr) const;

private:
    MeshPtr mesh_;
    std::vector<double> volumes_;
    std::vector<double> grads_;
    double total_volume_ = 0.0;
    SpMat skeleton_;
    std::vector<int> offsets_;
    std::vector<double> mass_values_;
    std::vector<double> unit_stiffness_values_;
};

// Exact P1 consistent mass matrix; row sums equal the lumped-mass diagonal.
SpMat assemble_mass(const FemCache& cache);
// Diagonal of row sums of the consistent mass matrix, strictly positive.
Vector assemble_lumped_mass(const FemCache& cache);
// Stiffness with coefficient exp(log_coeff) interpolated to cell centroids.
SpMat assemble_stiffness(const FemCache& cache, const Field& log_coeff);
// Boundary mass matrix (facet-wise P1 mass over boundary facets).
SpMat assemble_boundary_mass(const FemCache& cache);

// Reaction vector b_i = \int exp(m_kappa) u(1-u) phi_i dx and its state
// Jacobian, both by centroid quadrature of the interpolated integrand.
struct ReactionTerm {
    Vector vector;
    SpMat jacobian;
};
ReactionTerm assemble_reaction(const FemCache& cache, const Field& log_kappa, const Field& u);

// Consistent-mass integration of the P1 interpolant: 1^T M v.
double integrate(const FemCache& cache, const Vector& nodal_values);

// Barycentric point interpolation (the observation operator) and its exact
// adjoint. Construction locates every point; a point outside the mesh (with
// 1e-10 barycentric slack) raises OutOfDomainError naming the point index.
class PointInterpolator {
public:
    PointInterpolator(const FemCache& cache, const Matrix& points);

    int n_points() const { return static_cast<int>(matrix_.rows()); }
    const SpMat& matrix() const { return matrix_; }

    Vector interpolate(const Vector& nodal_values) const { return matrix_ * nodal_values; }
    Vector scatter(const Vector& point_values) const { return matrix_.transpose() * point_values; }

private:
    SpMat matrix_;  // n_points x n_vertices
};

Vector interpolate_at_points(const FemCache& cache, const Field& field, const Matrix& points);

}  // namespace tuq
