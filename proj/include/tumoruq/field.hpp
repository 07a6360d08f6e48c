#pragma once

#include <Eigen/Core>

#include "tumoruq/mesh.hpp"

namespace tuq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Nodal coefficient vector of a piecewise-linear scalar function on a mesh.
// Units are carried by context: volume fraction for states, log mm^3/day for
// diffusivity, log 1/day for proliferation.
struct Field {
    MeshPtr mesh;
    Vector values;

    Field() = default;
    Field(MeshPtr m, Vector v) : mesh(std::move(m)), values(std::move(v)) {}
    Field(MeshPtr m, double constant)
        : mesh(std::move(m)), values(Vector::Constant(mesh->n_vertices(), constant)) {}

    int size() const { return static_cast<int>(values.size()); }
};

// Throws std::invalid_argument if the field does not match the mesh or holds
// non-finite entries.
void validate_field(const Field& f, const Mesh& mesh, const char* name);

// Nodal gray-matter indicator (1 on gray vertices, 0 elsewhere).
Vector gray_indicator(const Mesh& mesh);

}  // namespace tuq
