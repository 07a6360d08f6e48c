#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tuq {

enum class Tissue : std::uint8_t { none = 0, gray = 1, white = 2 };

// Simplicial P1 mesh (triangles in 2D, tetrahedra in 3D) with per-vertex
// tissue labels. Meshes are immutable after construction and safe to share
// read-only across threads; label changes go through assign_labels, which
// returns a new mesh.
struct Mesh {
    int dim = 2;
    // n_vertices x dim, coordinates in mm.
    Eigen::MatrixXd vertices;
    // n_cells x (dim+1) vertex indices, consistently oriented (positive volume).
    Eigen::MatrixXi cells;
    std::vector<Tissue> tissue_labels;
    // Facets shared by exactly one cell; each facet is `dim` vertex indices.
    std::vector<std::array<int, 3>> boundary_facets;  // last entry unused in 2D

    int n_vertices() const { return static_cast<int>(vertices.rows()); }
    int n_cells() const { return static_cast<int>(cells.rows()); }
};

using MeshPtr = std::shared_ptr<Mesh>;

// Uniform simplicial subdivision of the box [0,extent_0] x ... ; squares split
// into 2 triangles, cubes into 6 tetrahedra. Labels start as Tissue::none.
MeshPtr generate_structured(const std::vector<double>& extent_mm,
                            const std::vector<int>& resolution, int dim);

using Labeler = std::function<Tissue(const Eigen::VectorXd& point)>;

// Returns a copy of the mesh with labels replaced by the predicate's output.
MeshPtr assign_labels(const Mesh& mesh, const Labeler& labeler);

Labeler constant_labeler(Tissue t);
Labeler halfplane_labeler(int axis, double threshold, Tissue below, Tissue at_or_above);
Labeler disk_labeler(const Eigen::VectorXd& center, double radius, Tissue inside, Tissue outside);

// `.twmesh` JSON header plus `.twmesh.bin` little-endian sidecar
// (float64 coordinates, int32 cell indices, uint8 labels, in that order).
void save_mesh(const Mesh& mesh, const std::string& path);
MeshPtr load_mesh(const std::string& path);

// Derived from cells; exposed for validation and generators.
std::vector<std::array<int, 3>> extract_boundary_facets(int dim, const Eigen::MatrixXi& cells);

double cell_volume(const Mesh& mesh, int cell);

}  // namespace tuq
