#include "tumoruq/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "tumoruq/errors.hpp"

namespace tuq {

void validate_field(const Field& f, const Mesh& mesh, const char* name) {
    if (f.mesh.get() != &mesh) {
        throw std::invalid_argument(std::string(name) + ": field lives on a different mesh");
    }
    if (f.size() != mesh.n_vertices()) {
        throw std::invalid_argument(std::string(name) + ": field size " +
                                    std::to_string(f.size()) + " != vertex count " +
                                    std::to_string(mesh.n_vertices()));
    }
    if (!f.values.allFinite()) {
        throw std::invalid_argument(std::string(name) + ": field has non-finite entries");
    }
}

Vector gray_indicator(const Mesh& mesh) {
    Vector chi = Vector::Zero(mesh.n_vertices());
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        if (mesh.tissue_labels[v] == Tissue::gray) chi[v] = 1.0;
    }
    return chi;
}

Quadrature make_quadrature(QuadratureRule rule, int dim) {
    const int nv = dim + 1;
    const double ref_vol = (dim == 2) ? 0.5 : 1.0 / 6.0;
    Quadrature q;
    q.rule = rule;
    switch (rule) {
        case QuadratureRule::vertex:
            q.points = Matrix::Identity(nv, nv);
            q.weights = Vector::Constant(nv, ref_vol / nv);
            break;
        case QuadratureRule::centroid:
            q.points = Matrix::Constant(1, nv, 1.0 / nv);
            q.weights = Vector::Constant(1, ref_vol);
            break;
        case QuadratureRule::degree2:
            if (dim == 2) {
                // Edge-midpoint rule, exact for quadratics.
                q.points.resize(3, 3);
                q.points << 0.5, 0.5, 0.0, 0.0, 0.5, 0.5, 0.5, 0.0, 0.5;
                q.weights = Vector::Constant(3, ref_vol / 3.0);
            } else {
                const double a = 0.5854101966249685;
                const double b = 0.1381966011250105;
                q.points.resize(4, 4);
                q.points << a, b, b, b, b, a, b, b, b, b, a, b, b, b, b, a;
                q.weights = Vector::Constant(4, ref_vol / 4.0);
            }
            break;
    }
    return q;
}

FemCache::FemCache(MeshPtr mesh) : mesh_(std::move(mesh)) {
    const Mesh& m = *mesh_;
    const int dim = m.dim;
    const int nv = dim + 1;
    const int nc = m.n_cells();
    const int n = m.n_vertices();
    if (static_cast<int>(m.tissue_labels.size()) != n) {
        throw std::invalid_argument("FemCache: tissue_labels length != vertex count");
    }

    volumes_.resize(nc);
    grads_.resize(static_cast<std::size_t>(nc) * nv * dim);
    for (int c = 0; c < nc; ++c) {
        const double vol = cell_volume(m, c);
        if (!(vol > 0.0) || !std::isfinite(vol)) {
            throw AssemblyError("degenerate cell " + std::to_string(c) + " with volume " +
                                std::to_string(vol));
        }
        volumes_[c] = vol;
        total_volume_ += vol;
        // Gradients of barycentric coordinates: rows 1..dim of E^{-T}, row 0
        // closes the partition of unity.
        Matrix edges(dim, dim);
        for (int i = 0; i < dim; ++i) {
            edges.col(i) =
                (m.vertices.row(m.cells(c, i + 1)) - m.vertices.row(m.cells(c, 0))).transpose();
        }
        Matrix ginv = edges.inverse().transpose();  // rows are grad lambda_{i+1}
        Eigen::Map<Matrix> g(grads_.data() + static_cast<std::ptrdiff_t>(c) * nv * dim, nv, dim);
        g.row(0).setZero();
        for (int i = 0; i < dim; ++i) {
            g.row(i + 1) = ginv.col(i).transpose();
            g.row(0) -= ginv.col(i).transpose();
        }
    }

    // Shared sparsity skeleton over the vertex-coupling graph.
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(nc) * nv * nv);
    for (int c = 0; c < nc; ++c) {
        for (int i = 0; i < nv; ++i) {
            for (int j = 0; j < nv; ++j) {
                trips.emplace_back(m.cells(c, i), m.cells(c, j), 0.0);
            }
        }
    }
    skeleton_.resize(n, n);
    skeleton_.setFromTriplets(trips.begin(), trips.end());
    skeleton_.makeCompressed();

    offsets_.resize(static_cast<std::size_t>(nc) * nv * nv);
    const int* outer = skeleton_.outerIndexPtr();
    const int* inner = skeleton_.innerIndexPtr();
    for (int c = 0; c < nc; ++c) {
        for (int i = 0; i < nv; ++i) {
            for (int j = 0; j < nv; ++j) {
                const int row = m.cells(c, i);
                const int col = m.cells(c, j);
                const int* begin = inner + outer[col];
                const int* end = inner + outer[col + 1];
                const int* it = std::lower_bound(begin, end, row);
                offsets_[(static_cast<std::ptrdiff_t>(c) * nv + i) * nv + j] =
                    static_cast<int>(it - inner);
            }
        }
    }

    // Reference-cell mass block: vol/((d+1)(d+2)) * (ones + I).
    mass_values_.assign(skeleton_.nonZeros(), 0.0);
    unit_stiffness_values_.assign(skeleton_.nonZeros(), 0.0);
    const double mass_scale = 1.0 / static_cast<double>((nv) * (nv + 1));
    for (int c = 0; c < nc; ++c) {
        const double vol = volumes_[c];
        const auto g = grads(c);
        for (int i = 0; i < nv; ++i) {
            for (int j = 0; j < nv; ++j) {
                const int off = entry_offset(c, i, j);
                mass_values_[off] += vol * mass_scale * (i == j ? 2.0 : 1.0);
                unit_stiffness_values_[off] += vol * g.row(i).dot(g.row(j));
            }
        }
    }
}

SpMat FemCache::matrix_from_values(const std::vector<double>& values) const {
    SpMat out = skeleton_;
    std::copy(values.begin(), values.end(), out.valuePtr());
    return out;
}

SpMat assemble_mass(const FemCache& cache) { return cache.matrix_from_values(cache.mass_values()); }

Vector assemble_lumped_mass(const FemCache& cache) {
    const Mesh& m = cache.mesh();
    const int nv = m.dim + 1;
    Vector lumped = Vector::Zero(m.n_vertices());
    for (int c = 0; c < m.n_cells(); ++c) {
        const double w = cache.volume(c) / nv;
        for (int i = 0; i < nv; ++i) lumped[m.cells(c, i)] += w;
    }
    return lumped;
}

SpMat assemble_stiffness(const FemCache& cache, const Field& log_coeff) {
    const Mesh& m = cache.mesh();
    validate_field(log_coeff, m, "assemble_stiffness(log_coeff)");
    const int nv = m.dim + 1;
    std::vector<double> values(cache.skeleton().nonZeros(), 0.0);
    for (int c = 0; c < m.n_cells(); ++c) {
        double mbar = 0.0;
        for (int i = 0; i < nv; ++i) mbar += log_coeff.values[m.cells(c, i)];
        const double coeff = std::exp(mbar / nv);
        if (!std::isfinite(coeff)) {
            throw AssemblyError("non-finite stiffness coefficient on cell " + std::to_string(c));
        }
        const double vol = cache.volume(c);
        const auto g = cache.grads(c);
        for (int i = 0; i < nv; ++i) {
            for (int j = 0; j < nv; ++j) {
                values[cache.entry_offset(c, i, j)] += coeff * vol * g.row(i).dot(g.row(j));
            }
        }
    }
    return cache.matrix_from_values(values);
}

SpMat assemble_boundary_mass(const FemCache& cache) {
    const Mesh& m = cache.mesh();
    const int n = m.n_vertices();
    std::vector<Triplet> trips;
    for (const auto& facet : m.boundary_facets) {
        if (m.dim == 2) {
            const Eigen::Vector2d a = m.vertices.row(facet[0]).head<2>();
            const Eigen::Vector2d b = m.vertices.row(facet[1]).head<2>();
            const double len = (b - a).norm();
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    trips.emplace_back(facet[i], facet[j], len / 6.0 * (i == j ? 2.0 : 1.0));
                }
            }
        } else {
            const Eigen::Vector3d a = m.vertices.row(facet[0]).head<3>();
            const Eigen::Vector3d b = m.vertices.row(facet[1]).head<3>();
            const Eigen::Vector3d c = m.vertices.row(facet[2]).head<3>();
            const double area = 0.5 * (b - a).cross(c - a).norm();
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    trips.emplace_back(facet[i], facet[j], area / 12.0 * (i == j ? 2.0 : 1.0));
                }
            }
        }
    }
    SpMat out(n, n);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

ReactionTerm assemble_reaction(const FemCache& cache, const Field& log_kappa, const Field& u) {
    const Mesh& m = cache.mesh();
    validate_field(log_kappa, m, "assemble_reaction(log_kappa)");
    validate_field(u, m, "assemble_reaction(u)");
    const int nv = m.dim + 1;
    Vector b = Vector::Zero(m.n_vertices());
    std::vector<double> jac(cache.skeleton().nonZeros(), 0.0);
    for (int c = 0; c < m.n_cells(); ++c) {
        double mbar = 0.0, ubar = 0.0;
        for (int i = 0; i < nv; ++i) {
            mbar += log_kappa.values[m.cells(c, i)];
            ubar += u.values[m.cells(c, i)];
        }
        const double kappa = std::exp(mbar / nv);
        ubar /= nv;
        const double vol = cache.volume(c);
        const double bw = kappa * ubar * (1.0 - ubar) * vol / nv;
        const double jw = kappa * (1.0 - 2.0 * ubar) * vol / (nv * nv);
        for (int i = 0; i < nv; ++i) {
            b[m.cells(c, i)] += bw;
            for (int j = 0; j < nv; ++j) {
                jac[cache.entry_offset(c, i, j)] += jw;
            }
        }
    }
    return ReactionTerm{std::move(b), cache.matrix_from_values(jac)};
}

double integrate(const FemCache& cache, const Vector& nodal_values) {
    const Mesh& m = cache.mesh();
    if (nodal_values.size() != m.n_vertices()) {
        throw std::invalid_argument("integrate: values size != vertex count");
    }
    const int nv = m.dim + 1;
    double total = 0.0;
    for (int c = 0; c < m.n_cells(); ++c) {
        double s = 0.0;
        for (int i = 0; i < nv; ++i) s += nodal_values[m.cells(c, i)];
        total += cache.volume(c) * s / nv;
    }
    return total;
}

int FemCache::find_cell(const Eigen::RowVectorXd& point, Vector* barycentric) const {
    const Mesh& m = *mesh_;
    const int dim = m.dim;
    const int nv = dim + 1;
    const double slack = 1e-10;
    Vector lambda(nv);
    for (int c = 0; c < m.n_cells(); ++c) {
        // lambda_i(x) = 1/(d+1) + grad(lambda_i) . (x - centroid)
        Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(dim);
        for (int i = 0; i < nv; ++i) centroid += m.vertices.row(m.cells(c, i));
        centroid /= nv;
        const auto g = grads(c);
        bool inside = true;
        for (int i = 0; i < nv; ++i) {
            lambda[i] = 1.0 / nv + g.row(i).dot(point - centroid);
            if (lambda[i] < -slack) {
                inside = false;
                break;
            }
        }
        if (inside) {
            if (barycentric) *barycentric = lambda;
            return c;
        }
    }
    return -1;
}

PointInterpolator::PointInterpolator(const FemCache& cache, const Matrix& points) {
    const Mesh& m = cache.mesh();
    const int dim = m.dim;
    const int nv = dim + 1;
    if (points.rows() > 0 && points.cols() != dim) {
        throw std::invalid_argument("PointInterpolator: points must be n x dim");
    }
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(points.rows()) * nv);
    Vector lambda(nv);
    for (int p = 0; p < points.rows(); ++p) {
        const int c = cache.find_cell(points.row(p), &lambda);
        if (c < 0) {
            throw OutOfDomainError("point " + std::to_string(p) + " lies outside the mesh");
        }
        for (int i = 0; i < nv; ++i) {
            trips.emplace_back(p, m.cells(c, i), lambda[i]);
        }
    }
    matrix_.resize(points.rows(), m.n_vertices());
    matrix_.setFromTriplets(trips.begin(), trips.end());
    matrix_.makeCompressed();
}

Vector interpolate_at_points(const FemCache& cache, const Field& field, const Matrix& points) {
    validate_field(field, cache.mesh(), "interpolate_at_points(field)");
    return PointInterpolator(cache, points).interpolate(field.values);
}

}  // namespace tuq
