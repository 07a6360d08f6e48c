#include "tumoruq/mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "tumoruq/errors.hpp"

namespace tuq {

namespace {

double signed_volume(const Eigen::MatrixXd& verts, const Eigen::MatrixXi& cells, int c, int dim) {
    if (dim == 2) {
        Eigen::Vector2d a = verts.row(cells(c, 0)).head<2>();
        Eigen::Vector2d b = verts.row(cells(c, 1)).head<2>();
        Eigen::Vector2d d = verts.row(cells(c, 2)).head<2>();
        return 0.5 * ((b.x() - a.x()) * (d.y() - a.y()) - (b.y() - a.y()) * (d.x() - a.x()));
    }
    Eigen::Vector3d a = verts.row(cells(c, 0)).head<3>();
    Eigen::Matrix3d e;
    e.col(0) = Eigen::Vector3d(verts.row(cells(c, 1)).head<3>()) - a;
    e.col(1) = Eigen::Vector3d(verts.row(cells(c, 2)).head<3>()) - a;
    e.col(2) = Eigen::Vector3d(verts.row(cells(c, 3)).head<3>()) - a;
    return e.determinant() / 6.0;
}

void orient_positive(const Eigen::MatrixXd& verts, Eigen::MatrixXi& cells, int dim) {
    for (int c = 0; c < cells.rows(); ++c) {
        if (signed_volume(verts, cells, c, dim) < 0.0) {
            std::swap(cells(c, dim - 1), cells(c, dim));
        }
    }
}

}  // namespace

double cell_volume(const Mesh& mesh, int cell) {
    return signed_volume(mesh.vertices, mesh.cells, cell, mesh.dim);
}

std::vector<std::array<int, 3>> extract_boundary_facets(int dim, const Eigen::MatrixXi& cells) {
    // A facet of a d-simplex is the cell minus one vertex; boundary facets are
    // those appearing in exactly one cell.
    std::map<std::array<int, 3>, std::pair<int, std::array<int, 3>>> counts;
    const int nv = dim + 1;
    for (int c = 0; c < cells.rows(); ++c) {
        for (int skip = 0; skip < nv; ++skip) {
            std::array<int, 3> facet{-1, -1, -1};
            int k = 0;
            for (int i = 0; i < nv; ++i) {
                if (i != skip) facet[k++] = cells(c, i);
            }
            std::array<int, 3> key = facet;
            std::sort(key.begin(), key.begin() + dim);
            auto it = counts.find(key);
            if (it == counts.end()) {
                counts.emplace(key, std::make_pair(1, facet));
            } else {
                it->second.first += 1;
            }
        }
    }
    std::vector<std::array<int, 3>> boundary;
    for (const auto& [key, entry] : counts) {
        if (entry.first == 1) boundary.push_back(entry.second);
    }
    return boundary;
}

MeshPtr generate_structured(const std::vector<double>& extent_mm,
                            const std::vector<int>& resolution, int dim) {
    if (dim != 2 && dim != 3) {
        throw std::invalid_argument("generate_structured: dim must be 2 or 3, got " +
                                    std::to_string(dim));
    }
    if (static_cast<int>(extent_mm.size()) != dim || static_cast<int>(resolution.size()) != dim) {
        throw std::invalid_argument("generate_structured: extent/resolution size must equal dim");
    }
    for (int a = 0; a < dim; ++a) {
        if (!(extent_mm[a] > 0.0)) {
            throw std::invalid_argument("generate_structured: extent must be positive on axis " +
                                        std::to_string(a));
        }
        if (resolution[a] < 1) {
            throw std::invalid_argument("generate_structured: resolution must be >= 1 on axis " +
                                        std::to_string(a));
        }
    }

    auto mesh = std::make_shared<Mesh>();
    mesh->dim = dim;
    const int nx = resolution[0], ny = resolution[1];
    const double hx = extent_mm[0] / nx, hy = extent_mm[1] / ny;

    if (dim == 2) {
        const int nvx = nx + 1, nvy = ny + 1;
        mesh->vertices.resize(static_cast<long>(nvx) * nvy, 2);
        for (int j = 0; j < nvy; ++j) {
            for (int i = 0; i < nvx; ++i) {
                mesh->vertices.row(i + nvx * j) << i * hx, j * hy;
            }
        }
        mesh->cells.resize(2L * nx * ny, 3);
        int c = 0;
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const int a = i + nvx * j;
                const int b = (i + 1) + nvx * j;
                const int cc = (i + 1) + nvx * (j + 1);
                const int d = i + nvx * (j + 1);
                mesh->cells.row(c++) << a, b, cc;
                mesh->cells.row(c++) << a, cc, d;
            }
        }
    } else {
        const int nz = resolution[2];
        const double hz = extent_mm[2] / nz;
        const int nvx = nx + 1, nvy = ny + 1, nvz = nz + 1;
        mesh->vertices.resize(static_cast<long>(nvx) * nvy * nvz, 3);
        auto vid = [&](int i, int j, int k) { return i + nvx * (j + nvy * k); };
        for (int k = 0; k < nvz; ++k) {
            for (int j = 0; j < nvy; ++j) {
                for (int i = 0; i < nvx; ++i) {
                    mesh->vertices.row(vid(i, j, k)) << i * hx, j * hy, k * hz;
                }
            }
        }
        // Kuhn subdivision: six tetrahedra per cube, all sharing the main
        // diagonal; face splits are translation-invariant, hence conforming.
        static const int paths[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                        {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
        mesh->cells.resize(6L * nx * ny * nz, 4);
        int c = 0;
        for (int k = 0; k < nz; ++k) {
            for (int j = 0; j < ny; ++j) {
                for (int i = 0; i < nx; ++i) {
                    const int base[3] = {i, j, k};
                    for (const auto& path : paths) {
                        int p[3] = {base[0], base[1], base[2]};
                        int tet[4];
                        tet[0] = vid(p[0], p[1], p[2]);
                        for (int s = 0; s < 3; ++s) {
                            p[path[s]] += 1;
                            tet[s + 1] = vid(p[0], p[1], p[2]);
                        }
                        mesh->cells.row(c++) << tet[0], tet[1], tet[2], tet[3];
                    }
                }
            }
        }
    }

    orient_positive(mesh->vertices, mesh->cells, dim);
    mesh->tissue_labels.assign(mesh->n_vertices(), Tissue::none);
    mesh->boundary_facets = extract_boundary_facets(dim, mesh->cells);
    return mesh;
}

MeshPtr assign_labels(const Mesh& mesh, const Labeler& labeler) {
    auto out = std::make_shared<Mesh>(mesh);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        out->tissue_labels[v] = labeler(mesh.vertices.row(v).transpose());
    }
    return out;
}

Labeler constant_labeler(Tissue t) {
    return [t](const Eigen::VectorXd&) { return t; };
}

Labeler halfplane_labeler(int axis, double threshold, Tissue below, Tissue at_or_above) {
    return [=](const Eigen::VectorXd& x) { return x[axis] < threshold ? below : at_or_above; };
}

Labeler disk_labeler(const Eigen::VectorXd& center, double radius, Tissue inside, Tissue outside) {
    return [=](const Eigen::VectorXd& x) {
        return (x - center).norm() <= radius ? inside : outside;
    };
}

namespace {

template <typename T>
void write_raw(std::ofstream& os, const T* data, std::size_t count) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_raw(std::ifstream& is, T* data, std::size_t count, const char* what) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
    if (!is) throw FormatError(std::string("mesh binary truncated while reading ") + what);
}

}  // namespace

void save_mesh(const Mesh& mesh, const std::string& path) {
    nlohmann::json header;
    header["dim"] = mesh.dim;
    header["n_vertices"] = mesh.n_vertices();
    header["n_cells"] = mesh.n_cells();
    header["label_names"] = {"none", "gray", "white"};
    {
        std::ofstream os(path);
        if (!os) throw FormatError("cannot open for writing: " + path);
        os << header.dump(2) << "\n";
    }
    std::ofstream bin(path + ".bin", std::ios::binary);
    if (!bin) throw FormatError("cannot open for writing: " + path + ".bin");
    // Row-major streams so the layout is independent of Eigen's storage order.
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        for (int a = 0; a < mesh.dim; ++a) {
            const double x = mesh.vertices(v, a);
            write_raw(bin, &x, 1);
        }
    }
    for (int c = 0; c < mesh.n_cells(); ++c) {
        for (int i = 0; i <= mesh.dim; ++i) {
            const std::int32_t idx = mesh.cells(c, i);
            write_raw(bin, &idx, 1);
        }
    }
    write_raw(bin, reinterpret_cast<const std::uint8_t*>(mesh.tissue_labels.data()),
              mesh.tissue_labels.size());
}

MeshPtr load_mesh(const std::string& path) {
    nlohmann::json header;
    {
        std::ifstream is(path);
        if (!is) throw FormatError("cannot open mesh header: " + path);
        try {
            is >> header;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("malformed mesh header in " + path + ": " + e.what());
        }
    }
    for (const char* key : {"dim", "n_vertices", "n_cells"}) {
        if (!header.contains(key) || !header[key].is_number_integer()) {
            throw FormatError(std::string("mesh header missing integer field '") + key + "'");
        }
    }
    const int dim = header["dim"].get<int>();
    if (dim != 2 && dim != 3) {
        throw FormatError("mesh header field 'dim' must be 2 or 3, got " + std::to_string(dim));
    }
    const long nv = header["n_vertices"].get<long>();
    const long nc = header["n_cells"].get<long>();
    if (nv <= 0 || nc <= 0) {
        throw FormatError("mesh header fields n_vertices/n_cells must be positive");
    }

    auto mesh = std::make_shared<Mesh>();
    mesh->dim = dim;
    mesh->vertices.resize(nv, dim);
    mesh->cells.resize(nc, dim + 1);
    mesh->tissue_labels.assign(nv, Tissue::none);

    std::ifstream bin(path + ".bin", std::ios::binary);
    if (!bin) throw FormatError("cannot open mesh binary: " + path + ".bin");
    for (long v = 0; v < nv; ++v) {
        for (int a = 0; a < dim; ++a) {
            double x;
            read_raw(bin, &x, 1, "vertices");
            mesh->vertices(v, a) = x;
        }
    }
    for (long c = 0; c < nc; ++c) {
        for (int i = 0; i <= dim; ++i) {
            std::int32_t idx;
            read_raw(bin, &idx, 1, "cells");
            if (idx < 0 || idx >= nv) {
                throw FormatError("mesh cell index out of range: cell " + std::to_string(c) +
                                  " references vertex " + std::to_string(idx) + " of " +
                                  std::to_string(nv));
            }
            mesh->cells(c, i) = idx;
        }
    }
    std::vector<std::uint8_t> labels(nv);
    read_raw(bin, labels.data(), labels.size(), "labels");
    for (long v = 0; v < nv; ++v) {
        if (labels[v] > 2) {
            throw FormatError("mesh label out of range at vertex " + std::to_string(v));
        }
        mesh->tissue_labels[v] = static_cast<Tissue>(labels[v]);
    }

    mesh->boundary_facets = extract_boundary_facets(dim, mesh->cells);
    return mesh;
}

}  // namespace tuq
