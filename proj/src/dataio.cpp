#include "tumoruq/dataio.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "tumoruq/errors.hpp"

namespace tuq {

long VoxelImage::size() const {
    long n = 1;
    for (int d : dims) n *= d;
    return n;
}

long VoxelImage::flat_index(int i, int j, int k) const {
    long idx = i + static_cast<long>(dims[0]) * j;
    if (ndim() == 3) idx += static_cast<long>(dims[0]) * dims[1] * k;
    return idx;
}

double VoxelImage::voxel_volume() const {
    double v = 1.0;
    for (double s : spacing) v *= s;
    return v;
}

Eigen::VectorXd VoxelImage::center(long flat) const {
    Eigen::VectorXd x(ndim());
    long rem = flat;
    for (int a = 0; a < ndim(); ++a) {
        const int idx = static_cast<int>(rem % dims[a]);
        rem /= dims[a];
        x[a] = origin[a] + (idx + 0.5) * spacing[a];
    }
    return x;
}

void VoxelImage::validate() const {
    if (ndim() != 2 && ndim() != 3) {
        throw std::invalid_argument("VoxelImage: dims must have 2 or 3 axes");
    }
    if (spacing.size() != dims.size() || origin.size() != dims.size()) {
        throw std::invalid_argument("VoxelImage: spacing/origin must match dims");
    }
    for (int d : dims) {
        if (d <= 0) throw std::invalid_argument("VoxelImage: dims must be positive");
    }
    for (double s : spacing) {
        if (!(s > 0)) throw std::invalid_argument("VoxelImage: spacing must be positive");
    }
    if (static_cast<long>(data.size()) != size()) {
        throw std::invalid_argument("VoxelImage: data length != product of dims");
    }
}

bool VoxelImage::same_geometry(const VoxelImage& other) const {
    return dims == other.dims && spacing == other.spacing && origin == other.origin;
}

VoxelImage make_voxel_image(std::vector<int> dims, std::vector<double> spacing,
                            std::vector<double> origin, double fill) {
    VoxelImage img;
    img.dims = std::move(dims);
    img.spacing = std::move(spacing);
    img.origin = std::move(origin);
    long n = 1;
    for (int d : img.dims) n *= d;
    img.data.assign(n, fill);
    img.validate();
    return img;
}

CellularityResult adc_to_cellularity(const VoxelImage& adc, double adc_w,
                                     const VoxelImage& roi_mask) {
    adc.validate();
    roi_mask.validate();
    if (!adc.same_geometry(roi_mask)) {
        throw std::invalid_argument("adc_to_cellularity: mask geometry mismatch");
    }
    double adc_min = std::numeric_limits<double>::infinity();
    long mask_count = 0;
    for (long i = 0; i < adc.size(); ++i) {
        if (roi_mask.data[i] > 0.5) {
            adc_min = std::min(adc_min, adc.data[i]);
            ++mask_count;
        }
    }
    if (mask_count == 0) throw std::invalid_argument("adc_to_cellularity: empty mask");
    if (!(adc_w > adc_min)) {
        throw std::invalid_argument(
            "adc_to_cellularity: degenerate input, ADC_w must exceed the in-mask minimum");
    }
    CellularityResult result;
    result.image = adc;
    for (long i = 0; i < adc.size(); ++i) {
        if (roi_mask.data[i] > 0.5) {
            double d = (adc_w - adc.data[i]) / (adc_w - adc_min);
            if (d < 0.0) {
                d = 0.0;
                ++result.clamped_negative;
            }
            result.image.data[i] = d;
        } else {
            result.image.data[i] = 0.0;
        }
    }
    return result;
}

VoxelImage seed_from_segmentation(const VoxelImage& enhancing, const VoxelImage& non_enhancing) {
    enhancing.validate();
    non_enhancing.validate();
    if (!enhancing.same_geometry(non_enhancing)) {
        throw std::invalid_argument("seed_from_segmentation: mask geometry mismatch");
    }
    VoxelImage seed = enhancing;
    for (long i = 0; i < seed.size(); ++i) {
        if (enhancing.data[i] > 0.5) {
            seed.data[i] = 0.8;
        } else if (non_enhancing.data[i] > 0.5) {
            seed.data[i] = 0.16;
        } else {
            seed.data[i] = 0.0;
        }
    }
    return seed;
}

namespace {

// Multilinear interpolation with the lattice cell clamped to the data hull;
// local coordinates are left unclamped, so the border half-voxel is linear
// extrapolation and affine images are reproduced exactly.
double sample_multilinear(const VoxelImage& img, const Eigen::VectorXd& x) {
    const int nd = img.ndim();
    int base[3] = {0, 0, 0};
    double frac[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < nd; ++a) {
        const double t = (x[a] - img.origin[a]) / img.spacing[a] - 0.5;
        int lo = static_cast<int>(std::floor(t));
        lo = std::max(0, std::min(lo, img.dims[a] - 2));
        if (img.dims[a] == 1) lo = 0;
        base[a] = lo;
        frac[a] = img.dims[a] == 1 ? 0.0 : t - lo;
    }
    double value = 0.0;
    const int corners = 1 << nd;
    for (int corner = 0; corner < corners; ++corner) {
        double w = 1.0;
        int idx[3] = {0, 0, 0};
        for (int a = 0; a < nd; ++a) {
            const int bit = (corner >> a) & 1;
            idx[a] = std::min(base[a] + bit, img.dims[a] - 1);
            w *= bit ? frac[a] : 1.0 - frac[a];
        }
        value += w * img.data[img.flat_index(idx[0], idx[1], idx[2])];
    }
    return value;
}

}  // namespace

Field voxel_to_field(const VoxelImage& img, MeshPtr mesh, bool clamp01) {
    img.validate();
    if (img.ndim() != mesh->dim) {
        throw std::invalid_argument("voxel_to_field: image/mesh dimension mismatch");
    }
    // Overlap check on bounding boxes.
    for (int a = 0; a < mesh->dim; ++a) {
        const double img_lo = img.origin[a];
        const double img_hi = img.origin[a] + img.dims[a] * img.spacing[a];
        const double mesh_lo = img.ndim() ? mesh->vertices.col(a).minCoeff() : 0.0;
        const double mesh_hi = mesh->vertices.col(a).maxCoeff();
        if (mesh_hi < img_lo || mesh_lo > img_hi) {
            throw std::invalid_argument("voxel_to_field: image and mesh do not overlap");
        }
    }
    Vector values(mesh->n_vertices());
    for (int v = 0; v < mesh->n_vertices(); ++v) {
        values[v] = sample_multilinear(img, mesh->vertices.row(v).transpose());
    }
    if (clamp01) values = values.cwiseMax(0.0).cwiseMin(1.0);
    return Field(std::move(mesh), std::move(values));
}

VoxelImage field_to_voxel(const FemCache& cache, const Field& field, const VoxelImage& geometry) {
    geometry.validate();
    validate_field(field, cache.mesh(), "field_to_voxel(field)");
    if (geometry.ndim() != cache.mesh().dim) {
        throw std::invalid_argument("field_to_voxel: image/mesh dimension mismatch");
    }
    VoxelImage out = geometry;
    const int nv = cache.mesh().dim + 1;
    Vector lambda(nv);
    for (long i = 0; i < out.size(); ++i) {
        const Eigen::VectorXd x = out.center(i);
        const int c = cache.find_cell(x.transpose(), &lambda);
        if (c < 0) {
            out.data[i] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        double value = 0.0;
        for (int k = 0; k < nv; ++k) value += lambda[k] * field.values[cache.mesh().cells(c, k)];
        out.data[i] = value;
    }
    return out;
}

void save_voxel_image(const VoxelImage& img, const std::string& path) {
    img.validate();
    nlohmann::json header;
    header["dims"] = img.dims;
    header["spacing_mm"] = img.spacing;
    header["origin_mm"] = img.origin;
    header["dtype"] = "f32le";
    {
        std::ofstream os(path);
        if (!os) throw FormatError("cannot open for writing: " + path);
        os << header.dump(2) << "\n";
    }
    std::ofstream bin(path + ".bin", std::ios::binary);
    if (!bin) throw FormatError("cannot open for writing: " + path + ".bin");
    for (double v : img.data) {
        const float f = static_cast<float>(v);
        bin.write(reinterpret_cast<const char*>(&f), sizeof(float));
    }
}

VoxelImage load_voxel_image(const std::string& path) {
    nlohmann::json header;
    {
        std::ifstream is(path);
        if (!is) throw FormatError("cannot open image header: " + path);
        try {
            is >> header;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("malformed image header in " + path + ": " + e.what());
        }
    }
    VoxelImage img;
    try {
        img.dims = header.at("dims").get<std::vector<int>>();
        img.spacing = header.at("spacing_mm").get<std::vector<double>>();
        img.origin = header.at("origin_mm").get<std::vector<double>>();
        if (header.at("dtype") != "f32le") {
            throw FormatError("image header dtype must be 'f32le' in " + path);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("image header field error in " + path + ": " + e.what());
    }
    if (img.dims.size() != img.spacing.size() || img.dims.size() != img.origin.size() ||
        (img.dims.size() != 2 && img.dims.size() != 3)) {
        throw FormatError("image header dims/spacing_mm/origin_mm inconsistent in " + path);
    }
    long n = 1;
    for (int d : img.dims) {
        if (d <= 0) throw FormatError("image header has non-positive dims in " + path);
        n *= d;
    }
    std::ifstream bin(path + ".bin", std::ios::binary);
    if (!bin) throw FormatError("cannot open image binary: " + path + ".bin");
    img.data.resize(n);
    for (long i = 0; i < n; ++i) {
        float f;
        bin.read(reinterpret_cast<char*>(&f), sizeof(float));
        if (!bin) throw FormatError("image binary truncated in " + path + ".bin");
        img.data[i] = f;
    }
    return img;
}

void ObservationManifest::validate() const {
    if (!(noise_variance > 0)) {
        throw FormatError("manifest: noise_variance must be positive");
    }
    for (std::size_t i = 1; i < observations.size(); ++i) {
        if (!(observations[i].t_days > observations[i - 1].t_days)) {
            throw FormatError("manifest: observation times must be strictly increasing");
        }
    }
}

void save_manifest(const ObservationManifest& manifest, const std::string& path) {
    manifest.validate();
    nlohmann::json j;
    j["noise_variance"] = manifest.noise_variance;
    j["observations"] = nlohmann::json::array();
    for (const auto& obs : manifest.observations) {
        j["observations"].push_back({{"t_days", obs.t_days}, {"image", obs.image}});
    }
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open for writing: " + path);
    os << j.dump(2) << "\n";
}

ObservationManifest load_manifest(const std::string& path) {
    nlohmann::json j;
    {
        std::ifstream is(path);
        if (!is) throw FormatError("cannot open manifest: " + path);
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("malformed manifest " + path + ": " + e.what());
        }
    }
    ObservationManifest manifest;
    try {
        manifest.noise_variance = j.at("noise_variance").get<double>();
        for (const auto& entry : j.at("observations")) {
            manifest.observations.push_back(
                {entry.at("t_days").get<double>(), entry.at("image").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest field error in " + path + ": " + e.what());
    }
    manifest.validate();
    return manifest;
}

std::vector<long> voxel_centers_inside(const FemCache& cache, const VoxelImage& img) {
    std::vector<long> inside;
    for (long i = 0; i < img.size(); ++i) {
        if (cache.find_cell(img.center(i).transpose()) >= 0) inside.push_back(i);
    }
    return inside;
}

ObservationSet observations_from_manifest(const FemCache& cache,
                                          const ObservationManifest& manifest,
                                          const std::string& base_dir) {
    manifest.validate();
    if (manifest.observations.empty()) {
        throw FormatError("manifest contains no observations");
    }
    namespace fs = std::filesystem;
    std::vector<VoxelImage> images;
    images.reserve(manifest.observations.size());
    for (const auto& entry : manifest.observations) {
        images.push_back(load_voxel_image((fs::path(base_dir) / entry.image).string()));
        if (!images.front().same_geometry(images.back())) {
            throw FormatError("manifest images must share one geometry (" + entry.image + ")");
        }
    }
    const std::vector<long> inside = voxel_centers_inside(cache, images.front());

    ObservationSet obs;
    obs.noise_variance = manifest.noise_variance;
    obs.points.resize(static_cast<long>(inside.size()), cache.mesh().dim);
    for (std::size_t p = 0; p < inside.size(); ++p) {
        obs.points.row(static_cast<long>(p)) = images.front().center(inside[p]).transpose();
    }
    obs.data.resize(static_cast<long>(inside.size()), static_cast<long>(images.size()));
    for (std::size_t t = 0; t < images.size(); ++t) {
        obs.times.push_back(manifest.observations[t].t_days);
        for (std::size_t p = 0; p < inside.size(); ++p) {
            obs.data(static_cast<long>(p), static_cast<long>(t)) = images[t].data[inside[p]];
        }
    }
    return obs;
}

}  // namespace tuq
