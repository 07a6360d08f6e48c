#pragma once

#include <string>
#include <vector>

#include "tumoruq/fem.hpp"
#include "tumoruq/forward.hpp"

namespace tuq {

// Regular voxel grid, row-major with x fastest. Voxel (i,j,k) is sampled at
// its center: origin + (index + 0.5) * spacing.
struct VoxelImage {
    std::vector<int> dims;        // nx, ny[, nz]
    std::vector<double> spacing;  // mm per axis
    std::vector<double> origin;   // mm
    std::vector<double> data;     // product(dims) values

    int ndim() const { return static_cast<int>(dims.size()); }
    long size() const;
    long flat_index(int i, int j, int k = 0) const;
    double voxel_volume() const;
    Eigen::VectorXd center(long flat) const;

    void validate() const;
    bool same_geometry(const VoxelImage& other) const;
};

VoxelImage make_voxel_image(std::vector<int> dims, std::vector<double> spacing,
                            std::vector<double> origin, double fill = 0.0);

// Cellularity from apparent-diffusion data: (ADC_w - ADC)/(ADC_w - ADC_min)
// inside the mask (>0.5), 0 outside, negatives clamped to 0 with a counter.
struct CellularityResult {
    VoxelImage image;
    long clamped_negative = 0;
};
CellularityResult adc_to_cellularity(const VoxelImage& adc, double adc_w,
                                     const VoxelImage& roi_mask);

// 0.8 on enhancing voxels (taking precedence), 0.16 on non-enhancing-only
// voxels, 0 elsewhere. Masks are thresholded at 0.5.
VoxelImage seed_from_segmentation(const VoxelImage& enhancing, const VoxelImage& non_enhancing);

// Multilinear voxel interpolation at mesh vertices (linear extrapolation
// within the border half-voxel, so affine images are reproduced exactly).
Field voxel_to_field(const VoxelImage& img, MeshPtr mesh, bool clamp01 = false);
// P1 interpolation at voxel centers; NaN outside the mesh.
VoxelImage field_to_voxel(const FemCache& cache, const Field& field, const VoxelImage& geometry);

// `.twimg` JSON header {dims, spacing_mm, origin_mm, dtype:"f32le"} plus
// `.twimg.bin` raw little-endian float32.
void save_voxel_image(const VoxelImage& img, const std::string& path);
VoxelImage load_voxel_image(const std::string& path);

struct ManifestEntry {
    double t_days = 0.0;
    std::string image;  // path relative to the manifest
};

struct ObservationManifest {
    double noise_variance = 0.0;
    std::vector<ManifestEntry> observations;  // strictly increasing times

    void validate() const;
};

void save_manifest(const ObservationManifest& manifest, const std::string& path);
ObservationManifest load_manifest(const std::string& path);

// Observation set over the voxel centers that fall inside the mesh; all
// manifest images must share one geometry.
ObservationSet observations_from_manifest(const FemCache& cache,
                                          const ObservationManifest& manifest,
                                          const std::string& base_dir);

// Voxel centers of `img` that lie inside the mesh, as flat indices.
std::vector<long> voxel_centers_inside(const FemCache& cache, const VoxelImage& img);

}  // namespace tuq
