#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tumoruq/inverse.hpp"
#include "tumoruq/study.hpp"

namespace tuq {

// Single-file JSON run configuration. The schema is validated before any
// compute; unknown keys are rejected so typos fail loudly.
struct RunConfig {
    nlohmann::json raw;

    // mesh
    int mesh_dim = 2;
    std::vector<double> mesh_extent_mm = {100.0, 100.0};
    std::vector<int> mesh_resolution = {40, 40};
    std::string mesh_labeler = "none";  // none | all-gray | all-white | halfplane | disk
    double mesh_halfplane_min_x = 50.0;
    std::vector<double> mesh_disk_center;
    double mesh_disk_radius = 0.0;
    std::string mesh_path;  // pre-existing mesh for the solver commands

    // prior
    std::optional<PriorPreset> prior_preset;
    bool split_diffusion = false;
    struct PriorBlockConfig {
        std::string name;
        double mean = 0.0;
        double variance = 0.1;
        double rho_mm = 100.0;
        std::optional<double> robin_coeff;
    };
    std::vector<PriorBlockConfig> prior_blocks;

    // therapy
    TherapySchedule therapy;
    std::string schedule_csv;

    // time
    double t0 = 0.0, tf = 84.0, dt = 1.0;
    double prediction_t0 = 84.0, prediction_tf = 112.0;

    // observations
    std::string manifest_path;
    std::string u0_image_path;

    // solver
    NewtonOptions solver;

    // laplace
    int laplace_rank = 50;
    int laplace_oversample = 10;

    // qoi
    std::string qoi_kind = "tv";
    double qoi_threshold = 0.1;
    int qoi_n_samples = 500;
    double qoi_reference_scalar = 0.0;
    std::string qoi_reference_image;
    std::string qoi_source = "posterior";  // prior | posterior
    std::string posterior_path;
    std::string map_vector_path;

    // study
    std::optional<ScenarioConfig> study;
    std::vector<Cadence> study_cadences = {Cadence::daily, Cadence::weekly, Cadence::fortnightly};

    // seeds / execution
    std::uint64_t seed = 0;
    int threads = 0;
    std::string output_dir = "out";
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const nlohmann::json& j);

// Schedule CSV with columns type (rt|ct), time_days, dose.
void load_schedule_csv(const std::string& path, TherapySchedule& schedule);
void save_schedule_csv(const TherapySchedule& schedule, const std::string& path);

// Flat parameter vector: `.twvec` JSON header {size} + float64 sidecar.
void save_vector(const Vector& v, const std::string& path);
Vector load_vector(const std::string& path);

// Low-rank posterior: `.twpost` JSON header {dim, rank, oversample} + float64
// sidecar (m_map, eigenvalues, eigenvectors column-major).
void save_posterior(const LowRankPosterior& posterior, const std::string& path);
LowRankPosterior load_posterior(const std::string& path, std::shared_ptr<const BlockPrior> prior);

}  // namespace tuq
