#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "tumoruq/dataio.hpp"
#include "tumoruq/laplace.hpp"
#include "tumoruq/map_solver.hpp"
#include "tumoruq/qoi.hpp"
#include "tumoruq/stats.hpp"

namespace tuq {

enum class Cadence { daily, weekly, fortnightly };

std::string cadence_name(Cadence c);
Cadence cadence_from_name(const std::string& name);
// Observation days from t_begin to t_end inclusive at the cadence interval.
std::vector<double> cadence_times(Cadence c, double t_begin, double t_end);

enum class PriorPreset { upenn_table2, ivygap_table3 };

PriorPreset prior_preset_from_name(const std::string& name);
std::string prior_preset_name(PriorPreset preset);
// Named hyperparameter presets; block order matches ParameterLayout:
// [m_D | m_kappa] or [m_D_gray | m_D_white | m_kappa].
std::shared_ptr<BlockPrior> make_preset_prior(std::shared_ptr<const FemCache> cache,
                                              PriorPreset preset, bool split_diffusion);
// Preset observation-noise variance (only ivygap-table3 pins one).
double preset_noise_variance(PriorPreset preset);

// Weekday RT fractions plus daily concurrent chemotherapy doses over the
// therapy block, starting at start_day.
TherapySchedule make_chemoradiation_schedule(double start_day, int weeks, double rt_dose_gy,
                                             double alpha_rt, double beta_rt, double alpha_ct,
                                             double beta_ct_rate);

struct ScenarioConfig {
    int dim = 2;
    double extent_mm = 120.0;
    // The reaction-diffusion front width sqrt(D/kappa) is ~1.4 mm in white
    // matter; meshes much coarser than that mis-speed the front, and the
    // calibration then absorbs discretization error instead of information.
    int coarse_resolution = 80;
    int fine_resolution = 160;
    double white_matter_min_x = 60.0;  // halfplane white-matter region

    double d_gray = 0.03;      // mm^3/day
    double d_white = 0.3;      // mm^3/day
    double kappa_true = 0.15;  // 1/day

    std::vector<double> seed_center = {65.0, 60.0};
    double enhancing_radius_mm = 8.0;
    double non_enhancing_radius_mm = 15.0;

    double untreated_weeks = 2.0;
    double therapy_weeks = 6.0;
    double post_therapy_weeks = 4.0;
    double prediction_week = 16.0;
    double rt_dose_gy = 2.0;
    double alpha_rt = 0.025;
    double beta_rt = 0.0025;  // alpha/beta = 10 Gy
    double alpha_ct = 0.9;
    double beta_ct_rate = TherapySchedule::default_beta_ct_rate();

    Cadence cadence = Cadence::weekly;
    double noise_percent = 2.0;
    PriorPreset prior_preset = PriorPreset::upenn_table2;
    bool split_diffusion = false;
    double voxel_spacing_mm = 8.0;
    double dt_days = 1.0;
    std::uint64_t seed = 90123;

    NewtonOptions solver;
    int gevp_rank = 50;
    int gevp_oversample = 10;
    int n_pushforward = 500;
    double qoi_threshold = 0.1;
    int n_threads = 0;

    double imaging_end_day() const {
        return 7.0 * (untreated_weeks + therapy_weeks + post_therapy_weeks);
    }
    double prediction_day() const { return 7.0 * prediction_week; }
    double therapy_start_day() const { return 7.0 * untreated_weeks; }

    void validate() const;
};

// Everything the virtual-patient protocol produces: fine-mesh truth run,
// noise-polluted voxel observations at daily resolution (cadences subset these
// columns so the noise level is shared), and the withheld prediction target.
struct VirtualPatient {
    ScenarioConfig config;
    MeshPtr fine_mesh, coarse_mesh;
    std::shared_ptr<const FemCache> fine_cache, coarse_cache;
    Field truth_m_D, truth_m_kappa, u0_truth;  // on the fine mesh
    TherapySchedule schedule;
    TimeGrid imaging_grid;     // t = 0 .. imaging end
    TimeGrid prediction_grid;  // imaging end .. prediction day
    VoxelImage geometry;       // voxel grid shared by all images
    std::vector<double> daily_times;
    Matrix noisy_daily;   // voxel values, one column per day 0..imaging end
    Vector noisy_target;  // withheld prediction-day voxel values
    double noise_variance = 0.0;
    Field u0_inversion;   // noisy day-0 image on the coarse mesh
    Field u0_prediction;  // noisy final-imaging-day image on the coarse mesh
};

VirtualPatient synthesize(const ScenarioConfig& config);

// Column subset of the daily observations at the cadence interval.
ObservationSet observations_for_cadence(const VirtualPatient& patient, Cadence cadence);

InverseProblem make_inverse_problem(const VirtualPatient& patient, Cadence cadence);

struct DistributionSummary {
    SummaryStats rel_err_tv;
    SummaryStats ccc;
    double rel_err_tv_variance = 0.0;
    double ccc_variance = 0.0;
    double ccc_median = 0.0;
};

struct CadenceOutcome {
    Cadence cadence = Cadence::daily;
    int n_observation_times = 0;
    MapResult map;
    Vector map_m_D, map_m_kappa;  // nodal fields on the coarse mesh
    Vector eigenvalues;
    PushforwardResult pf_rel_err_tv, pf_ccc;
    DistributionSummary summary;
};

struct ComparisonTests {
    std::string qoi;
    std::string cadence;
    MannWhitneyResult mann_whitney_vs_prior;
    LeveneResult levene_vs_prior;
};

struct StudyReport {
    ScenarioConfig config;
    double target_tv_reference = 0.0;
    PushforwardResult prior_rel_err_tv, prior_ccc;
    DistributionSummary prior_summary;
    std::vector<CadenceOutcome> cadences;
    std::vector<ComparisonTests> tests;
};

StudyReport run_frequency_study(const ScenarioConfig& base, const std::vector<Cadence>& cadences);

// Study report directory: config.json, per-cadence MAP fields and logs,
// eigenvalues.json, pushforward_*.csv, summary.json, stats_tests.json.
void write_study_report(const StudyReport& report, const std::string& out_dir);

nlohmann::json scenario_config_to_json(const ScenarioConfig& config);
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);

}  // namespace tuq
