#include "tumoruq/study.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tumoruq/errors.hpp"
#include "tumoruq/jsonio.hpp"

namespace tuq {

namespace fs = std::filesystem;

std::string cadence_name(Cadence c) {
    switch (c) {
        case Cadence::daily: return "daily";
        case Cadence::weekly: return "weekly";
        case Cadence::fortnightly: return "fortnightly";
    }
    return "unknown";
}

Cadence cadence_from_name(const std::string& name) {
    if (name == "daily") return Cadence::daily;
    if (name == "weekly") return Cadence::weekly;
    if (name == "fortnightly") return Cadence::fortnightly;
    throw std::invalid_argument("unknown cadence: " + name);
}

std::vector<double> cadence_times(Cadence c, double t_begin, double t_end) {
    const double step = c == Cadence::daily ? 1.0 : (c == Cadence::weekly ? 7.0 : 14.0);
    std::vector<double> times;
    for (double t = t_begin; t <= t_end + 1e-9; t += step) times.push_back(t);
    return times;
}

PriorPreset prior_preset_from_name(const std::string& name) {
    if (name == "upenn-table2") return PriorPreset::upenn_table2;
    if (name == "ivygap-table3") return PriorPreset::ivygap_table3;
    throw std::invalid_argument("unknown prior preset: " + name);
}

std::string prior_preset_name(PriorPreset preset) {
    return preset == PriorPreset::upenn_table2 ? "upenn-table2" : "ivygap-table3";
}

double preset_noise_variance(PriorPreset preset) {
    return preset == PriorPreset::ivygap_table3 ? 3.9e-3 : 0.0;
}

std::shared_ptr<BlockPrior> make_preset_prior(std::shared_ptr<const FemCache> cache,
                                              PriorPreset preset, bool split_diffusion) {
    auto mesh = cache->mesh_ptr();
    auto prior = std::make_shared<BlockPrior>();
    auto grf = [&](double mean, double var, double rho) {
        return std::make_shared<const GrfPrior>(cache, Field(mesh, mean), var, rho);
    };
    if (preset == PriorPreset::upenn_table2) {
        if (split_diffusion) {
            prior->add_block("m_D_gray", grf(-1.30, 0.05, 180.0));
            prior->add_block("m_D_white", grf(-1.30, 0.05, 180.0));
        } else {
            prior->add_block("m_D", grf(-1.30, 0.05, 180.0));
        }
        prior->add_block("m_kappa", grf(-1.00, 0.02, 180.0));
    } else {
        if (split_diffusion) {
            prior->add_block("m_D_gray", grf(-1.467, 0.115, 180.0));
            prior->add_block("m_D_white", grf(-0.991, 0.115, 360.0));
        } else {
            prior->add_block("m_D", grf(-1.167, 0.115, 180.0));
        }
        prior->add_block("m_kappa", grf(-1.230, 0.040, 180.0));
    }
    return prior;
}

TherapySchedule make_chemoradiation_schedule(double start_day, int weeks, double rt_dose_gy,
                                             double alpha_rt, double beta_rt, double alpha_ct,
                                             double beta_ct_rate) {
    TherapySchedule s;
    s.alpha_rt = alpha_rt;
    s.beta_rt = beta_rt;
    s.alpha_ct = alpha_ct;
    s.beta_ct_rate = beta_ct_rate;
    for (int w = 0; w < weeks; ++w) {
        for (int weekday = 0; weekday < 5; ++weekday) {
            s.rt_events.push_back({start_day + 7.0 * w + weekday, rt_dose_gy});
        }
    }
    for (int d = 0; d < 7 * weeks; ++d) {
        s.ct_doses.push_back({start_day + d, 1.0});
    }
    return s;
}

void ScenarioConfig::validate() const {
    if (dim != 2 && dim != 3) throw std::invalid_argument("ScenarioConfig: dim must be 2 or 3");
    if (coarse_resolution < 4 || fine_resolution < coarse_resolution) {
        throw std::invalid_argument("ScenarioConfig: resolutions must satisfy 4 <= coarse <= fine");
    }
    if (!(extent_mm > 0) || !(voxel_spacing_mm > 0) || !(dt_days > 0)) {
        throw std::invalid_argument("ScenarioConfig: extent, voxel spacing, dt must be positive");
    }
    if (!(noise_percent >= 0)) throw std::invalid_argument("ScenarioConfig: negative noise");
    if (!(qoi_threshold > 0 && qoi_threshold < 1)) {
        throw std::invalid_argument("ScenarioConfig: qoi threshold must lie in (0,1)");
    }
    if (!(prediction_week * 7.0 > imaging_end_day())) {
        throw std::invalid_argument("ScenarioConfig: prediction must follow the last observation");
    }
    const double interval = cadence == Cadence::daily ? 1.0 : (cadence == Cadence::weekly ? 7.0 : 14.0);
    if (std::abs(std::remainder(imaging_end_day(), interval)) > 1e-9) {
        throw std::invalid_argument("ScenarioConfig: cadence must divide the imaging window");
    }
    if (n_pushforward < 1 || gevp_rank < 1) {
        throw std::invalid_argument("ScenarioConfig: counts must be positive");
    }
}

namespace {

MeshPtr labeled_box(const ScenarioConfig& config, int resolution) {
    std::vector<double> extent(config.dim, config.extent_mm);
    std::vector<int> res(config.dim, resolution);
    MeshPtr mesh = generate_structured(extent, res, config.dim);
    return assign_labels(*mesh,
                         halfplane_labeler(0, config.white_matter_min_x, Tissue::gray, Tissue::white));
}

VoxelImage voxel_geometry(const ScenarioConfig& config) {
    const int n = static_cast<int>(std::floor(config.extent_mm / config.voxel_spacing_mm + 1e-9));
    std::vector<int> dims(config.dim, n);
    std::vector<double> spacing(config.dim, config.voxel_spacing_mm);
    std::vector<double> origin(config.dim, 0.0);
    return make_voxel_image(dims, spacing, origin, 0.0);
}

VoxelImage column_image(const VoxelImage& geometry, const Vector& column) {
    VoxelImage img = geometry;
    for (long i = 0; i < img.size(); ++i) img.data[i] = column[i];
    return img;
}

// Initial-condition estimate from a noisy image: sub-threshold voxels are
// zeroed, mirroring the ROI masking of the cellularity pipeline. Without it
// the clamped noise floor regrows to saturation over the prediction window.
VoxelImage masked_below(VoxelImage img, double threshold) {
    for (double& v : img.data) {
        if (v < threshold) v = 0.0;
    }
    return img;
}

}  // namespace

VirtualPatient synthesize(const ScenarioConfig& config) {
    config.validate();
    VirtualPatient vp;
    vp.config = config;
    vp.fine_mesh = labeled_box(config, config.fine_resolution);
    vp.coarse_mesh = labeled_box(config, config.coarse_resolution);
    vp.fine_cache = std::make_shared<FemCache>(vp.fine_mesh);
    vp.coarse_cache = std::make_shared<FemCache>(vp.coarse_mesh);

    // Truth fields: heterogeneous diffusivity by tissue, uniform proliferation.
    Vector mD(vp.fine_mesh->n_vertices());
    for (int v = 0; v < vp.fine_mesh->n_vertices(); ++v) {
        mD[v] = std::log(vp.fine_mesh->tissue_labels[v] == Tissue::white ? config.d_white
                                                                         : config.d_gray);
    }
    vp.truth_m_D = Field(vp.fine_mesh, std::move(mD));
    vp.truth_m_kappa = Field(vp.fine_mesh, std::log(config.kappa_true));

    // Initial cellularity from enhancing / non-enhancing disks.
    Eigen::VectorXd center(config.dim);
    for (int a = 0; a < config.dim; ++a) {
        center[a] = a < static_cast<int>(config.seed_center.size()) ? config.seed_center[a]
                                                                    : config.extent_mm / 2.0;
    }
    Vector u0(vp.fine_mesh->n_vertices());
    for (int v = 0; v < vp.fine_mesh->n_vertices(); ++v) {
        const double r = (vp.fine_mesh->vertices.row(v).transpose() - center).norm();
        u0[v] = r <= config.enhancing_radius_mm ? 0.8
                : (r <= config.non_enhancing_radius_mm ? 0.16 : 0.0);
    }
    vp.u0_truth = Field(vp.fine_mesh, std::move(u0));

    vp.schedule = make_chemoradiation_schedule(
        config.therapy_start_day(), static_cast<int>(config.therapy_weeks), config.rt_dose_gy,
        config.alpha_rt, config.beta_rt, config.alpha_ct, config.beta_ct_rate);
    vp.imaging_grid = TimeGrid(0.0, config.imaging_end_day(), config.dt_days);
    vp.prediction_grid = TimeGrid(config.imaging_end_day(), config.prediction_day(), config.dt_days);

    // Fine-mesh truth run over the full horizon.
    TimeGrid full_grid(0.0, config.prediction_day(), config.dt_days);
    StateTrajectory truth_traj =
        solve_forward(vp.fine_cache, vp.truth_m_D, vp.truth_m_kappa, vp.u0_truth, vp.schedule,
                      full_grid);

    vp.geometry = voxel_geometry(config);
    Matrix points(vp.geometry.size(), config.dim);
    for (long i = 0; i < vp.geometry.size(); ++i) {
        points.row(i) = vp.geometry.center(i).transpose();
    }
    PointInterpolator fine_interp(*vp.fine_cache, points);

    vp.daily_times = cadence_times(Cadence::daily, 0.0, config.imaging_end_day());
    std::vector<double> all_times = vp.daily_times;
    all_times.push_back(config.prediction_day());
    const Matrix clean = observe(truth_traj, all_times, fine_interp);

    // One pollution pass over the whole series, so every cadence shares the
    // noise level and realization, and the withheld target carries the same
    // noise model.
    auto [noisy, variance] = add_noise(clean, config.noise_percent, mix_seed(config.seed, 1));
    vp.noise_variance = variance;
    vp.noisy_daily = noisy.leftCols(static_cast<long>(vp.daily_times.size()));
    vp.noisy_target = noisy.col(noisy.cols() - 1);

    // Inversion inputs live on the coarse mesh.
    vp.u0_inversion = voxel_to_field(
        masked_below(column_image(vp.geometry, vp.noisy_daily.col(0)), config.qoi_threshold),
        vp.coarse_mesh, true);
    vp.u0_prediction = voxel_to_field(
        masked_below(column_image(vp.geometry, vp.noisy_daily.col(vp.noisy_daily.cols() - 1)),
                     config.qoi_threshold),
        vp.coarse_mesh, true);
    return vp;
}

ObservationSet observations_for_cadence(const VirtualPatient& patient, Cadence cadence) {
    const std::vector<double> times =
        cadence_times(cadence, 0.0, patient.config.imaging_end_day());
    ObservationSet obs;
    obs.times = times;
    obs.noise_variance = patient.noise_variance;
    Matrix points(patient.geometry.size(), patient.config.dim);
    for (long i = 0; i < patient.geometry.size(); ++i) {
        points.row(i) = patient.geometry.center(i).transpose();
    }
    obs.points = std::move(points);
    obs.data.resize(patient.noisy_daily.rows(), static_cast<long>(times.size()));
    for (std::size_t i = 0; i < times.size(); ++i) {
        const long day = std::llround(times[i]);
        obs.data.col(static_cast<long>(i)) = patient.noisy_daily.col(day);
    }
    return obs;
}

InverseProblem make_inverse_problem(const VirtualPatient& patient, Cadence cadence) {
    InverseProblem problem;
    problem.cache = patient.coarse_cache;
    problem.grid = patient.imaging_grid;
    problem.schedule = patient.schedule;
    problem.observations = observations_for_cadence(patient, cadence);
    problem.layout = make_layout(*patient.coarse_mesh, patient.config.split_diffusion);
    problem.prior = make_preset_prior(patient.coarse_cache, patient.config.prior_preset,
                                      patient.config.split_diffusion);
    problem.u0 = patient.u0_inversion;
    problem.finalize();
    return problem;
}

namespace {

DistributionSummary summarize_distribution(const PushforwardResult& rel_err_tv,
                                           const PushforwardResult& ccc_result) {
    DistributionSummary s;
    const auto tv_values = rel_err_tv.values();
    const auto ccc_values = ccc_result.values();
    s.rel_err_tv = summarize(tv_values);
    s.ccc = summarize(ccc_values);
    s.rel_err_tv_variance = sample_variance(tv_values);
    s.ccc_variance = sample_variance(ccc_values);
    s.ccc_median = median(ccc_values);
    return s;
}

}  // namespace

StudyReport run_frequency_study(const ScenarioConfig& base, const std::vector<Cadence>& cadences) {
    StudyReport report;
    report.config = base;
    VirtualPatient patient = synthesize(base);

    // Withheld-target QoI references: tumor volume of the target image by
    // voxel counting, point values for concordance.
    double tv_ref = 0.0;
    for (long i = 0; i < patient.noisy_target.size(); ++i) {
        if (patient.noisy_target[i] > base.qoi_threshold) tv_ref += patient.geometry.voxel_volume();
    }
    report.target_tv_reference = tv_ref;

    Matrix points(patient.geometry.size(), base.dim);
    for (long i = 0; i < patient.geometry.size(); ++i) {
        points.row(i) = patient.geometry.center(i).transpose();
    }

    QoiSpec rel_err_tv_spec;
    rel_err_tv_spec.kind = QoiSpec::Kind::rel_err_tv;
    rel_err_tv_spec.threshold = base.qoi_threshold;
    rel_err_tv_spec.reference_scalar = tv_ref;

    QoiSpec ccc_spec;
    ccc_spec.kind = QoiSpec::Kind::ccc;
    ccc_spec.threshold = base.qoi_threshold;
    ccc_spec.points = points;
    ccc_spec.reference_values = patient.noisy_target;

    const std::vector<QoiSpec> specs = {rel_err_tv_spec, ccc_spec};

    PredictConfig predict_config;
    predict_config.cache = patient.coarse_cache;
    predict_config.layout = make_layout(*patient.coarse_mesh, base.split_diffusion);
    predict_config.u0 = patient.u0_prediction;
    predict_config.window = patient.prediction_grid;
    predict_config.schedule = patient.schedule;

    auto prior = make_preset_prior(patient.coarse_cache, base.prior_preset, base.split_diffusion);
    {
        ParameterSampler prior_sampler = [&prior](std::uint64_t seed) {
            return prior->sample(seed);
        };
        auto results = pushforward_multi(prior_sampler, "prior", predict_config, specs,
                                         base.n_pushforward, mix_seed(base.seed, 1000),
                                         base.n_threads);
        report.prior_rel_err_tv = std::move(results[0]);
        report.prior_ccc = std::move(results[1]);
        report.prior_summary = summarize_distribution(report.prior_rel_err_tv, report.prior_ccc);
    }

    for (Cadence cadence : cadences) {
        CadenceOutcome outcome;
        outcome.cadence = cadence;
        InverseProblem problem = make_inverse_problem(patient, cadence);
        outcome.n_observation_times = static_cast<int>(problem.observations.times.size());

        outcome.map = compute_map(problem, problem.prior->mean(), base.solver);

        Vector mD, mk;
        problem.layout.to_physical(outcome.map.m_map, mD, mk);
        outcome.map_m_D = mD;
        outcome.map_m_kappa = mk;

        LinearizedState state(problem, outcome.map.m_map);
        LinearOperator hessian = [&state](const Vector& v) {
            return state.hessian_action(v, HessianMode::gauss_newton);
        };
        const int k = std::min(base.gevp_rank, problem.param_dim());
        LowRankPosterior posterior =
            make_laplace_posterior(outcome.map.m_map, problem.prior, hessian, k,
                                   base.gevp_oversample, mix_seed(base.seed, 77));
        outcome.eigenvalues = posterior.eigenvalues;

        ParameterSampler post_sampler = [&posterior](std::uint64_t seed) {
            return posterior.sample(seed);
        };
        auto results = pushforward_multi(post_sampler, "posterior", predict_config, specs,
                                         base.n_pushforward, mix_seed(base.seed, 2000),
                                         base.n_threads);
        outcome.pf_rel_err_tv = std::move(results[0]);
        outcome.pf_ccc = std::move(results[1]);
        outcome.summary = summarize_distribution(outcome.pf_rel_err_tv, outcome.pf_ccc);

        for (const char* qoi : {"rel_err_tv", "ccc"}) {
            ComparisonTests tests;
            tests.qoi = qoi;
            tests.cadence = cadence_name(cadence);
            const bool is_tv = std::string(qoi) == "rel_err_tv";
            const auto post_values = is_tv ? outcome.pf_rel_err_tv.values() : outcome.pf_ccc.values();
            const auto prior_values =
                is_tv ? report.prior_rel_err_tv.values() : report.prior_ccc.values();
            tests.mann_whitney_vs_prior = mann_whitney_u(post_values, prior_values);
            tests.levene_vs_prior = levene(post_values, prior_values);
            report.tests.push_back(std::move(tests));
        }
        report.cadences.push_back(std::move(outcome));
    }
    return report;
}

namespace {

nlohmann::json summary_json(const DistributionSummary& s) {
    return {{"rel_err_tv",
             {{"mean", s.rel_err_tv.mean},
              {"std", s.rel_err_tv.std_dev},
              {"ci90", {s.rel_err_tv.ci_lower, s.rel_err_tv.ci_upper}},
              {"variance", s.rel_err_tv_variance}}},
            {"ccc",
             {{"mean", s.ccc.mean},
              {"std", s.ccc.std_dev},
              {"ci90", {s.ccc.ci_lower, s.ccc.ci_upper}},
              {"variance", s.ccc_variance},
              {"median", s.ccc_median}}}};
}

}  // namespace

void write_study_report(const StudyReport& report, const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_json_file(scenario_config_to_json(report.config),
                    (fs::path(out_dir) / "config.json").string());

    VoxelImage geometry = voxel_geometry(report.config);

    nlohmann::json eigs;
    nlohmann::json summary;
    summary["target_tv_reference"] = report.target_tv_reference;
    summary["prior"] = summary_json(report.prior_summary);
    write_pushforward_csv(report.prior_rel_err_tv,
                          (fs::path(out_dir) / "pushforward_prior_rel_err_tv.csv").string());
    write_pushforward_csv(report.prior_ccc,
                          (fs::path(out_dir) / "pushforward_prior_ccc.csv").string());

    auto coarse_mesh = [&report]() {
        std::vector<double> extent(report.config.dim, report.config.extent_mm);
        std::vector<int> res(report.config.dim, report.config.coarse_resolution);
        MeshPtr mesh = generate_structured(extent, res, report.config.dim);
        return assign_labels(*mesh, halfplane_labeler(0, report.config.white_matter_min_x,
                                                      Tissue::gray, Tissue::white));
    }();
    FemCache coarse_cache(coarse_mesh);

    for (const auto& outcome : report.cadences) {
        const std::string name = cadence_name(outcome.cadence);
        const fs::path dir = fs::path(out_dir) / name;
        fs::create_directories(dir);
        eigs[name] = std::vector<double>(outcome.eigenvalues.data(),
                                         outcome.eigenvalues.data() + outcome.eigenvalues.size());
        summary[name] = summary_json(outcome.summary);
        summary[name]["n_observation_times"] = outcome.n_observation_times;
        summary[name]["map_converged"] = outcome.map.converged;
        summary[name]["map_newton_iterations"] = outcome.map.newton_iterations;

        write_pushforward_csv(outcome.pf_rel_err_tv, (dir / "pushforward_rel_err_tv.csv").string());
        write_pushforward_csv(outcome.pf_ccc, (dir / "pushforward_ccc.csv").string());
        write_iteration_log_csv(outcome.map, (dir / "map_log.csv").string());
        save_voxel_image(
            field_to_voxel(coarse_cache, Field(coarse_mesh, outcome.map_m_D), geometry),
            (dir / "map_fields_mD.twimg").string());
        save_voxel_image(
            field_to_voxel(coarse_cache, Field(coarse_mesh, outcome.map_m_kappa), geometry),
            (dir / "map_fields_mkappa.twimg").string());
    }
    write_json_file(eigs, (fs::path(out_dir) / "eigenvalues.json").string());
    write_json_file(summary, (fs::path(out_dir) / "summary.json").string());

    nlohmann::json tests = nlohmann::json::array();
    for (const auto& t : report.tests) {
        tests.push_back({{"qoi", t.qoi},
                         {"cadence", t.cadence},
                         {"mann_whitney_u", t.mann_whitney_vs_prior.u},
                         {"mann_whitney_p", t.mann_whitney_vs_prior.p_two_sided},
                         {"levene_w", t.levene_vs_prior.w},
                         {"levene_p", t.levene_vs_prior.p}});
    }
    write_json_file(tests, (fs::path(out_dir) / "stats_tests.json").string());
}

nlohmann::json scenario_config_to_json(const ScenarioConfig& c) {
    return {{"dim", c.dim},
            {"extent_mm", c.extent_mm},
            {"coarse_resolution", c.coarse_resolution},
            {"fine_resolution", c.fine_resolution},
            {"white_matter_min_x", c.white_matter_min_x},
            {"d_gray", c.d_gray},
            {"d_white", c.d_white},
            {"kappa_true", c.kappa_true},
            {"seed_center", c.seed_center},
            {"enhancing_radius_mm", c.enhancing_radius_mm},
            {"non_enhancing_radius_mm", c.non_enhancing_radius_mm},
            {"untreated_weeks", c.untreated_weeks},
            {"therapy_weeks", c.therapy_weeks},
            {"post_therapy_weeks", c.post_therapy_weeks},
            {"prediction_week", c.prediction_week},
            {"rt_dose_gy", c.rt_dose_gy},
            {"alpha_rt", c.alpha_rt},
            {"beta_rt", c.beta_rt},
            {"alpha_ct", c.alpha_ct},
            {"beta_ct_rate", c.beta_ct_rate},
            {"cadence", cadence_name(c.cadence)},
            {"noise_percent", c.noise_percent},
            {"prior_preset", prior_preset_name(c.prior_preset)},
            {"split_diffusion", c.split_diffusion},
            {"voxel_spacing_mm", c.voxel_spacing_mm},
            {"dt_days", c.dt_days},
            {"seed", c.seed},
            {"gevp_rank", c.gevp_rank},
            {"gevp_oversample", c.gevp_oversample},
            {"n_pushforward", c.n_pushforward},
            {"qoi_threshold", c.qoi_threshold},
            {"n_threads", c.n_threads},
            {"solver",
             {{"max_newton", c.solver.max_newton},
              {"grad_rtol", c.solver.grad_rtol},
              {"max_cg", c.solver.max_cg},
              {"gn_iterations", c.solver.gn_iterations}}}};
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
    ScenarioConfig c;
    auto get = [&j](const char* key, auto& target) {
        if (j.contains(key)) target = j.at(key).get<std::decay_t<decltype(target)>>();
    };
    get("dim", c.dim);
    get("extent_mm", c.extent_mm);
    get("coarse_resolution", c.coarse_resolution);
    get("fine_resolution", c.fine_resolution);
    get("white_matter_min_x", c.white_matter_min_x);
    get("d_gray", c.d_gray);
    get("d_white", c.d_white);
    get("kappa_true", c.kappa_true);
    get("seed_center", c.seed_center);
    get("enhancing_radius_mm", c.enhancing_radius_mm);
    get("non_enhancing_radius_mm", c.non_enhancing_radius_mm);
    get("untreated_weeks", c.untreated_weeks);
    get("therapy_weeks", c.therapy_weeks);
    get("post_therapy_weeks", c.post_therapy_weeks);
    get("prediction_week", c.prediction_week);
    get("rt_dose_gy", c.rt_dose_gy);
    get("alpha_rt", c.alpha_rt);
    get("beta_rt", c.beta_rt);
    get("alpha_ct", c.alpha_ct);
    get("beta_ct_rate", c.beta_ct_rate);
    if (j.contains("cadence")) c.cadence = cadence_from_name(j.at("cadence").get<std::string>());
    get("noise_percent", c.noise_percent);
    if (j.contains("prior_preset")) {
        c.prior_preset = prior_preset_from_name(j.at("prior_preset").get<std::string>());
    }
    get("split_diffusion", c.split_diffusion);
    get("voxel_spacing_mm", c.voxel_spacing_mm);
    get("dt_days", c.dt_days);
    get("seed", c.seed);
    get("gevp_rank", c.gevp_rank);
    get("gevp_oversample", c.gevp_oversample);
    get("n_pushforward", c.n_pushforward);
    get("qoi_threshold", c.qoi_threshold);
    get("n_threads", c.n_threads);
    if (j.contains("solver")) {
        const auto& sj = j.at("solver");
        if (sj.contains("max_newton")) c.solver.max_newton = sj.at("max_newton").get<int>();
        if (sj.contains("grad_rtol")) c.solver.grad_rtol = sj.at("grad_rtol").get<double>();
        if (sj.contains("max_cg")) c.solver.max_cg = sj.at("max_cg").get<int>();
        if (sj.contains("gn_iterations")) c.solver.gn_iterations = sj.at("gn_iterations").get<int>();
        c.solver.validate();
    }
    c.validate();
    return c;
}

}  // namespace tuq
