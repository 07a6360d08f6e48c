#include <chrono>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tumoruq/config.hpp"
#include "tumoruq/dataio.hpp"
#include "tumoruq/errors.hpp"
#include "tumoruq/jsonio.hpp"
#include "tumoruq/laplace.hpp"
#include "tumoruq/map_solver.hpp"
#include "tumoruq/qoi.hpp"
#include "tumoruq/study.hpp"

namespace fs = std::filesystem;
using namespace tuq;

namespace {

constexpr const char* kVersion = "tumoruq 0.1.0";

struct RunContext {
    RunConfig cfg;
    fs::path config_dir;
    fs::path out_dir;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    fs::path resolve(const std::string& p) const {
        fs::path path(p);
        return path.is_absolute() ? path : config_dir / path;
    }
};

RunContext make_context(const std::string& config_path, int threads_override) {
    RunContext ctx;
    ctx.cfg = load_run_config(config_path);
    if (threads_override > 0) ctx.cfg.threads = threads_override;
    ctx.config_dir = fs::absolute(config_path).parent_path();
    ctx.out_dir = ctx.resolve(ctx.cfg.output_dir);
    fs::create_directories(ctx.out_dir);
    return ctx;
}

void write_run_record(const RunContext& ctx, const std::string& command) {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.started).count();
    nlohmann::json record = {{"command", command},
                             {"config_hash", json_content_hash(ctx.cfg.raw)},
                             {"seed", ctx.cfg.seed},
                             {"threads", ctx.cfg.threads},
                             {"version", kVersion},
                             {"wall_time_seconds", wall}};
    write_json_file(record, (ctx.out_dir / "run.json").string());
}

MeshPtr mesh_from_config(const RunContext& ctx) {
    const RunConfig& cfg = ctx.cfg;
    if (!cfg.mesh_path.empty()) return load_mesh(ctx.resolve(cfg.mesh_path).string());
    MeshPtr mesh = generate_structured(cfg.mesh_extent_mm, cfg.mesh_resolution, cfg.mesh_dim);
    if (cfg.mesh_labeler == "all-gray") {
        mesh = assign_labels(*mesh, constant_labeler(Tissue::gray));
    } else if (cfg.mesh_labeler == "all-white") {
        mesh = assign_labels(*mesh, constant_labeler(Tissue::white));
    } else if (cfg.mesh_labeler == "halfplane") {
        mesh = assign_labels(
            *mesh, halfplane_labeler(0, cfg.mesh_halfplane_min_x, Tissue::gray, Tissue::white));
    } else if (cfg.mesh_labeler == "disk") {
        if (cfg.mesh_disk_center.size() != static_cast<std::size_t>(cfg.mesh_dim)) {
            throw FormatError("mesh.disk_center must have 'dim' entries");
        }
        Eigen::VectorXd center(cfg.mesh_dim);
        for (int a = 0; a < cfg.mesh_dim; ++a) center[a] = cfg.mesh_disk_center[a];
        mesh = assign_labels(*mesh,
                             disk_labeler(center, cfg.mesh_disk_radius, Tissue::white, Tissue::gray));
    }
    return mesh;
}

std::shared_ptr<BlockPrior> prior_from_config(const RunConfig& cfg,
                                              std::shared_ptr<const FemCache> cache) {
    if (cfg.prior_preset) {
        return make_preset_prior(cache, *cfg.prior_preset, cfg.split_diffusion);
    }
    const std::size_t expected = cfg.split_diffusion ? 3 : 2;
    if (cfg.prior_blocks.size() != expected) {
        throw FormatError("prior.blocks needs " + std::to_string(expected) +
                          " entries for this layout");
    }
    auto prior = std::make_shared<BlockPrior>();
    auto mesh = cache->mesh_ptr();
    for (const auto& b : cfg.prior_blocks) {
        prior->add_block(b.name, std::make_shared<const GrfPrior>(cache, Field(mesh, b.mean),
                                                                  b.variance, b.rho_mm,
                                                                  b.robin_coeff));
    }
    return prior;
}

TherapySchedule therapy_from_config(const RunContext& ctx) {
    TherapySchedule schedule = ctx.cfg.therapy;
    if (!ctx.cfg.schedule_csv.empty()) {
        load_schedule_csv(ctx.resolve(ctx.cfg.schedule_csv).string(), schedule);
    }
    schedule.validate();
    return schedule;
}

struct ProblemBundle {
    MeshPtr mesh;
    std::shared_ptr<const FemCache> cache;
    std::shared_ptr<BlockPrior> prior;
    InverseProblem problem;
};

ProblemBundle problem_from_config(const RunContext& ctx) {
    const RunConfig& cfg = ctx.cfg;
    if (cfg.manifest_path.empty()) throw FormatError("observations.manifest is required");
    if (cfg.u0_image_path.empty()) throw FormatError("observations.u0_image is required");

    ProblemBundle bundle;
    bundle.mesh = mesh_from_config(ctx);
    bundle.cache = std::make_shared<FemCache>(bundle.mesh);
    bundle.prior = prior_from_config(cfg, bundle.cache);

    const fs::path manifest_path = ctx.resolve(cfg.manifest_path);
    const ObservationManifest manifest = load_manifest(manifest_path.string());

    InverseProblem problem;
    problem.cache = bundle.cache;
    problem.grid = TimeGrid(cfg.t0, cfg.tf, cfg.dt);
    problem.schedule = therapy_from_config(ctx);
    problem.observations =
        observations_from_manifest(*bundle.cache, manifest, manifest_path.parent_path().string());
    problem.prior = bundle.prior;
    problem.layout = make_layout(*bundle.mesh, cfg.split_diffusion);
    problem.u0 =
        voxel_to_field(load_voxel_image(ctx.resolve(cfg.u0_image_path).string()), bundle.mesh, true);
    problem.finalize();
    bundle.problem = std::move(problem);
    return bundle;
}

VoxelImage image_geometry_like(const RunContext& ctx) {
    if (ctx.cfg.u0_image_path.empty()) throw FormatError("observations.u0_image is required");
    VoxelImage img = load_voxel_image(ctx.resolve(ctx.cfg.u0_image_path).string());
    return img;
}

int cmd_mesh_gen(const RunContext& ctx) {
    MeshPtr mesh = mesh_from_config(ctx);
    save_mesh(*mesh, (ctx.out_dir / "mesh.twmesh").string());
    std::printf("mesh-gen: %d vertices, %d cells -> %s\n", mesh->n_vertices(), mesh->n_cells(),
                (ctx.out_dir / "mesh.twmesh").string().c_str());
    return 0;
}

int cmd_synthesize(const RunContext& ctx) {
    if (!ctx.cfg.study) throw FormatError("synthesize requires a 'study' section");
    const ScenarioConfig& scenario = *ctx.cfg.study;
    VirtualPatient vp = synthesize(scenario);

    save_mesh(*vp.fine_mesh, (ctx.out_dir / "fine.twmesh").string());
    save_mesh(*vp.coarse_mesh, (ctx.out_dir / "coarse.twmesh").string());

    const std::vector<double> times =
        cadence_times(scenario.cadence, 0.0, scenario.imaging_end_day());
    ObservationManifest manifest;
    manifest.noise_variance = vp.noise_variance;
    char name[64];
    for (std::size_t i = 0; i < times.size(); ++i) {
        const long day = std::llround(times[i]);
        VoxelImage img = vp.geometry;
        for (long v = 0; v < img.size(); ++v) img.data[v] = vp.noisy_daily(v, day);
        std::snprintf(name, sizeof(name), "obs_%03ld.twimg", day);
        save_voxel_image(img, (ctx.out_dir / name).string());
        manifest.observations.push_back({times[i], name});
    }
    save_manifest(manifest, (ctx.out_dir / "manifest.json").string());

    VoxelImage u0_img = vp.geometry;
    for (long v = 0; v < u0_img.size(); ++v) u0_img.data[v] = vp.noisy_daily(v, 0);
    save_voxel_image(u0_img, (ctx.out_dir / "u0.twimg").string());

    VoxelImage target = vp.geometry;
    for (long v = 0; v < target.size(); ++v) target.data[v] = vp.noisy_target[v];
    save_voxel_image(target, (ctx.out_dir / "prediction_target.twimg").string());

    save_voxel_image(field_to_voxel(*vp.fine_cache, vp.truth_m_D, vp.geometry),
                     (ctx.out_dir / "truth_mD.twimg").string());
    save_voxel_image(field_to_voxel(*vp.fine_cache, vp.truth_m_kappa, vp.geometry),
                     (ctx.out_dir / "truth_mkappa.twimg").string());
    save_schedule_csv(vp.schedule, (ctx.out_dir / "schedule.csv").string());

    std::printf("synthesize: %zu observations, noise variance %.6g -> %s\n", times.size(),
                vp.noise_variance, ctx.out_dir.string().c_str());
    return 0;
}

int cmd_calibrate(const RunContext& ctx) {
    ProblemBundle bundle = problem_from_config(ctx);
    const Vector m0 = bundle.prior->mean();
    MapResult result = compute_map(bundle.problem, m0, ctx.cfg.solver);

    save_vector(result.m_map, (ctx.out_dir / "map.twvec").string());
    write_iteration_log_csv(result, (ctx.out_dir / "map_log.csv").string());

    Vector mD, mk;
    bundle.problem.layout.to_physical(result.m_map, mD, mk);
    const VoxelImage geometry = image_geometry_like(ctx);
    save_voxel_image(field_to_voxel(*bundle.cache, Field(bundle.mesh, mD), geometry),
                     (ctx.out_dir / "map_mD.twimg").string());
    save_voxel_image(field_to_voxel(*bundle.cache, Field(bundle.mesh, mk), geometry),
                     (ctx.out_dir / "map_mkappa.twimg").string());

    nlohmann::json summary = {{"converged", result.converged},
                              {"reason", result.reason},
                              {"newton_iterations", result.newton_iterations},
                              {"total_cg_iterations", result.total_cg_iterations},
                              {"final_gradnorm", result.final_gradnorm}};
    write_json_file(summary, (ctx.out_dir / "map_summary.json").string());
    std::printf("calibrate: %s after %d Newton iterations (|g| = %.3e)\n",
                result.converged ? "converged" : "not converged", result.newton_iterations,
                result.final_gradnorm);
    return 0;
}

int cmd_laplace(const RunContext& ctx) {
    ProblemBundle bundle = problem_from_config(ctx);
    if (ctx.cfg.map_vector_path.empty()) throw FormatError("laplace.map_vector is required");
    const Vector m_map = load_vector(ctx.resolve(ctx.cfg.map_vector_path).string());
    if (m_map.size() != bundle.problem.param_dim()) {
        throw FormatError("laplace.map_vector size does not match the problem");
    }

    LinearizedState state(bundle.problem, m_map);
    LinearOperator hessian = [&state](const Vector& v) {
        return state.hessian_action(v, HessianMode::gauss_newton);
    };
    const int k = std::min(ctx.cfg.laplace_rank, bundle.problem.param_dim());
    LowRankPosterior posterior = make_laplace_posterior(
        m_map, bundle.prior, hessian, k, ctx.cfg.laplace_oversample, mix_seed(ctx.cfg.seed, 77));

    save_posterior(posterior, (ctx.out_dir / "posterior.twpost").string());
    const nlohmann::json eigs = std::vector<double>(
        posterior.eigenvalues.data(), posterior.eigenvalues.data() + posterior.eigenvalues.size());
    write_json_file(eigs, (ctx.out_dir / "eigenvalues.json").string());
    std::printf("laplace: rank %d, leading eigenvalue %.6g\n", posterior.rank(),
                posterior.rank() > 0 ? posterior.eigenvalues[0] : 0.0);
    return 0;
}

int cmd_predict(const RunContext& ctx) {
    const RunConfig& cfg = ctx.cfg;
    MeshPtr mesh = mesh_from_config(ctx);
    auto cache = std::make_shared<FemCache>(mesh);
    auto prior = prior_from_config(cfg, cache);
    const ParameterLayout layout = make_layout(*mesh, cfg.split_diffusion);

    Vector x;
    if (!cfg.map_vector_path.empty()) {
        x = load_vector(ctx.resolve(cfg.map_vector_path).string());
        if (x.size() != layout.dim()) throw FormatError("map_vector size mismatch");
    } else {
        x = prior->mean();
    }
    Vector mD, mk;
    layout.to_physical(x, mD, mk);

    const VoxelImage u0_img = load_voxel_image(ctx.resolve(cfg.u0_image_path).string());
    Field u0 = voxel_to_field(u0_img, mesh, true);
    const TimeGrid window(cfg.prediction_t0, cfg.prediction_tf, cfg.dt);
    Field u_pred = predict(cache, Field(mesh, mD), Field(mesh, mk), u0, window,
                           therapy_from_config(ctx));

    save_voxel_image(field_to_voxel(*cache, u_pred, u0_img),
                     (ctx.out_dir / "prediction.twimg").string());
    nlohmann::json qois = {{"ttc", ttc(*cache, u_pred, cfg.qoi_threshold)},
                           {"tv", tv(*cache, u_pred, cfg.qoi_threshold)},
                           {"threshold", cfg.qoi_threshold},
                           {"t_pred", cfg.prediction_tf}};
    write_json_file(qois, (ctx.out_dir / "prediction_qois.json").string());
    std::printf("predict: t = %.6g, ttc = %.6g, tv = %.6g\n", cfg.prediction_tf,
                qois["ttc"].get<double>(), qois["tv"].get<double>());
    return 0;
}

int cmd_qoi(const RunContext& ctx) {
    const RunConfig& cfg = ctx.cfg;
    MeshPtr mesh = mesh_from_config(ctx);
    auto cache = std::make_shared<FemCache>(mesh);
    auto prior = prior_from_config(cfg, cache);
    const ParameterLayout layout = make_layout(*mesh, cfg.split_diffusion);

    QoiSpec spec;
    spec.threshold = cfg.qoi_threshold;
    if (cfg.qoi_kind == "ttc") spec.kind = QoiSpec::Kind::ttc;
    else if (cfg.qoi_kind == "tv") spec.kind = QoiSpec::Kind::tv;
    else if (cfg.qoi_kind == "ccc") spec.kind = QoiSpec::Kind::ccc;
    else if (cfg.qoi_kind == "dice") spec.kind = QoiSpec::Kind::dice;
    else if (cfg.qoi_kind == "rel_err_ttc") spec.kind = QoiSpec::Kind::rel_err_ttc;
    else spec.kind = QoiSpec::Kind::rel_err_tv;
    spec.reference_scalar = cfg.qoi_reference_scalar;
    if (!cfg.qoi_reference_image.empty()) {
        const VoxelImage ref = load_voxel_image(ctx.resolve(cfg.qoi_reference_image).string());
        const std::vector<long> inside = voxel_centers_inside(*cache, ref);
        spec.points.resize(static_cast<long>(inside.size()), mesh->dim);
        spec.reference_values.resize(static_cast<long>(inside.size()));
        for (std::size_t i = 0; i < inside.size(); ++i) {
            spec.points.row(static_cast<long>(i)) = ref.center(inside[i]).transpose();
            spec.reference_values[static_cast<long>(i)] = ref.data[inside[i]];
        }
        if (spec.kind == QoiSpec::Kind::rel_err_ttc || spec.kind == QoiSpec::Kind::rel_err_tv) {
            double ref_value = 0.0;
            for (long idx : inside) {
                if (spec.kind == QoiSpec::Kind::rel_err_tv) {
                    ref_value += ref.data[idx] > spec.threshold ? ref.voxel_volume() : 0.0;
                } else {
                    ref_value += ref.data[idx] > spec.threshold ? ref.data[idx] * ref.voxel_volume()
                                                                : 0.0;
                }
            }
            spec.reference_scalar = ref_value;
        }
    }

    PredictConfig predict_config;
    predict_config.cache = cache;
    predict_config.layout = layout;
    predict_config.u0 =
        voxel_to_field(load_voxel_image(ctx.resolve(cfg.u0_image_path).string()), mesh, true);
    predict_config.window = TimeGrid(cfg.prediction_t0, cfg.prediction_tf, cfg.dt);
    predict_config.schedule = therapy_from_config(ctx);

    ParameterSampler sampler;
    LowRankPosterior posterior;
    if (cfg.qoi_source == "posterior") {
        if (cfg.posterior_path.empty()) throw FormatError("qoi.posterior is required");
        posterior = load_posterior(ctx.resolve(cfg.posterior_path).string(), prior);
        sampler = [&posterior](std::uint64_t seed) { return posterior.sample(seed); };
    } else {
        sampler = [&prior](std::uint64_t seed) { return prior->sample(seed); };
    }

    PushforwardResult result = pushforward(sampler, cfg.qoi_source, predict_config, spec,
                                           cfg.qoi_n_samples, cfg.seed, cfg.threads);
    write_pushforward_csv(result,
                          (ctx.out_dir / ("pushforward_" + cfg.qoi_kind + ".csv")).string());
    const SummaryStats stats = summarize(result.values());
    nlohmann::json summary = {{"qoi", cfg.qoi_kind},
                              {"source", cfg.qoi_source},
                              {"n_samples", cfg.qoi_n_samples},
                              {"n_failed", result.n_failed()},
                              {"mean", stats.mean},
                              {"std", stats.std_dev},
                              {"ci90", {stats.ci_lower, stats.ci_upper}}};
    write_json_file(summary, (ctx.out_dir / "summary.json").string());
    std::printf("qoi: %s %s mean %.6g std %.6g ci90 [%.6g, %.6g]\n", cfg.qoi_source.c_str(),
                cfg.qoi_kind.c_str(), stats.mean, stats.std_dev, stats.ci_lower, stats.ci_upper);
    return 0;
}

int cmd_study(const RunContext& ctx) {
    if (!ctx.cfg.study) throw FormatError("study requires a 'study' section");
    ScenarioConfig scenario = *ctx.cfg.study;
    if (ctx.cfg.threads > 0) scenario.n_threads = ctx.cfg.threads;
    StudyReport report = run_frequency_study(scenario, ctx.cfg.study_cadences);
    write_study_report(report, ctx.out_dir.string());
    std::printf("study: %zu cadences -> %s\n", report.cadences.size(),
                ctx.out_dir.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian calibration and probabilistic forecasting for "
                 "reaction-diffusion tumor-growth models"};
    app.require_subcommand(1);

    std::string config_path;
    int threads = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "JSON run configuration")->required();
        cmd->add_option("--threads", threads, "worker thread count (default: logical cores)");
    };

    CLI::App* validate = app.add_subcommand("validate-config", "Schema-check a configuration");
    CLI::App* mesh_gen = app.add_subcommand("mesh-gen", "Generate a structured labeled mesh");
    CLI::App* synthesize_cmd =
        app.add_subcommand("synthesize", "Synthesize virtual-patient observations");
    CLI::App* calibrate = app.add_subcommand("calibrate", "Compute the MAP estimate");
    CLI::App* laplace_cmd =
        app.add_subcommand("laplace", "Low-rank posterior at a MAP point");
    CLI::App* predict_cmd = app.add_subcommand("predict", "Forward prediction from a parameter");
    CLI::App* qoi_cmd = app.add_subcommand("qoi", "Monte Carlo pushforward of a QoI");
    CLI::App* study_cmd = app.add_subcommand("study", "Imaging-frequency comparison study");
    for (CLI::App* cmd :
         {validate, mesh_gen, synthesize_cmd, calibrate, laplace_cmd, predict_cmd, qoi_cmd,
          study_cmd}) {
        add_common(cmd);
    }

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "validate-config") {
            load_run_config(config_path);
            std::printf("config OK: %s\n", config_path.c_str());
            return 0;
        }
        RunContext ctx = make_context(config_path, threads);
        int rc = 1;
        if (command == "mesh-gen") rc = cmd_mesh_gen(ctx);
        else if (command == "synthesize") rc = cmd_synthesize(ctx);
        else if (command == "calibrate") rc = cmd_calibrate(ctx);
        else if (command == "laplace") rc = cmd_laplace(ctx);
        else if (command == "predict") rc = cmd_predict(ctx);
        else if (command == "qoi") rc = cmd_qoi(ctx);
        else if (command == "study") rc = cmd_study(ctx);
        if (rc == 0) write_run_record(ctx, command);
        return rc;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
