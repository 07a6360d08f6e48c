#include "tumoruq/config.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "tumoruq/errors.hpp"
#include "tumoruq/jsonio.hpp"

namespace tuq {

namespace {

void require_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                  const std::string& context) {
    if (!j.is_object()) throw FormatError("config section '" + context + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) {
            throw FormatError("unknown config key '" + context + "." + key + "'");
        }
    }
}

template <typename T>
void read_into(const nlohmann::json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.raw = j;
    require_keys(j, {"mesh", "prior", "therapy", "time", "observations", "solver", "laplace",
                     "qoi", "study", "seeds", "output_dir", "threads"},
                 "config");

    if (j.contains("mesh")) {
        const auto& m = j.at("mesh");
        require_keys(m, {"dim", "extent_mm", "resolution", "labeler", "halfplane_min_x",
                         "disk_center", "disk_radius", "path"},
                     "mesh");
        read_into(m, "dim", cfg.mesh_dim);
        read_into(m, "extent_mm", cfg.mesh_extent_mm);
        read_into(m, "resolution", cfg.mesh_resolution);
        read_into(m, "labeler", cfg.mesh_labeler);
        read_into(m, "halfplane_min_x", cfg.mesh_halfplane_min_x);
        read_into(m, "disk_center", cfg.mesh_disk_center);
        read_into(m, "disk_radius", cfg.mesh_disk_radius);
        read_into(m, "path", cfg.mesh_path);
        const std::set<std::string> labelers = {"none", "all-gray", "all-white", "halfplane",
                                                "disk"};
        if (!labelers.count(cfg.mesh_labeler)) {
            throw FormatError("mesh.labeler must be one of none|all-gray|all-white|halfplane|disk");
        }
    }

    if (j.contains("prior")) {
        const auto& p = j.at("prior");
        require_keys(p, {"preset", "split_diffusion", "blocks"}, "prior");
        if (p.contains("preset")) {
            cfg.prior_preset = prior_preset_from_name(p.at("preset").get<std::string>());
        }
        read_into(p, "split_diffusion", cfg.split_diffusion);
        if (p.contains("blocks")) {
            for (const auto& b : p.at("blocks")) {
                require_keys(b, {"name", "mean", "variance", "rho_mm", "robin_coeff"},
                             "prior.blocks[]");
                RunConfig::PriorBlockConfig block;
                read_into(b, "name", block.name);
                read_into(b, "mean", block.mean);
                read_into(b, "variance", block.variance);
                read_into(b, "rho_mm", block.rho_mm);
                if (b.contains("robin_coeff")) block.robin_coeff = b.at("robin_coeff").get<double>();
                cfg.prior_blocks.push_back(block);
            }
        }
        if (!cfg.prior_preset && cfg.prior_blocks.empty()) {
            throw FormatError("prior needs either a preset or explicit blocks");
        }
    }

    if (j.contains("therapy")) {
        const auto& t = j.at("therapy");
        require_keys(t, {"alpha_rt", "beta_rt", "alpha_ct", "beta_ct_rate", "rt_gamma",
                         "schedule_csv"},
                     "therapy");
        read_into(t, "alpha_rt", cfg.therapy.alpha_rt);
        read_into(t, "beta_rt", cfg.therapy.beta_rt);
        read_into(t, "alpha_ct", cfg.therapy.alpha_ct);
        read_into(t, "beta_ct_rate", cfg.therapy.beta_ct_rate);
        read_into(t, "rt_gamma", cfg.therapy.rt_gamma);
        read_into(t, "schedule_csv", cfg.schedule_csv);
    }

    if (j.contains("time")) {
        const auto& t = j.at("time");
        require_keys(t, {"t0", "tf", "dt", "prediction_t0", "prediction_tf"}, "time");
        read_into(t, "t0", cfg.t0);
        read_into(t, "tf", cfg.tf);
        read_into(t, "dt", cfg.dt);
        cfg.prediction_t0 = cfg.tf;
        cfg.prediction_tf = cfg.tf;
        read_into(t, "prediction_t0", cfg.prediction_t0);
        read_into(t, "prediction_tf", cfg.prediction_tf);
    }

    if (j.contains("observations")) {
        const auto& o = j.at("observations");
        require_keys(o, {"manifest", "u0_image"}, "observations");
        read_into(o, "manifest", cfg.manifest_path);
        read_into(o, "u0_image", cfg.u0_image_path);
    }

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        require_keys(s, {"max_newton", "grad_rtol", "grad_atol", "max_cg", "armijo_c",
                         "backtrack_factor", "max_backtracks", "gn_iterations", "verbose"},
                     "solver");
        read_into(s, "max_newton", cfg.solver.max_newton);
        read_into(s, "grad_rtol", cfg.solver.grad_rtol);
        read_into(s, "grad_atol", cfg.solver.grad_atol);
        read_into(s, "max_cg", cfg.solver.max_cg);
        read_into(s, "armijo_c", cfg.solver.armijo_c);
        read_into(s, "backtrack_factor", cfg.solver.backtrack_factor);
        read_into(s, "max_backtracks", cfg.solver.max_backtracks);
        read_into(s, "gn_iterations", cfg.solver.gn_iterations);
        read_into(s, "verbose", cfg.solver.verbose);
        cfg.solver.validate();
    }

    if (j.contains("laplace")) {
        const auto& l = j.at("laplace");
        require_keys(l, {"rank", "oversample", "map_vector", "posterior"}, "laplace");
        read_into(l, "rank", cfg.laplace_rank);
        read_into(l, "oversample", cfg.laplace_oversample);
        read_into(l, "map_vector", cfg.map_vector_path);
        read_into(l, "posterior", cfg.posterior_path);
    }

    if (j.contains("qoi")) {
        const auto& q = j.at("qoi");
        require_keys(q, {"kind", "threshold", "n_samples", "reference_scalar", "reference_image",
                         "source", "posterior", "map_vector"},
                     "qoi");
        read_into(q, "kind", cfg.qoi_kind);
        read_into(q, "threshold", cfg.qoi_threshold);
        read_into(q, "n_samples", cfg.qoi_n_samples);
        read_into(q, "reference_scalar", cfg.qoi_reference_scalar);
        read_into(q, "reference_image", cfg.qoi_reference_image);
        read_into(q, "source", cfg.qoi_source);
        read_into(q, "posterior", cfg.posterior_path);
        read_into(q, "map_vector", cfg.map_vector_path);
        const std::set<std::string> kinds = {"ttc", "tv", "ccc", "dice", "rel_err_ttc",
                                             "rel_err_tv"};
        if (!kinds.count(cfg.qoi_kind)) throw FormatError("qoi.kind unknown: " + cfg.qoi_kind);
        if (cfg.qoi_source != "prior" && cfg.qoi_source != "posterior") {
            throw FormatError("qoi.source must be prior|posterior");
        }
    }

    if (j.contains("study")) {
        const auto& s = j.at("study");
        nlohmann::json scenario = s;
        std::vector<std::string> cadence_names;
        if (scenario.contains("cadences")) {
            cadence_names = scenario.at("cadences").get<std::vector<std::string>>();
            scenario.erase("cadences");
        }
        cfg.study = scenario_config_from_json(scenario);
        // Round-trip through the canonical serialization rejects unknown keys.
        const nlohmann::json canonical = scenario_config_to_json(*cfg.study);
        for (const auto& [key, value] : scenario.items()) {
            if (!canonical.contains(key)) throw FormatError("unknown config key 'study." + key + "'");
        }
        if (!cadence_names.empty()) {
            cfg.study_cadences.clear();
            for (const auto& name : cadence_names) {
                cfg.study_cadences.push_back(cadence_from_name(name));
            }
        }
    }

    if (j.contains("seeds")) {
        const auto& s = j.at("seeds");
        require_keys(s, {"base"}, "seeds");
        read_into(s, "base", cfg.seed);
    }
    read_into(j, "threads", cfg.threads);
    read_into(j, "output_dir", cfg.output_dir);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_json_file(path));
}

void load_schedule_csv(const std::string& path, TherapySchedule& schedule) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open schedule: " + path);
    std::string line;
    if (!std::getline(is, line)) throw FormatError("empty schedule: " + path);
    if (line != "type,time_days,dose") {
        throw FormatError("schedule header must be 'type,time_days,dose' in " + path);
    }
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string type, time_str, dose_str;
        if (!std::getline(ss, type, ',') || !std::getline(ss, time_str, ',') ||
            !std::getline(ss, dose_str)) {
            throw FormatError("schedule line " + std::to_string(lineno) + " malformed in " + path);
        }
        double time_days, dose;
        try {
            time_days = std::stod(time_str);
            dose = std::stod(dose_str);
        } catch (const std::exception&) {
            throw FormatError("schedule line " + std::to_string(lineno) + " has bad numbers in " +
                              path);
        }
        if (type == "rt") {
            schedule.rt_events.push_back({time_days, dose});
        } else if (type == "ct") {
            schedule.ct_doses.push_back({time_days, dose});
        } else {
            throw FormatError("schedule line " + std::to_string(lineno) + " type must be rt|ct");
        }
    }
}

void save_schedule_csv(const TherapySchedule& schedule, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open for writing: " + path);
    os << "type,time_days,dose\n";
    char buf[128];
    for (const auto& e : schedule.rt_events) {
        std::snprintf(buf, sizeof(buf), "rt,%.17g,%.17g\n", e.time_days, e.dose_gy);
        os << buf;
    }
    for (const auto& d : schedule.ct_doses) {
        std::snprintf(buf, sizeof(buf), "ct,%.17g,%.17g\n", d.time_days, d.dose);
        os << buf;
    }
}

void save_vector(const Vector& v, const std::string& path) {
    nlohmann::json header = {{"size", v.size()}};
    write_json_file(header, path);
    std::ofstream bin(path + ".bin", std::ios::binary);
    if (!bin) throw FormatError("cannot open for writing: " + path + ".bin");
    bin.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Vector load_vector(const std::string& path) {
    const nlohmann::json header = read_json_file(path);
    if (!header.contains("size")) throw FormatError("vector header missing 'size' in " + path);
    const long n = header.at("size").get<long>();
    if (n < 0) throw FormatError("vector header has negative size in " + path);
    Vector v(n);
    std::ifstream bin(path + ".bin", std::ios::binary);
    if (!bin) throw FormatError("cannot open vector binary: " + path + ".bin");
    bin.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!bin) throw FormatError("vector binary truncated: " + path + ".bin");
    return v;
}

void save_posterior(const LowRankPosterior& posterior, const std::string& path) {
    nlohmann::json header = {{"dim", posterior.m_map.size()},
                             {"rank", posterior.rank()},
                             {"oversample", posterior.oversample}};
    write_json_file(header, path);
    std::ofstream bin(path + ".bin", std::ios::binary);
    if (!bin) throw FormatError("cannot open for writing: " + path + ".bin");
    auto dump = [&bin](const double* data, long count) {
        bin.write(reinterpret_cast<const char*>(data),
                  static_cast<std::streamsize>(count * sizeof(double)));
    };
    dump(posterior.m_map.data(), posterior.m_map.size());
    dump(posterior.eigenvalues.data(), posterior.eigenvalues.size());
    dump(posterior.eigenvectors.data(), posterior.eigenvectors.size());
}

LowRankPosterior load_posterior(const std::string& path,
                                std::shared_ptr<const BlockPrior> prior) {
    const nlohmann::json header = read_json_file(path);
    for (const char* key : {"dim", "rank", "oversample"}) {
        if (!header.contains(key)) {
            throw FormatError(std::string("posterior header missing '") + key + "' in " + path);
        }
    }
    const long dim = header.at("dim").get<long>();
    const long rank = header.at("rank").get<long>();
    if (prior && prior->dim() != dim) {
        throw FormatError("posterior dimension does not match the prior in " + path);
    }
    LowRankPosterior posterior;
    posterior.prior = std::move(prior);
    posterior.oversample = header.at("oversample").get<int>();
    posterior.m_map.resize(dim);
    posterior.eigenvalues.resize(rank);
    posterior.eigenvectors.resize(dim, rank);
    std::ifstream bin(path + ".bin", std::ios::binary);
    if (!bin) throw FormatError("cannot open posterior binary: " + path + ".bin");
    auto slurp = [&bin, &path](double* data, long count) {
        bin.read(reinterpret_cast<char*>(data),
                 static_cast<std::streamsize>(count * sizeof(double)));
        if (!bin) throw FormatError("posterior binary truncated: " + path + ".bin");
    };
    slurp(posterior.m_map.data(), dim);
    slurp(posterior.eigenvalues.data(), rank);
    slurp(posterior.eigenvectors.data(), dim * rank);
    return posterior;
}

}  // namespace tuq
