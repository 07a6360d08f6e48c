#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tumoruq/dataio.hpp"
#include "tumoruq/errors.hpp"
#include "tumoruq/inverse.hpp"
#include "tumoruq/laplace.hpp"
#include "tumoruq/map_solver.hpp"
#include "tumoruq/qoi.hpp"
#include "tumoruq/stats.hpp"
#include "tumoruq/study.hpp"

namespace py = pybind11;
using namespace tuq;

namespace {

Field make_field(MeshPtr mesh, const Vector& values) { return Field(std::move(mesh), values); }

}  // namespace

PYBIND11_MODULE(_tumoruq, m) {
    m.doc() = "Bayesian calibration and probabilistic forecasting for reaction-diffusion "
              "tumor-growth models";

    py::register_exception<FormatError>(m, "FormatError");
    py::register_exception<SolverError>(m, "SolverError");
    py::register_exception<OutOfDomainError>(m, "OutOfDomainError");

    py::enum_<Tissue>(m, "Tissue")
        .value("none", Tissue::none)
        .value("gray", Tissue::gray)
        .value("white", Tissue::white);

    py::class_<Mesh, MeshPtr>(m, "Mesh")
        .def_property_readonly("dim", [](const Mesh& mesh) { return mesh.dim; })
        .def_property_readonly("vertices", [](const Mesh& mesh) { return mesh.vertices; })
        .def_property_readonly("cells", [](const Mesh& mesh) { return mesh.cells; })
        .def_property_readonly("tissue_labels",
                               [](const Mesh& mesh) {
                                   std::vector<int> out;
                                   out.reserve(mesh.tissue_labels.size());
                                   for (auto t : mesh.tissue_labels)
                                       out.push_back(static_cast<int>(t));
                                   return out;
                               })
        .def_property_readonly("n_vertices", &Mesh::n_vertices)
        .def_property_readonly("n_cells", &Mesh::n_cells)
        .def_property_readonly("n_boundary_facets",
                               [](const Mesh& mesh) { return mesh.boundary_facets.size(); });

    m.def("generate_structured", &generate_structured, py::arg("extent_mm"), py::arg("resolution"),
          py::arg("dim"));
    m.def("assign_halfplane_labels",
          [](MeshPtr mesh, int axis, double threshold) {
              return assign_labels(*mesh,
                                   halfplane_labeler(axis, threshold, Tissue::gray, Tissue::white));
          },
          py::arg("mesh"), py::arg("axis"), py::arg("threshold"));
    m.def("assign_labels",
          [](MeshPtr mesh, const std::function<int(Vector)>& labeler) {
              return assign_labels(*mesh, [&labeler](const Vector& x) {
                  return static_cast<Tissue>(labeler(x));
              });
          },
          py::arg("mesh"), py::arg("labeler"));
    m.def("save_mesh", &save_mesh);
    m.def("load_mesh", &load_mesh);

    py::class_<Field>(m, "Field")
        .def(py::init(&make_field), py::arg("mesh"), py::arg("values"))
        .def_property_readonly("values", [](const Field& f) { return f.values; })
        .def_property_readonly("mesh", [](const Field& f) { return f.mesh; });

    py::class_<FemCache, std::shared_ptr<FemCache>>(m, "FemCache")
        .def(py::init<MeshPtr>())
        .def_property_readonly("total_volume", &FemCache::total_volume);
    m.def("integrate",
          [](std::shared_ptr<FemCache> cache, const Vector& v) { return integrate(*cache, v); });
    m.def("interpolate_at_points",
          [](std::shared_ptr<FemCache> cache, const Field& f, const Matrix& pts) {
              return interpolate_at_points(*cache, f, pts);
          });

    py::class_<RtEvent>(m, "RtEvent")
        .def(py::init<double, double>(), py::arg("time_days"), py::arg("dose_gy"))
        .def_readwrite("time_days", &RtEvent::time_days)
        .def_readwrite("dose_gy", &RtEvent::dose_gy);
    py::class_<CtDose>(m, "CtDose")
        .def(py::init<double, double>(), py::arg("time_days"), py::arg("dose"))
        .def_readwrite("time_days", &CtDose::time_days)
        .def_readwrite("dose", &CtDose::dose);
    py::class_<TherapySchedule>(m, "TherapySchedule")
        .def(py::init<>())
        .def_readwrite("rt_events", &TherapySchedule::rt_events)
        .def_readwrite("ct_doses", &TherapySchedule::ct_doses)
        .def_readwrite("alpha_rt", &TherapySchedule::alpha_rt)
        .def_readwrite("beta_rt", &TherapySchedule::beta_rt)
        .def_readwrite("alpha_ct", &TherapySchedule::alpha_ct)
        .def_readwrite("beta_ct_rate", &TherapySchedule::beta_ct_rate)
        .def_readwrite("rt_gamma", &TherapySchedule::rt_gamma);
    m.def("rt_surviving_fraction", &rt_surviving_fraction);
    m.def("chemo_rate", &chemo_rate);

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<double, double, double>(), py::arg("t0"), py::arg("tf"),
             py::arg("dt") = 1.0)
        .def_readonly("t0", &TimeGrid::t0)
        .def_readonly("tf", &TimeGrid::tf)
        .def_readonly("dt", &TimeGrid::dt)
        .def_readonly("n_steps", &TimeGrid::n_steps);

    py::class_<StateTrajectory>(m, "StateTrajectory")
        .def("state", [](const StateTrajectory& t, int node) { return t.state(node); })
        .def("pre_rt_state",
             [](const StateTrajectory& t, int node) { return t.pre_rt_state(node); })
        .def_property_readonly("final_state",
                               [](const StateTrajectory& t) { return t.final_state(); });

    m.def("solve_forward",
          [](std::shared_ptr<FemCache> cache, const Field& mD, const Field& mk, const Field& u0,
             const TherapySchedule& schedule, const TimeGrid& grid) {
              return solve_forward(cache, mD, mk, u0, schedule, grid);
          },
          py::arg("cache"), py::arg("m_D"), py::arg("m_kappa"), py::arg("u0"),
          py::arg("schedule"), py::arg("grid"));
    m.def("observe",
          [](std::shared_ptr<FemCache> cache, const StateTrajectory& traj,
             const std::vector<double>& times, const Matrix& points) {
              return observe(*cache, traj, times, points);
          });
    m.def("add_noise", &add_noise, py::arg("clean"), py::arg("noise_percent"),
          py::arg("rng_seed"));

    py::class_<ObservationSet>(m, "ObservationSet")
        .def(py::init<>())
        .def_readwrite("times", &ObservationSet::times)
        .def_readwrite("points", &ObservationSet::points)
        .def_readwrite("data", &ObservationSet::data)
        .def_readwrite("noise_variance", &ObservationSet::noise_variance);

    py::class_<GrfPrior, std::shared_ptr<GrfPrior>>(m, "GrfPrior")
        .def(py::init([](std::shared_ptr<FemCache> cache, const Field& mean, double sigma2,
                         double rho) {
                 return std::make_shared<GrfPrior>(cache, mean, sigma2, rho);
             }),
             py::arg("cache"), py::arg("mean"), py::arg("sigma2"), py::arg("rho_mm"))
        .def_property_readonly("gamma", &GrfPrior::gamma)
        .def_property_readonly("delta", &GrfPrior::delta)
        .def("apply_R", &GrfPrior::apply_R)
        .def("solve_R", &GrfPrior::solve_R)
        .def("cost", &GrfPrior::cost)
        .def("grad", &GrfPrior::grad)
        .def("sample", &GrfPrior::sample);
    m.def("prior_hyperparameters", &prior_hyperparameters, py::arg("sigma2"), py::arg("rho_mm"));

    py::class_<BlockPrior, std::shared_ptr<BlockPrior>>(m, "BlockPrior")
        .def(py::init<>())
        .def("add_block",
             [](BlockPrior& prior, const std::string& name, std::shared_ptr<GrfPrior> block) {
                 prior.add_block(name, std::move(block));
             })
        .def_property_readonly("dim", &BlockPrior::dim)
        .def("mean", &BlockPrior::mean)
        .def("apply_R", &BlockPrior::apply_R)
        .def("solve_R", &BlockPrior::solve_R)
        .def("cost", &BlockPrior::cost)
        .def("grad", &BlockPrior::grad)
        .def("sample", &BlockPrior::sample)
        .def("sample_fluctuation", &BlockPrior::sample_fluctuation);

    py::enum_<HessianMode>(m, "HessianMode")
        .value("gauss_newton", HessianMode::gauss_newton)
        .value("full", HessianMode::full);

    py::class_<InverseProblem>(m, "InverseProblem")
        .def(py::init([](std::shared_ptr<FemCache> cache, const TimeGrid& grid,
                         const TherapySchedule& schedule, const ObservationSet& obs,
                         std::shared_ptr<BlockPrior> prior, const Field& u0,
                         bool split_diffusion) {
                 InverseProblem problem;
                 problem.cache = cache;
                 problem.grid = grid;
                 problem.schedule = schedule;
                 problem.observations = obs;
                 problem.prior = std::move(prior);
                 problem.u0 = u0;
                 problem.layout = make_layout(cache->mesh(), split_diffusion);
                 problem.finalize();
                 return problem;
             }),
             py::arg("cache"), py::arg("grid"), py::arg("schedule"), py::arg("observations"),
             py::arg("prior"), py::arg("u0"), py::arg("split_diffusion") = false)
        .def_property_readonly("param_dim", &InverseProblem::param_dim)
        .def("misfit_cost", [](const InverseProblem& p, const Vector& x) {
            return misfit_cost(p, x);
        })
        .def("misfit_gradient", [](const InverseProblem& p, const Vector& x) {
            return misfit_gradient(p, x);
        })
        .def("total_cost", &total_cost)
        .def("total_gradient", &total_gradient);

    py::class_<LinearizedState>(m, "LinearizedState")
        .def(py::init<const InverseProblem&, const Vector&>(), py::keep_alive<1, 2>())
        .def_property_readonly("misfit", &LinearizedState::misfit)
        .def_property_readonly("misfit_gradient", &LinearizedState::misfit_gradient)
        .def("hessian_action", &LinearizedState::hessian_action, py::arg("direction"),
             py::arg("mode") = HessianMode::gauss_newton);

    py::class_<NewtonOptions>(m, "NewtonOptions")
        .def(py::init<>())
        .def_readwrite("max_newton", &NewtonOptions::max_newton)
        .def_readwrite("grad_rtol", &NewtonOptions::grad_rtol)
        .def_readwrite("grad_atol", &NewtonOptions::grad_atol)
        .def_readwrite("max_cg", &NewtonOptions::max_cg)
        .def_readwrite("gn_iterations", &NewtonOptions::gn_iterations)
        .def_readwrite("verbose", &NewtonOptions::verbose);

    py::class_<MapResult>(m, "MapResult")
        .def_readonly("m_map", &MapResult::m_map)
        .def_readonly("converged", &MapResult::converged)
        .def_readonly("reason", &MapResult::reason)
        .def_readonly("newton_iterations", &MapResult::newton_iterations)
        .def_readonly("total_cg_iterations", &MapResult::total_cg_iterations)
        .def_readonly("final_gradnorm", &MapResult::final_gradnorm);
    m.def("compute_map", &compute_map, py::arg("problem"), py::arg("m0"),
          py::arg("options") = NewtonOptions{});

    py::class_<LowRankPosterior>(m, "LowRankPosterior")
        .def_readonly("m_map", &LowRankPosterior::m_map)
        .def_readonly("eigenvalues", &LowRankPosterior::eigenvalues)
        .def_readonly("eigenvectors", &LowRankPosterior::eigenvectors)
        .def("covariance_apply", &LowRankPosterior::covariance_apply)
        .def("pointwise_variance", &LowRankPosterior::pointwise_variance)
        .def("sample", &LowRankPosterior::sample);
    m.def("randomized_gevp",
          [](const LinearizedState& state, std::shared_ptr<BlockPrior> prior, int k,
             int oversample, std::uint64_t seed) {
              LinearOperator op = [&state](const Vector& v) {
                  return state.hessian_action(v, HessianMode::gauss_newton);
              };
              return randomized_gevp(op, *prior, k, oversample, seed);
          },
          py::arg("state"), py::arg("prior"), py::arg("k"), py::arg("oversample") = 10,
          py::arg("seed") = 0);
    m.def("make_laplace_posterior",
          [](const LinearizedState& state, const Vector& m_map, std::shared_ptr<BlockPrior> prior,
             int k, int oversample, std::uint64_t seed) {
              LinearOperator op = [&state](const Vector& v) {
                  return state.hessian_action(v, HessianMode::gauss_newton);
              };
              return make_laplace_posterior(m_map, std::move(prior), op, k, oversample, seed);
          },
          py::arg("state"), py::arg("m_map"), py::arg("prior"), py::arg("k"),
          py::arg("oversample") = 10, py::arg("seed") = 0);

    m.def("ttc", [](std::shared_ptr<FemCache> cache, const Field& u, double threshold) {
        return ttc(*cache, u, threshold);
    }, py::arg("cache"), py::arg("u"), py::arg("threshold") = 0.1);
    m.def("tv", [](std::shared_ptr<FemCache> cache, const Field& u, double threshold) {
        return tv(*cache, u, threshold);
    }, py::arg("cache"), py::arg("u"), py::arg("threshold") = 0.1);
    m.def("ccc", &ccc);
    m.def("dice", &dice);
    m.def("predict",
          [](std::shared_ptr<FemCache> cache, const Field& mD, const Field& mk, const Field& u0,
             const TimeGrid& window, const TherapySchedule& schedule) {
              return predict(cache, mD, mk, u0, window, schedule);
          });

    py::class_<MannWhitneyResult>(m, "MannWhitneyResult")
        .def_readonly("u", &MannWhitneyResult::u)
        .def_readonly("p_two_sided", &MannWhitneyResult::p_two_sided);
    py::class_<LeveneResult>(m, "LeveneResult")
        .def_readonly("w", &LeveneResult::w)
        .def_readonly("p", &LeveneResult::p);
    py::class_<SummaryStats>(m, "SummaryStats")
        .def_readonly("mean", &SummaryStats::mean)
        .def_readonly("std_dev", &SummaryStats::std_dev)
        .def_readonly("ci_lower", &SummaryStats::ci_lower)
        .def_readonly("ci_upper", &SummaryStats::ci_upper);
    m.def("mann_whitney_u", &mann_whitney_u);
    m.def("levene", &levene);
    m.def("summarize", &summarize);

    py::class_<VoxelImage>(m, "VoxelImage")
        .def(py::init(&make_voxel_image), py::arg("dims"), py::arg("spacing"), py::arg("origin"),
             py::arg("fill") = 0.0)
        .def_readwrite("dims", &VoxelImage::dims)
        .def_readwrite("spacing", &VoxelImage::spacing)
        .def_readwrite("origin", &VoxelImage::origin)
        .def_readwrite("data", &VoxelImage::data);
    m.def("adc_to_cellularity", [](const VoxelImage& adc, double adc_w, const VoxelImage& mask) {
        auto result = adc_to_cellularity(adc, adc_w, mask);
        return py::make_tuple(result.image, result.clamped_negative);
    });
    m.def("seed_from_segmentation", &seed_from_segmentation);
    m.def("voxel_to_field", &voxel_to_field, py::arg("image"), py::arg("mesh"),
          py::arg("clamp01") = false);
    m.def("field_to_voxel", [](std::shared_ptr<FemCache> cache, const Field& field,
                               const VoxelImage& geometry) {
        return field_to_voxel(*cache, field, geometry);
    });
    m.def("save_voxel_image", &save_voxel_image);
    m.def("load_voxel_image", &load_voxel_image);
}
