#pragma once

#include <string>
#include <vector>

#include "tumoruq/inverse.hpp"

namespace tuq {

struct NewtonOptions {
    int max_newton = 50;
    double grad_rtol = 1e-6;
    double grad_atol = 1e-9;
    int max_cg = 200;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    int max_backtracks = 20;
    // Gauss-Newton Hessian for the first iterations, full Hessian afterwards.
    int gn_iterations = 5;
    bool verbose = false;

    void validate() const;
};

struct IterationRecord {
    int iter = 0;
    double cost = 0.0;
    double misfit = 0.0;
    double reg = 0.0;
    double gradnorm = 0.0;  // in the prior-covariance inner product
    int cg_iters = 0;
    double step_length = 0.0;
};

struct MapResult {
    Vector m_map;
    double final_gradnorm = 0.0;
    int newton_iterations = 0;
    int total_cg_iterations = 0;
    bool converged = false;
    std::string reason;
    std::vector<IterationRecord> history;
};

// Inexact Newton-CG on the negative log-posterior: CG preconditioned by the
// prior covariance, Eisenstat-Walker forcing eta_k = min(0.5, sqrt(|g_k|/|g_0|)),
// Steihaug termination on negative curvature, Armijo backtracking.
// Gradient norms are measured in the prior-covariance inner product
// sqrt(<g, Gamma_pr g>), which keeps the test discretization-consistent.
MapResult compute_map(const InverseProblem& problem, const Vector& m0,
                      const NewtonOptions& opts = {});

// CSV columns: iter, cost, misfit, reg, gradnorm, cg_iters, step_length.
void write_iteration_log_csv(const MapResult& result, const std::string& path);

}  // namespace tuq
