#include "tumoruq/map_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "tumoruq/errors.hpp"

namespace tuq {

void NewtonOptions::validate() const {
    if (max_newton <= 0 || max_cg <= 0 || max_backtracks <= 0 || gn_iterations < 0) {
        throw std::invalid_argument("NewtonOptions: iteration limits must be positive");
    }
    if (!(grad_rtol > 0) || !(grad_atol > 0) || !(armijo_c > 0 && armijo_c < 1) ||
        !(backtrack_factor > 0 && backtrack_factor < 1)) {
        throw std::invalid_argument("NewtonOptions: tolerances/factors out of range");
    }
}

namespace {

struct CgOutcome {
    Vector direction;
    int iterations = 0;
};

// Preconditioned CG on H d = -g with P^{-1} = Gamma_pr action. Terminates on
// the Eisenstat-Walker forcing or on negative curvature (Steihaug): the
// current iterate is returned, or the preconditioned steepest-descent
// direction when curvature is negative at the first iteration.
CgOutcome steihaug_pcg(const LinearizedState& state, const BlockPrior& prior, HessianMode mode,
                       const Vector& g, double forcing, int max_cg) {
    CgOutcome out;
    out.direction = Vector::Zero(g.size());
    Vector r = -g;
    Vector z = prior.solve_R(r);
    Vector d = z;
    double rz = r.dot(z);
    const double tol = forcing * std::sqrt(std::max(rz, 0.0));
    if (!(rz > 0)) return out;
    for (int it = 0; it < max_cg; ++it) {
        const Vector Hd = state.hessian_action(d, mode) + prior.apply_R(d);
        const double curvature = d.dot(Hd);
        out.iterations = it + 1;
        if (curvature <= 0) {
            if (it == 0) out.direction = z;
            return out;
        }
        const double alpha = rz / curvature;
        out.direction += alpha * d;
        r -= alpha * Hd;
        z = prior.solve_R(r);
        const double rz_new = r.dot(z);
        if (std::sqrt(std::max(rz_new, 0.0)) <= tol) return out;
        d = z + (rz_new / rz) * d;
        rz = rz_new;
    }
    return out;
}

}  // namespace

MapResult compute_map(const InverseProblem& problem, const Vector& m0, const NewtonOptions& opts) {
    opts.validate();
    if (!problem.prior) throw std::invalid_argument("compute_map: problem has no prior");
    const BlockPrior& prior = *problem.prior;

    MapResult result;
    Vector x = m0;
    auto state = std::make_unique<LinearizedState>(problem, x);
    double misfit = state->misfit();
    double reg = prior.cost(x);
    double cost = misfit + reg;
    Vector g = state->misfit_gradient() + prior.grad(x);
    double gradnorm = std::sqrt(std::max(g.dot(prior.solve_R(g)), 0.0));
    const double g0norm = gradnorm;

    double best_cost = cost;
    Vector best_x = x;

    for (int k = 0; k < opts.max_newton; ++k) {
        if (gradnorm <= std::max(opts.grad_rtol * g0norm, opts.grad_atol)) {
            result.converged = true;
            result.reason = "gradient tolerance reached";
            break;
        }
        const double forcing =
            std::min(0.5, std::sqrt(gradnorm / std::max(g0norm, 1e-300)));
        const HessianMode mode =
            (k < opts.gn_iterations) ? HessianMode::gauss_newton : HessianMode::full;
        CgOutcome cg = steihaug_pcg(*state, prior, mode, g, forcing, opts.max_cg);
        result.total_cg_iterations += cg.iterations;

        Vector d = cg.direction;
        double gd = g.dot(d);
        if (!(gd < 0)) {
            d = -prior.solve_R(g);
            gd = g.dot(d);
        }

        double alpha = 1.0;
        bool accepted = false;
        double trial_misfit = 0.0, trial_cost = 0.0;
        Vector xt;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            xt = x + alpha * d;
            try {
                trial_misfit = misfit_cost(problem, xt);
            } catch (const SolverError&) {
                alpha *= opts.backtrack_factor;
                continue;
            }
            trial_cost = trial_misfit + prior.cost(xt);
            if (trial_cost <= cost + opts.armijo_c * alpha * gd) {
                accepted = true;
                break;
            }
            alpha *= opts.backtrack_factor;
        }
        result.newton_iterations = k + 1;
        if (!accepted) {
            result.converged = false;
            result.reason = "line search failed after " + std::to_string(opts.max_backtracks) +
                            " backtracks";
            break;
        }

        x = xt;
        state = std::make_unique<LinearizedState>(problem, x);
        misfit = state->misfit();
        reg = prior.cost(x);
        cost = misfit + reg;
        g = state->misfit_gradient() + prior.grad(x);
        gradnorm = std::sqrt(std::max(g.dot(prior.solve_R(g)), 0.0));
        if (cost < best_cost) {
            best_cost = cost;
            best_x = x;
        }

        result.history.push_back(
            IterationRecord{k + 1, cost, misfit, reg, gradnorm, cg.iterations, alpha});
        if (opts.verbose) {
            std::printf("newton %3d cost %.8e misfit %.8e reg %.8e |g| %.3e cg %d alpha %.3f\n",
                        k + 1, cost, misfit, reg, gradnorm, cg.iterations, alpha);
        }
    }

    if (!result.converged && gradnorm <= std::max(opts.grad_rtol * g0norm, opts.grad_atol)) {
        result.converged = true;
        result.reason = "gradient tolerance reached";
    }
    if (!result.converged && result.reason.empty()) {
        result.reason = "maximum Newton iterations reached";
    }
    if (result.converged || cost <= best_cost) {
        result.m_map = x;
        result.final_gradnorm = gradnorm;
    } else {
        result.m_map = best_x;
        result.final_gradnorm = gradnorm;
    }
    return result;
}

void write_iteration_log_csv(const MapResult& result, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open for writing: " + path);
    os << "iter,cost,misfit,reg,gradnorm,cg_iters,step_length\n";
    char buf[256];
    for (const auto& rec : result.history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", rec.iter, rec.cost,
                      rec.misfit, rec.reg, rec.gradnorm, rec.cg_iters, rec.step_length);
        os << buf;
    }
}

}  // namespace tuq
