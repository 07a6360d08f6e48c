#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tumoruq/forward.hpp"
#include "tumoruq/inverse.hpp"

namespace tuq {

// Total tumor cellularity: integral of u masked to the measurable region
// u > threshold (nodewise mask, P1 integration).
double ttc(const FemCache& cache, const Field& u, double threshold = 0.1);
// Tumor volume: integral of the nodewise indicator of u > threshold.
double tv(const FemCache& cache, const Field& u, double threshold = 0.1);

// Concordance correlation coefficient with population (1/n) moments; 0 when
// the denominator degenerates.
double ccc(const std::vector<double>& x, const std::vector<double>& y);

// Dice overlap 2|A^B|/(|A|+|B|); 1 when both masks are empty.
double dice(const std::vector<bool>& mask_a, const std::vector<bool>& mask_b);

// Final state of the forward solve over the prediction window; a zero-length
// window returns u0.
Field predict(std::shared_ptr<const FemCache> cache, const Field& m_D, const Field& m_kappa,
              const Field& u0, const TimeGrid& window, const TherapySchedule& schedule);

struct QoiSpec {
    enum class Kind { ttc, tv, ccc, dice, rel_err_ttc, rel_err_tv };
    Kind kind = Kind::ttc;
    double threshold = 0.1;
    // Observation-point evaluation for ccc/dice.
    Matrix points;
    Vector reference_values;
    // Reference scalar for the signed relative errors.
    double reference_scalar = 0.0;

    void validate() const;
};

double evaluate_qoi(const FemCache& cache, const QoiSpec& spec, const Field& u);

struct PushforwardSample {
    int index = 0;
    std::uint64_t seed = 0;
    double value = 0.0;
    bool ok = false;
    std::string error;
};

struct PushforwardResult {
    std::string source;  // "prior" or "posterior"
    int n_samples = 0;
    std::uint64_t base_seed = 0;
    std::vector<PushforwardSample> samples;

    std::vector<double> values() const;
    int n_failed() const;
};

using ParameterSampler = std::function<Vector(std::uint64_t seed)>;

struct PredictConfig {
    std::shared_ptr<const FemCache> cache;
    ParameterLayout layout;
    Field u0;
    TimeGrid window;
    TherapySchedule schedule;
};

// Monte Carlo pushforward: sample i uses seed base_seed + i, runs the
// prediction map, and evaluates every spec on the same predicted state.
// Per-sample failures are recorded; the batch throws only when more than 10%
// of samples fail.
std::vector<PushforwardResult> pushforward_multi(const ParameterSampler& sampler,
                                                 const std::string& source,
                                                 const PredictConfig& config,
                                                 const std::vector<QoiSpec>& specs, int n_samples,
                                                 std::uint64_t base_seed, int n_threads = 0);

PushforwardResult pushforward(const ParameterSampler& sampler, const std::string& source,
                              const PredictConfig& config, const QoiSpec& spec, int n_samples,
                              std::uint64_t base_seed, int n_threads = 0);

void write_pushforward_csv(const PushforwardResult& result, const std::string& path);

}  // namespace tuq
