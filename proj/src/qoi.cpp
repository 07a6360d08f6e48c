#include "tumoruq/qoi.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "tumoruq/errors.hpp"
#include "tumoruq/threading.hpp"

namespace tuq {

double ttc(const FemCache& cache, const Field& u, double threshold) {
    validate_field(u, cache.mesh(), "ttc(u)");
    Vector masked = (u.values.array() > threshold).select(u.values, 0.0);
    return integrate(cache, masked);
}

double tv(const FemCache& cache, const Field& u, double threshold) {
    validate_field(u, cache.mesh(), "tv(u)");
    Vector indicator = (u.values.array() > threshold).cast<double>();
    return integrate(cache, indicator);
}

double ccc(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("ccc: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("ccc: need at least 2 values");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    sxx /= n;
    syy /= n;
    sxy /= n;
    const double denom = sxx + syy + (mx - my) * (mx - my);
    if (denom == 0.0) return 0.0;
    return 2.0 * sxy / denom;
}

double dice(const std::vector<bool>& mask_a, const std::vector<bool>& mask_b) {
    if (mask_a.size() != mask_b.size()) throw std::invalid_argument("dice: length mismatch");
    long a = 0, b = 0, both = 0;
    for (std::size_t i = 0; i < mask_a.size(); ++i) {
        a += mask_a[i];
        b += mask_b[i];
        both += mask_a[i] && mask_b[i];
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

Field predict(std::shared_ptr<const FemCache> cache, const Field& m_D, const Field& m_kappa,
              const Field& u0, const TimeGrid& window, const TherapySchedule& schedule) {
    if (window.n_steps == 0) return u0;
    StateTrajectory traj = solve_forward(std::move(cache), m_D, m_kappa, u0, schedule, window);
    return Field(u0.mesh, traj.final_state());
}

void QoiSpec::validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("QoiSpec: threshold must lie in (0, 1)");
    }
    if (kind == Kind::ccc || kind == Kind::dice) {
        if (points.rows() == 0 || points.rows() != reference_values.size()) {
            throw std::invalid_argument(
                "QoiSpec: ccc/dice need evaluation points matching reference values");
        }
    }
    if ((kind == Kind::rel_err_ttc || kind == Kind::rel_err_tv) && reference_scalar == 0.0) {
        throw std::invalid_argument("QoiSpec: relative errors need a nonzero reference scalar");
    }
}

double evaluate_qoi(const FemCache& cache, const QoiSpec& spec, const Field& u) {
    switch (spec.kind) {
        case QoiSpec::Kind::ttc:
            return ttc(cache, u, spec.threshold);
        case QoiSpec::Kind::tv:
            return tv(cache, u, spec.threshold);
        case QoiSpec::Kind::rel_err_ttc:
            return (ttc(cache, u, spec.threshold) - spec.reference_scalar) / spec.reference_scalar;
        case QoiSpec::Kind::rel_err_tv:
            return (tv(cache, u, spec.threshold) - spec.reference_scalar) / spec.reference_scalar;
        case QoiSpec::Kind::ccc: {
            const Vector pred = interpolate_at_points(cache, u, spec.points);
            std::vector<double> x(pred.data(), pred.data() + pred.size());
            std::vector<double> y(spec.reference_values.data(),
                                  spec.reference_values.data() + spec.reference_values.size());
            return ccc(x, y);
        }
        case QoiSpec::Kind::dice: {
            const Vector pred = interpolate_at_points(cache, u, spec.points);
            std::vector<bool> a(pred.size()), b(pred.size());
            for (long i = 0; i < pred.size(); ++i) {
                a[i] = pred[i] > spec.threshold;
                b[i] = spec.reference_values[i] > spec.threshold;
            }
            return dice(a, b);
        }
    }
    throw std::logic_error("evaluate_qoi: unknown kind");
}

std::vector<double> PushforwardResult::values() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.ok) out.push_back(s.value);
    }
    return out;
}

int PushforwardResult::n_failed() const {
    int failed = 0;
    for (const auto& s : samples) failed += !s.ok;
    return failed;
}

std::vector<PushforwardResult> pushforward_multi(const ParameterSampler& sampler,
                                                 const std::string& source,
                                                 const PredictConfig& config,
                                                 const std::vector<QoiSpec>& specs, int n_samples,
                                                 std::uint64_t base_seed, int n_threads) {
    if (n_samples < 1) throw std::invalid_argument("pushforward: n_samples must be >= 1");
    for (const auto& spec : specs) spec.validate();

    std::vector<PushforwardResult> results(specs.size());
    for (auto& r : results) {
        r.source = source;
        r.n_samples = n_samples;
        r.base_seed = base_seed;
        r.samples.resize(n_samples);
    }

    parallel_for(n_samples, n_threads, [&](long i) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        double value = 0.0;
        bool ok = true;
        std::string error;
        std::vector<double> qoi_values(specs.size(), 0.0);
        try {
            const Vector x = sampler(seed);
            Vector mD, mk;
            config.layout.to_physical(x, mD, mk);
            Field u_pred = predict(config.cache, Field(config.u0.mesh, mD),
                                   Field(config.u0.mesh, mk), config.u0, config.window,
                                   config.schedule);
            for (std::size_t q = 0; q < specs.size(); ++q) {
                qoi_values[q] = evaluate_qoi(*config.cache, specs[q], u_pred);
            }
        } catch (const std::exception& e) {
            ok = false;
            error = e.what();
        }
        for (std::size_t q = 0; q < specs.size(); ++q) {
            auto& slot = results[q].samples[i];
            slot.index = static_cast<int>(i);
            slot.seed = seed;
            slot.ok = ok;
            slot.value = ok ? qoi_values[q] : value;
            slot.error = error;
        }
    });

    const int failed = results.empty() ? 0 : results.front().n_failed();
    if (failed * 10 > n_samples) {
        throw SolverError("pushforward: " + std::to_string(failed) + " of " +
                          std::to_string(n_samples) + " samples failed");
    }
    return results;
}

PushforwardResult pushforward(const ParameterSampler& sampler, const std::string& source,
                              const PredictConfig& config, const QoiSpec& spec, int n_samples,
                              std::uint64_t base_seed, int n_threads) {
    return pushforward_multi(sampler, source, config, {spec}, n_samples, base_seed, n_threads)
        .front();
}

void write_pushforward_csv(const PushforwardResult& result, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open for writing: " + path);
    os << "sample_index,seed,qoi_value,status\n";
    char buf[256];
    for (const auto& s : result.samples) {
        std::snprintf(buf, sizeof(buf), "%d,%llu,%.17g,%s\n", s.index,
                      static_cast<unsigned long long>(s.seed), s.value, s.ok ? "ok" : "failed");
        os << buf;
    }
}

}  // namespace tuq
