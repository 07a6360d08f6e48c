#include "tumoruq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tuq {

namespace {

double log_gamma(double x) { return std::lgamma(x); }

// Lentz continued fraction for the incomplete beta function.
double betacf(double a, double b, double x) {
    const int max_iter = 300;
    const double eps = 3e-16;
    const double fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double betainc(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbeta =
        log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(lbeta);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - std::exp(log_gamma(a + b) - log_gamma(a) - log_gamma(b) + b * std::log(1.0 - x) +
                          a * std::log(x)) *
                     betacf(b, a, 1.0 - x) / b;
}

double f_distribution_sf(double w, double d1, double d2) {
    if (w <= 0.0) return 1.0;
    // P(F > w) = I_{d2/(d2 + d1 w)}(d2/2, d1/2)
    return betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * w));
}

MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty input");
    const std::size_t na = a.size(), nb = b.size(), n = na + nb;

    struct Tagged {
        double value;
        bool from_a;
    };
    std::vector<Tagged> all;
    all.reserve(n);
    for (double v : a) all.push_back({v, true});
    for (double v : b) all.push_back({v, false});
    std::sort(all.begin(), all.end(), [](const Tagged& x, const Tagged& y) { return x.value < y.value; });

    double rank_sum_a = 0.0;
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && all[j].value == all[i].value) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
        const double t = static_cast<double>(j - i);
        if (t > 1) tie_term += t * t * t - t;
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].from_a) rank_sum_a += midrank;
        }
        i = j;
    }

    MannWhitneyResult res;
    res.u = rank_sum_a - static_cast<double>(na) * (na + 1) / 2.0;

    const double mean_u = static_cast<double>(na) * nb / 2.0;
    const double nn = static_cast<double>(n);
    const double var_u = static_cast<double>(na) * nb / 12.0 *
                         ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (var_u <= 0.0) {
        res.p_two_sided = 1.0;  // all observations tied
        return res;
    }
    const double z = (std::abs(res.u - mean_u) - 0.5) / std::sqrt(var_u);
    res.p_two_sided = std::min(1.0, std::erfc(std::max(z, 0.0) / std::sqrt(2.0)));
    return res;
}

LeveneResult levene(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) {
        throw std::invalid_argument("levene: each group needs at least 2 values");
    }
    const double med_a = median(a), med_b = median(b);
    std::vector<double> za(a.size()), zb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) za[i] = std::abs(a[i] - med_a);
    for (std::size_t i = 0; i < b.size(); ++i) zb[i] = std::abs(b[i] - med_b);

    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double n = na + nb;
    double mza = 0, mzb = 0;
    for (double v : za) mza += v;
    for (double v : zb) mzb += v;
    mza /= na;
    mzb /= nb;
    const double mz = (na * mza + nb * mzb) / n;

    double between = na * (mza - mz) * (mza - mz) + nb * (mzb - mz) * (mzb - mz);
    double within = 0;
    for (double v : za) within += (v - mza) * (v - mza);
    for (double v : zb) within += (v - mzb) * (v - mzb);

    LeveneResult res;
    if (between == 0.0 && within == 0.0) {
        res.w = 0.0;
        res.p = 1.0;
        return res;
    }
    if (within == 0.0) {
        res.w = std::numeric_limits<double>::infinity();
        res.p = 0.0;
        return res;
    }
    const double k = 2.0;
    res.w = (n - k) / (k - 1.0) * between / within;
    res.p = f_distribution_sf(res.w, k - 1.0, n - k);
    return res;
}

double percentile(std::vector<double> samples, double pct) {
    if (samples.empty()) throw std::invalid_argument("percentile: empty input");
    std::sort(samples.begin(), samples.end());
    const double idx = pct / 100.0 * static_cast<double>(samples.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
    const std::size_t hi = std::min(lo + 1, samples.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return samples[lo] * (1.0 - frac) + samples[hi] * frac;
}

double median(std::vector<double> samples) { return percentile(std::move(samples), 50.0); }

double sample_variance(const std::vector<double>& samples) {
    if (samples.size() < 2) return 0.0;
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(samples.size() - 1);
}

SummaryStats summarize(const std::vector<double>& samples) {
    if (samples.empty()) throw std::invalid_argument("summarize: empty input");
    SummaryStats s;
    for (double v : samples) s.mean += v;
    s.mean /= static_cast<double>(samples.size());
    s.std_dev = std::sqrt(sample_variance(samples));
    s.ci_lower = percentile(samples, 5.0);
    s.ci_upper = percentile(samples, 95.0);
    return s;
}

}  // namespace tuq
