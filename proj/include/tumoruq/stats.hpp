#pragma once

#include <vector>

namespace tuq {

struct MannWhitneyResult {
    double u = 0.0;  // U statistic of the first sample, midrank ties
    double p_two_sided = 1.0;
};

// Normal approximation with tie correction and continuity correction.
MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

struct LeveneResult {
    double w = 0.0;
    double p = 1.0;
};

// Median-centered (Brown-Forsythe) variant with an F-distribution p-value;
// zero spread in both groups gives p = 1 by convention.
LeveneResult levene(const std::vector<double>& a, const std::vector<double>& b);

struct SummaryStats {
    double mean = 0.0;
    double std_dev = 0.0;  // n-1 normalization
    double ci_lower = 0.0;  // 5th percentile
    double ci_upper = 0.0;  // 95th percentile
};

SummaryStats summarize(const std::vector<double>& samples);

// Empirical percentile with linear interpolation at index p/100 * (n-1).
double percentile(std::vector<double> samples, double pct);

double median(std::vector<double> samples);
double sample_variance(const std::vector<double>& samples);  // n-1

// Regularized incomplete beta function I_x(a, b) (continued fraction).
double betainc(double a, double b, double x);
// Survival function of the F distribution with (d1, d2) degrees of freedom.
double f_distribution_sf(double w, double d1, double d2);

}  // namespace tuq
