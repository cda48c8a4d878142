#pragma once

#include <span>
#include <vector>

namespace irisgate::stats {

double mean(std::span<const double> x);
/// Sample variance (n - 1 denominator). Requires n >= 2.
double sample_variance(std::span<const double> x);

/// Sample Pearson correlation, accumulated in one pass with Welford-style
/// co-moment updates. Throws Undefined on length mismatch, n < 2 or zero
/// variance in either input.
double pearson_r(std::span<const double> x, std::span<const double> y);

/// Linear-interpolation quantile on the inclusive range (R type 7).
double quantile(std::vector<double> x, double q);

struct BoxStats {
    std::size_t n = 0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;   // smallest value >= q1 - 1.5 IQR
    double whisker_high = 0.0;  // largest value <= q3 + 1.5 IQR
    std::size_t outliers = 0;
};

BoxStats box_stats(std::vector<double> x);

}  // namespace irisgate::stats
