#include "irisgate/stats.hpp"

#include <algorithm>
#include <cmath>

#include "irisgate/error.hpp"

namespace irisgate::stats {

double mean(std::span<const double> x) {
    if (x.empty()) throw Error(ErrorKind::Undefined, "mean of empty list");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) throw Error(ErrorKind::Undefined, "variance needs at least two values");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorKind::Undefined, "pearson: length mismatch");
    if (x.size() < 2) throw Error(ErrorKind::Undefined, "pearson: need at least two pairs");
    double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        mx += dx / n;
        my += dy / n;
        sxx += dx * (x[i] - mx);
        syy += dy * (y[i] - my);
        sxy += dx * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorKind::Undefined, "pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double quantile(std::vector<double> x, double q) {
    if (x.empty()) throw Error(ErrorKind::Undefined, "quantile of empty list");
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

BoxStats box_stats(std::vector<double> x) {
    if (x.empty()) throw Error(ErrorKind::Undefined, "box_stats of empty list");
    std::sort(x.begin(), x.end());
    BoxStats b;
    b.n = x.size();
    b.q1 = quantile(x, 0.25);
    b.median = quantile(x, 0.5);
    b.q3 = quantile(x, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
    b.whisker_low = b.q1;
    b.whisker_high = b.q3;
    for (double v : x) {
        if (v >= lo) {
            b.whisker_low = std::min(b.whisker_low, v);
            break;
        }
    }
    for (auto it = x.rbegin(); it != x.rend(); ++it) {
        if (*it <= hi) {
            b.whisker_high = std::max(b.whisker_high, *it);
            break;
        }
    }
    for (double v : x) b.outliers += (v < lo || v > hi) ? 1 : 0;
    return b;
}

}  // namespace irisgate::stats
