#include "irisgate/quality_gate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "irisgate/parallel.hpp"
#include "irisgate/rng.hpp"
#include "irisgate/stats.hpp"

namespace irisgate::gate {

namespace {

double log_sigmoid(double eta) { return eta > 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta)); }

double sigmoid(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

// Solves A x = b in place (A is n x n, row-major) with partial pivoting.
bool solve(std::vector<double> a, std::vector<double> b, std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
        if (!(std::abs(a[piv * n + c]) > 1e-300)) return false;
        if (piv != c) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
            std::swap(b[c], b[piv]);
        }
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r * n + c] / a[c * n + c];
            if (f == 0.0) continue;
            for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
            b[r] -= f * b[c];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i * n + k] * x[k];
        x[i] = s / a[i * n + i];
    }
    return true;
}

struct Standardized {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> z;  // n x d
};

Standardized standardize(const LogisticModel& m, const std::vector<std::vector<double>>& x) {
    Standardized s;
    s.n = x.size();
    s.d = m.weights.size();
    s.z.resize(s.n * s.d);
    for (std::size_t i = 0; i < s.n; ++i) {
        if (x[i].size() != s.d) throw Error(ErrorKind::InvalidInput, "logistic: feature row has wrong width");
        for (std::size_t k = 0; k < s.d; ++k) s.z[i * s.d + k] = (x[i][k] - m.mean[k]) / m.scale[k];
    }
    return s;
}

double objective(const LogisticModel& m, const Standardized& s, const std::vector<std::uint8_t>& y) {
    double ll = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) {
        double eta = m.intercept;
        for (std::size_t k = 0; k < s.d; ++k) eta += m.weights[k] * s.z[i * s.d + k];
        ll += y[i] ? log_sigmoid(eta) : log_sigmoid(-eta);
    }
    double pen = 0.0;
    for (double w : m.weights) pen += w * w;
    return ll - 0.5 * m.l2 * pen;
}

std::vector<double> gradient(const LogisticModel& m, const Standardized& s, const std::vector<std::uint8_t>& y) {
    std::vector<double> g(s.d + 1, 0.0);
    for (std::size_t i = 0; i < s.n; ++i) {
        double eta = m.intercept;
        for (std::size_t k = 0; k < s.d; ++k) eta += m.weights[k] * s.z[i * s.d + k];
        const double r = (y[i] ? 1.0 : 0.0) - sigmoid(eta);
        g[0] += r;
        for (std::size_t k = 0; k < s.d; ++k) g[k + 1] += r * s.z[i * s.d + k];
    }
    for (std::size_t k = 0; k < s.d; ++k) g[k + 1] -= m.l2 * m.weights[k];
    return g;
}

}  // namespace

double LogisticModel::linear(std::span<const double> x) const {
    if (x.size() != weights.size()) throw Error(ErrorKind::InvalidInput, "logistic: feature width mismatch");
    double eta = intercept;
    for (std::size_t k = 0; k < weights.size(); ++k) eta += weights[k] * (x[k] - mean[k]) / scale[k];
    return eta;
}

double LogisticModel::predict(std::span<const double> x) const { return sigmoid(linear(x)); }

LogisticModel fit_logistic(const std::vector<std::vector<double>>& x, const std::vector<std::uint8_t>& y,
                           const LogisticOptions& opt, std::vector<std::string> names) {
    if (x.size() != y.size()) throw Error(ErrorKind::InvalidInput, "logistic: features and labels differ in length");
    const std::size_t n = x.size();
    const std::size_t d = n ? x[0].size() : 0;
    for (const auto& row : x) {
        if (row.size() != d) throw Error(ErrorKind::InvalidInput, "logistic: ragged feature matrix");
        for (double v : row)
            if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "logistic: non-finite feature");
    }
    const auto pos = static_cast<std::size_t>(std::count_if(y.begin(), y.end(), [](auto v) { return v != 0; }));
    if (pos < 2 || n - pos < 2) throw Error(ErrorKind::Degenerate, "logistic: need two samples of each class");
    if (!(opt.l2 >= 0.0)) throw Error(ErrorKind::InvalidInput, "logistic: negative l2");

    LogisticModel m;
    m.feature_names = std::move(names);
    if (m.feature_names.size() != d) {
        m.feature_names.clear();
        for (std::size_t k = 0; k < d; ++k) m.feature_names.push_back("x" + std::to_string(k));
    }
    m.l2 = opt.l2;
    m.weights.assign(d, 0.0);
    m.mean.assign(d, 0.0);
    m.scale.assign(d, 1.0);
    if (opt.standardize) {
        for (std::size_t k = 0; k < d; ++k) {
            double s = 0.0;
            for (const auto& row : x) s += row[k];
            m.mean[k] = s / static_cast<double>(n);
            double v = 0.0;
            for (const auto& row : x) v += (row[k] - m.mean[k]) * (row[k] - m.mean[k]);
            const double sd = std::sqrt(v / static_cast<double>(n));
            m.scale[k] = sd > 0.0 ? sd : 1.0;
        }
    }
    const auto s = standardize(m, x);
    const double prevalence = static_cast<double>(pos) / static_cast<double>(n);
    m.intercept = std::log(prevalence / (1.0 - prevalence));

    const std::size_t p = d + 1;
    double obj = objective(m, s, y);
    for (int it = 0; it < opt.max_iterations; ++it) {
        m.iterations = it + 1;
        const auto g = gradient(m, s, y);
        // Negative Hessian of the penalized log-likelihood.
        std::vector<double> h(p * p, 0.0);
        for (std::size_t i = 0; i < s.n; ++i) {
            double eta = m.intercept;
            for (std::size_t k = 0; k < d; ++k) eta += m.weights[k] * s.z[i * d + k];
            const double pi = sigmoid(eta);
            const double wgt = pi * (1.0 - pi);
            if (wgt == 0.0) continue;
            for (std::size_t a = 0; a < p; ++a) {
                const double xa = a == 0 ? 1.0 : s.z[i * d + a - 1];
                for (std::size_t b = a; b < p; ++b) {
                    const double xb = b == 0 ? 1.0 : s.z[i * d + b - 1];
                    h[a * p + b] += wgt * xa * xb;
                }
            }
        }
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < a; ++b) h[a * p + b] = h[b * p + a];
        for (std::size_t k = 1; k < p; ++k) h[k * p + k] += m.l2;
        // Saturated fits can leave the intercept row singular.
        for (std::size_t k = 0; k < p; ++k) h[k * p + k] += 1e-12;

        std::vector<double> step;
        if (!solve(h, g, step)) break;

        double scale = 1.0;
        LogisticModel trial = m;
        double trial_obj = obj;
        for (int half = 0; half < 40; ++half) {
            trial.intercept = m.intercept + scale * step[0];
            for (std::size_t k = 0; k < d; ++k) trial.weights[k] = m.weights[k] + scale * step[k + 1];
            trial_obj = objective(trial, s, y);
            if (trial_obj >= obj - 1e-12 * std::abs(obj)) break;
            scale *= 0.5;
        }
        double change = std::abs(trial.intercept - m.intercept);
        for (std::size_t k = 0; k < d; ++k) change = std::max(change, std::abs(trial.weights[k] - m.weights[k]));
        m.intercept = trial.intercept;
        m.weights = trial.weights;
        obj = trial_obj;
        if (change < opt.tolerance) {
            m.converged = true;
            break;
        }
    }
    return m;
}

double penalized_log_likelihood(const LogisticModel& model, const std::vector<std::vector<double>>& x,
                                const std::vector<std::uint8_t>& y) {
    return objective(model, standardize(model, x), y);
}

std::vector<double> penalized_gradient(const LogisticModel& model, const std::vector<std::vector<double>>& x,
                                       const std::vector<std::uint8_t>& y) {
    return gradient(model, standardize(model, x), y);
}

std::vector<double> pair_features(const eval::ComparisonPair& pair, std::span<const eval::Feature> features) {
    std::vector<double> out;
    out.reserve(features.size());
    for (auto f : features) out.push_back(eval::feature_value(pair, f));
    return out;
}

std::map<std::string, double> probe_quality_scores(const LogisticModel& model,
                                                   std::span<const eval::ComparisonPair> pairs,
                                                   std::span<const eval::Feature> features) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& p : pairs) {
        auto& [sum, n] = acc[p.probe_id];
        sum += model.predict(pair_features(p, features));
        ++n;
    }
    std::map<std::string, double> out;
    for (const auto& [id, v] : acc) out[id] = v.first / static_cast<double>(v.second);
    return out;
}

void GateConfig::check() const {
    if (discard_rates.empty()) throw Error(ErrorKind::InvalidInput, "gate: no discard rates");
    for (double r : discard_rates)
        if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorKind::InvalidInput, "gate: discard rates must lie in [0,1)");
    if (!(fmr_target > 0.0 && fmr_target < 1.0)) throw Error(ErrorKind::InvalidInput, "gate: fmr_target outside (0,1)");
    if (resamples < 1) throw Error(ErrorKind::InvalidInput, "gate: resamples must be >= 1");
    if (max_redraws < 0) throw Error(ErrorKind::InvalidInput, "gate: negative max_redraws");
}

std::vector<double> parse_rates(const std::string& spec) {
    std::vector<double> out;
    try {
        if (spec.find(':') != std::string::npos) {
            std::stringstream ss(spec);
            std::string a, b, c;
            std::getline(ss, a, ':');
            std::getline(ss, b, ':');
            std::getline(ss, c, ':');
            const double lo = std::stod(a), hi = std::stod(b), step = std::stod(c);
            if (!(step > 0.0) || hi < lo) throw Error(ErrorKind::InvalidInput, "rates: bad range " + spec);
            const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
            for (long i = 0; i <= count; ++i) out.push_back(lo + static_cast<double>(i) * step);
        } else {
            std::stringstream ss(spec);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) out.push_back(std::stod(tok));
        }
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::InvalidInput, "rates: cannot parse '" + spec + "'");
    }
    if (out.empty()) throw Error(ErrorKind::InvalidInput, "rates: empty list");
    return out;
}

namespace {

struct ModelSpec {
    std::string name;
    std::vector<eval::Feature> features;
};

struct ProbeTable {
    std::vector<std::string> ids;                   // sorted
    std::vector<std::vector<std::size_t>> pairs;    // indices into the pair span
    std::vector<const eval::ComparisonPair*> first; // a representative pair for features
};

ProbeTable index_probes(std::span<const eval::ComparisonPair> pairs) {
    std::map<std::string, std::vector<std::size_t>> by_probe;
    for (std::size_t k = 0; k < pairs.size(); ++k)
        if (pairs[k].matched()) by_probe[pairs[k].probe_id].push_back(k);
    ProbeTable t;
    for (auto& [id, idx] : by_probe) {
        t.ids.push_back(id);
        t.first.push_back(&pairs[idx.front()]);
        t.pairs.push_back(std::move(idx));
    }
    return t;
}

struct ResampleOutcome {
    // [model][rate]
    std::vector<std::vector<double>> fmr;
    std::vector<std::vector<double>> fnmr;
    std::vector<std::vector<double>> coef;  // [model] -> intercept, weights...
    std::vector<std::uint8_t> degenerate;   // [model] fit skipped
    double threshold = 0.0;
    std::size_t redraws = 0;
};

bool fit_possible(const std::vector<std::uint8_t>& y) {
    const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), std::uint8_t{1}));
    return pos >= 2 && y.size() - pos >= 2;
}

std::vector<SweepResult> run_sweeps(std::span<const eval::ComparisonPair> pairs, const std::vector<ModelSpec>& models,
                                    const GateConfig& cfg) {
    cfg.check();
    const ProbeTable probes = index_probes(pairs);
    if (probes.ids.empty()) throw Error(ErrorKind::EmptyClass, "gate: no matched pairs");
    const std::size_t n_probes = probes.ids.size();
    const std::size_t n_rates = cfg.discard_rates.size();

    // Fixed scores when the model is fit once on all pairs.
    std::vector<std::vector<double>> fixed_scores(models.size());
    std::vector<std::vector<double>> fixed_coef(models.size());
    std::vector<std::uint8_t> fixed_degenerate(models.size(), 0);
    if (!cfg.refit_per_resample) {
        std::vector<double> imp;
        for (const auto& p : pairs)
            if (!p.genuine && p.matched()) imp.push_back(p.hd);
        const double t = eval::threshold_for_fmr(imp, cfg.fmr_target);
        for (std::size_t m = 0; m < models.size(); ++m) {
            if (models[m].features.empty()) continue;
            std::vector<std::vector<double>> x;
            std::vector<std::uint8_t> y;
            for (const auto& p : pairs)
                if (p.genuine && p.matched()) {
                    x.push_back(pair_features(p, models[m].features));
                    y.push_back(p.hd <= t ? 1 : 0);
                }
            if (!fit_possible(y)) {
                fixed_degenerate[m] = 1;
                fixed_scores[m].assign(n_probes, 0.0);
                continue;
            }
            const auto model = fit_logistic(x, y, {.l2 = cfg.l2});
            fixed_coef[m].push_back(model.intercept);
            fixed_coef[m].insert(fixed_coef[m].end(), model.weights.begin(), model.weights.end());
            for (std::size_t q = 0; q < n_probes; ++q) {
                double s = 0.0;
                for (auto k : probes.pairs[q]) s += model.predict(pair_features(pairs[k], models[m].features));
                fixed_scores[m].push_back(s / static_cast<double>(probes.pairs[q].size()));
            }
        }
    }

    std::vector<ResampleOutcome> outcomes(static_cast<std::size_t>(cfg.resamples));
    parallel_for(outcomes.size(), [&](std::size_t r) {
        ResampleOutcome& out = outcomes[r];
        std::vector<std::size_t> draw(n_probes);
        std::vector<double> imp;
        double t = 0.0;
        bool ok = false;
        for (int attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
            Rng rng(derive_seed(derive_seed(cfg.seed, r), static_cast<std::uint64_t>(attempt)));
            for (auto& d : draw) d = static_cast<std::size_t>(rng.below(n_probes));
            imp.clear();
            for (auto q : draw)
                for (auto k : probes.pairs[q])
                    if (!pairs[k].genuine) imp.push_back(pairs[k].hd);
            if (imp.empty()) {
                ++out.redraws;
                continue;
            }
            bool any_genuine = false;
            for (auto q : draw)
                for (auto k : probes.pairs[q]) any_genuine = any_genuine || pairs[k].genuine;
            if (!any_genuine) {
                ++out.redraws;
                continue;
            }
            t = eval::threshold_for_fmr(imp, cfg.fmr_target);
            ok = true;
            break;
        }
        if (!ok)
            throw Error(ErrorKind::EmptyClass, "gate: resample " + std::to_string(r) +
                                                   " kept lacking a class after " + std::to_string(cfg.max_redraws) +
                                                   " redraws");
        out.threshold = t;
        out.fmr.assign(models.size(), std::vector<double>(n_rates, 0.0));
        out.fnmr.assign(models.size(), std::vector<double>(n_rates, 0.0));
        out.coef.resize(models.size());
        out.degenerate.assign(models.size(), 0);

        std::vector<double> scores(n_probes, 0.0);
        std::vector<std::size_t> order(draw.size());
        std::vector<std::uint8_t> dropped(draw.size());
        for (std::size_t m = 0; m < models.size(); ++m) {
            const auto& feats = models[m].features;
            std::iota(order.begin(), order.end(), std::size_t{0});
            if (!feats.empty()) {
                if (cfg.refit_per_resample) {
                    std::vector<std::vector<double>> x;
                    std::vector<std::uint8_t> y;
                    for (auto q : draw)
                        for (auto k : probes.pairs[q])
                            if (pairs[k].genuine) {
                                x.push_back(pair_features(pairs[k], feats));
                                y.push_back(pairs[k].hd <= t ? 1 : 0);
                            }
                    if (fit_possible(y)) {
                        const auto model = fit_logistic(x, y, {.l2 = cfg.l2});
                        out.coef[m].push_back(model.intercept);
                        out.coef[m].insert(out.coef[m].end(), model.weights.begin(), model.weights.end());
                        for (std::size_t q = 0; q < n_probes; ++q) {
                            double s = 0.0;
                            for (auto k : probes.pairs[q]) s += model.predict(pair_features(pairs[k], feats));
                            scores[q] = s / static_cast<double>(probes.pairs[q].size());
                        }
                    } else {
                        // Too few accepted or rejected genuine pairs to fit: uninformative scores.
                        std::fill(scores.begin(), scores.end(), 0.0);
                        out.degenerate[m] = 1;
                    }
                } else {
                    scores = fixed_scores[m];
                    out.coef[m] = fixed_coef[m];
                    out.degenerate[m] = fixed_degenerate[m];
                }
                std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    const std::size_t qa = draw[a], qb = draw[b];
                    if (scores[qa] != scores[qb]) return scores[qa] < scores[qb];
                    if (qa != qb) return probes.ids[qa] < probes.ids[qb];
                    return a < b;
                });
            }
            for (std::size_t ri = 0; ri < n_rates; ++ri) {
                const std::size_t drop =
                    feats.empty() ? 0
                                  : static_cast<std::size_t>(std::floor(cfg.discard_rates[ri] * static_cast<double>(draw.size()) + 1e-9));
                std::fill(dropped.begin(), dropped.end(), 0);
                for (std::size_t k = 0; k < drop; ++k) dropped[order[k]] = 1;
                std::size_t fa = 0, ni = 0, fr = 0, ng = 0;
                for (std::size_t di = 0; di < draw.size(); ++di) {
                    if (dropped[di]) continue;
                    for (auto k : probes.pairs[draw[di]]) {
                        const auto& p = pairs[k];
                        if (p.genuine) {
                            ++ng;
                            fr += p.hd > t ? 1 : 0;
                        } else {
                            ++ni;
                            fa += p.hd <= t ? 1 : 0;
                        }
                    }
                }
                out.fmr[m][ri] = ni ? static_cast<double>(fa) / static_cast<double>(ni) : 0.0;
                out.fnmr[m][ri] = ng ? static_cast<double>(fr) / static_cast<double>(ng) : 0.0;
            }
        }
    }, 1);

    std::vector<SweepResult> results;
    for (std::size_t m = 0; m < models.size(); ++m) {
        SweepResult res;
        res.model_name = models[m].name;
        res.features = models[m].features;
        for (const auto& o : outcomes) {
            res.redraws += o.redraws;
            res.degenerate_fits += o.degenerate[m];
        }
        for (std::size_t ri = 0; ri < n_rates; ++ri) {
            std::vector<double> f, g, th;
            for (const auto& o : outcomes) {
                f.push_back(o.fmr[m][ri]);
                g.push_back(o.fnmr[m][ri]);
                th.push_back(o.threshold);
            }
            GateSweepRow row;
            row.discard_rate = cfg.discard_rates[ri];
            row.mean_fmr = stats::mean(f);
            row.mean_fnmr = stats::mean(g);
            row.fmr_ci_low = stats::quantile(f, 0.025);
            row.fmr_ci_high = stats::quantile(f, 0.975);
            row.fnmr_ci_low = stats::quantile(g, 0.025);
            row.fnmr_ci_high = stats::quantile(g, 0.975);
            row.mean_threshold = stats::mean(th);
            res.rows.push_back(row);
        }
        if (!models[m].features.empty()) {
            std::vector<std::string> names = {"intercept"};
            for (auto f : models[m].features) names.emplace_back(eval::to_string(f));
            for (std::size_t c = 0; c < names.size(); ++c) {
                std::vector<double> v;
                for (const auto& o : outcomes)
                    if (!o.degenerate[m]) v.push_back(o.coef[m][c]);
                CoefficientSummary cs;
                cs.name = names[c];
                cs.mean = v.empty() ? std::numeric_limits<double>::quiet_NaN() : stats::mean(v);
                cs.sd = v.size() > 1 ? std::sqrt(stats::sample_variance(v)) : 0.0;
                res.coefficients.push_back(cs);
            }
        }
        results.push_back(std::move(res));
    }
    return results;
}

std::string default_name(std::span<const eval::Feature> features) {
    if (features.empty()) return "M0";
    if (features.size() == 1) {
        std::string n(eval::to_string(features[0]));
        std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::toupper(c); });
        return "M1_" + n;
    }
    return "M" + std::to_string(features.size());
}

}  // namespace

SweepResult gate_sweep(std::span<const eval::ComparisonPair> pairs, std::span<const eval::Feature> features,
                       const GateConfig& config, const std::string& model_name) {
    std::vector<ModelSpec> models = {
        {model_name.empty() ? default_name(features) : model_name, {features.begin(), features.end()}}};
    return std::move(run_sweeps(pairs, models, config).front());
}

std::vector<SweepResult> model_comparison(std::span<const eval::ComparisonPair> pairs, const GateConfig& config) {
    using eval::Feature;
    const std::vector<ModelSpec> models = {
        {"M0", {}},
        {"M1_VIA", {Feature::Via}},
        {"M1_PIR", {Feature::Pir}},
        {"M1_MRD1", {Feature::Mrd1}},
        {"M3", {Feature::Via, Feature::Pir, Feature::Mrd1}},
    };
    return run_sweeps(pairs, models, config);
}

}  // namespace irisgate::gate
