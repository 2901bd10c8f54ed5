#include "doseadapt/model_fit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace doseadapt {

namespace {

constexpr double kPenalty = 1e100;
constexpr double kSigmaFloor = 1e-6;
constexpr double kPi = 3.14159265358979323846;

double clamped_exp(double x) { return std::exp(std::clamp(x, -700.0, 700.0)); }

/// --- Nelder-Mead simplex (derivative-free) ---------------------------

struct SimplexResult {
    std::vector<double> x;
    double fx = kPenalty;
    bool converged = false;
};

SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> x0, std::span<const double> step,
                          double diameter_tol = 1e-10, int max_iter = 2000) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> verts(n + 1, std::vector<double>(x0.begin(), x0.end()));
    for (std::size_t i = 0; i < n; ++i) verts[i + 1][i] += step[i];
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(verts[i]);

    auto order = [&] {
        std::vector<std::size_t> idx(n + 1);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> v2;
        std::vector<double> f2;
        for (auto i : idx) {
            v2.push_back(verts[i]);
            f2.push_back(fv[i]);
        }
        verts = std::move(v2);
        fv = std::move(f2);
    };
    auto diameter = [&] {
        double d = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                d = std::max(d, std::fabs(verts[i][j] - verts[0][j]));
        return d;
    };

    SimplexResult res;
    std::vector<double> centroid(n), trial(n), trial2(n);
    for (int iter = 0; iter < max_iter; ++iter) {
        order();
        if (diameter() < diameter_tol || std::fabs(fv[n] - fv[0]) < 1e-14) {
            res.converged = true;
            break;
        }
        for (std::size_t j = 0; j < n; ++j) {
            centroid[j] = 0.0;
            for (std::size_t i = 0; i < n; ++i) centroid[j] += verts[i][j];
            centroid[j] /= static_cast<double>(n);
        }
        // Reflection.
        for (std::size_t j = 0; j < n; ++j) trial[j] = centroid[j] + (centroid[j] - verts[n][j]);
        double f_r = f(trial);
        if (f_r < fv[0]) {
            // Expansion.
            for (std::size_t j = 0; j < n; ++j)
                trial2[j] = centroid[j] + 2.0 * (centroid[j] - verts[n][j]);
            double f_e = f(trial2);
            if (f_e < f_r) {
                verts[n] = trial2;
                fv[n] = f_e;
            } else {
                verts[n] = trial;
                fv[n] = f_r;
            }
        } else if (f_r < fv[n - 1]) {
            verts[n] = trial;
            fv[n] = f_r;
        } else {
            // Contraction (outside or inside).
            const bool outside = f_r < fv[n];
            for (std::size_t j = 0; j < n; ++j)
                trial2[j] = outside ? centroid[j] + 0.5 * (centroid[j] - verts[n][j])
                                    : centroid[j] - 0.5 * (centroid[j] - verts[n][j]);
            double f_c = f(trial2);
            if (f_c < std::min(f_r, fv[n])) {
                verts[n] = trial2;
                fv[n] = f_c;
            } else {
                // Shrink toward the best vertex.
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        verts[i][j] = verts[0][j] + 0.5 * (verts[i][j] - verts[0][j]);
                    fv[i] = f(verts[i]);
                }
            }
        }
    }
    order();
    res.x = verts[0];
    res.fx = fv[0];
    return res;
}

/// Slope of y on x through the origin.
double ls_slope(std::span<const double> x, std::span<const double> y) {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

std::vector<double> geomspace(double lo, double hi, int n) {
    std::vector<double> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i)
        out.push_back(lo * std::pow(hi / lo, n > 1 ? static_cast<double>(i) / (n - 1) : 0.0));
    return out;
}

}  // namespace

const char* model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Emax: return "emax";
        case ModelKind::LinearLog: return "linear-log";
        case ModelKind::Linear: return "linear";
        case ModelKind::Exponential: return "exponential";
        case ModelKind::Quadratic: return "quadratic";
        case ModelKind::Logistic: return "logistic";
    }
    return "unknown";
}

std::optional<ModelKind> model_from_name(const std::string& name) {
    for (ModelKind k : {ModelKind::Emax, ModelKind::LinearLog, ModelKind::Linear,
                        ModelKind::Exponential, ModelKind::Quadratic, ModelKind::Logistic})
        if (name == model_name(k)) return k;
    return std::nullopt;
}

int parameter_count(ModelKind kind) {
    switch (kind) {
        case ModelKind::Emax:
        case ModelKind::LinearLog:
        case ModelKind::Linear: return 2;
        default: return 3;
    }
}

std::vector<std::string> parameter_names(ModelKind kind) {
    switch (kind) {
        case ModelKind::Emax: return {"ed50"};
        case ModelKind::LinearLog:
        case ModelKind::Linear: return {"theta"};
        case ModelKind::Exponential:
        case ModelKind::Quadratic:
        case ModelKind::Logistic: return {"theta1", "theta2"};
    }
    return {};
}

ModelAnchors anchors_from_means(std::span<const double> means, Direction direction) {
    if (means.empty()) throw std::invalid_argument("anchors_from_means: empty means");
    const double e0 = means[0];
    const double extreme = direction == Direction::Increasing
                               ? *std::max_element(means.begin(), means.end())
                               : *std::min_element(means.begin(), means.end());
    return {e0, extreme - e0};
}

double predict(ModelKind kind, const ModelAnchors& anchors,
               std::span<const double> params, double dose) {
    switch (kind) {
        case ModelKind::Emax:
            if (params[0] <= 0.0) throw std::domain_error("emax: ED50 must be positive");
            return anchors.e0 + anchors.emax_effect * dose / (params[0] + dose);
        case ModelKind::LinearLog:
            return anchors.e0 + params[0] * std::log(dose + 1.0);
        case ModelKind::Linear:
            return anchors.e0 + params[0] * dose;
        case ModelKind::Exponential:
            if (params[1] == 0.0) throw std::domain_error("exponential: theta2 must be nonzero");
            return anchors.e0 + params[0] * clamped_exp(dose / params[1]);
        case ModelKind::Quadratic:
            return anchors.e0 + params[0] * dose + params[1] * dose * dose;
        case ModelKind::Logistic:
            if (params[1] <= 0.0) throw std::domain_error("logistic: theta2 must be positive");
            return anchors.e0 +
                   anchors.emax_effect / (1.0 + clamped_exp((params[0] - dose) / params[1]));
    }
    throw std::invalid_argument("predict: unknown model kind");
}

FitResult fit_model(ModelKind kind, std::span<const double> doses,
                    std::span<const double> means, const ModelAnchors& anchors,
                    std::span<const double> weights) {
    const std::size_t k = doses.size();
    if (means.size() != k)
        throw std::invalid_argument("fit_model: doses/means length mismatch");
    if (static_cast<int>(k) < parameter_count(kind))
        throw std::invalid_argument("fit_model: more parameters than dose levels");
    if (!weights.empty() && weights.size() != k)
        throw std::invalid_argument("fit_model: weights length mismatch");

    const double d_max = *std::max_element(doses.begin(), doses.end());
    // Scale parameters narrower than half the average dose spacing turn
    // the anchored sigmoid into a step interpolant between adjacent
    // arms; the design cannot resolve them.
    const double logistic_scale_floor = d_max / (2.0 * static_cast<double>(k - 1));

    std::vector<double> shifted(k);  // y - e0
    for (std::size_t i = 0; i < k; ++i) shifted[i] = means[i] - anchors.e0;

    const int dim = parameter_count(kind) - 1;  // free thetas, sigma excluded

    // Back-transform from the optimizer's coordinates to model
    // parameters; positive-domain parameters live on a log scale.
    auto to_params = [&](std::span<const double> u) {
        std::vector<double> p(u.begin(), u.end());
        if (kind == ModelKind::Emax) p[0] = std::exp(u[0]);
        if (kind == ModelKind::Logistic) p[1] = std::exp(u[1]);
        return p;
    };
    auto objective = [&](std::span<const double> u) -> double {
        std::vector<double> p = to_params(u);
        if (kind == ModelKind::Exponential && std::fabs(p[1]) < 1e-8) return kPenalty;
        if (kind == ModelKind::Logistic && p[1] < logistic_scale_floor) return kPenalty;
        double rss = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            double r = means[i] - predict(kind, anchors, p, doses[i]);
            rss += (weights.empty() ? 1.0 : weights[i]) * r * r;
        }
        return std::isfinite(rss) ? rss : kPenalty;
    };

    // Multistart grid: the all-ones default plus data-driven guesses and
    // 8-point sweeps over log-scaled positive parameters.
    std::vector<std::vector<double>> starts;
    std::vector<double> step(dim, 0.5);
    switch (kind) {
        case ModelKind::Linear: {
            starts.push_back({1.0});
            starts.push_back({ls_slope(doses, shifted)});
            break;
        }
        case ModelKind::LinearLog: {
            std::vector<double> x(k);
            for (std::size_t i = 0; i < k; ++i) x[i] = std::log(doses[i] + 1.0);
            starts.push_back({1.0});
            starts.push_back({ls_slope(x, shifted)});
            break;
        }
        case ModelKind::Quadratic: {
            starts.push_back({1.0, 1.0});
            // Normal equations for the two-term polynomial.
            double s2 = 0, s3 = 0, s4 = 0, sy1 = 0, sy2 = 0;
            for (std::size_t i = 0; i < k; ++i) {
                const double d = doses[i];
                s2 += d * d;
                s3 += d * d * d;
                s4 += d * d * d * d;
                sy1 += d * shifted[i];
                sy2 += d * d * shifted[i];
            }
            const double det = s2 * s4 - s3 * s3;
            if (std::fabs(det) > 1e-12)
                starts.push_back({(sy1 * s4 - sy2 * s3) / det, (s2 * sy2 - s3 * sy1) / det});
            break;
        }
        case ModelKind::Emax: {
            starts.push_back({0.0});  // ED50 = 1
            for (double ed50 : geomspace(d_max / 100.0, 10.0 * d_max, 8))
                starts.push_back({std::log(ed50)});
            break;
        }
        case ModelKind::Exponential: {
            starts.push_back({1.0, 1.0});
            for (double scale : geomspace(d_max / 4.0, 2.0 * d_max, 4)) {
                for (double t2 : {scale, -scale}) {
                    std::vector<double> z(k);
                    for (std::size_t i = 0; i < k; ++i) z[i] = clamped_exp(doses[i] / t2);
                    starts.push_back({ls_slope(z, shifted), t2});
                }
            }
            break;
        }
        case ModelKind::Logistic: {
            if (1.0 >= logistic_scale_floor) starts.push_back({1.0, 0.0});
            for (int i = 1; i <= 8; ++i) {
                const double t1 = d_max * static_cast<double>(i) / 8.0;
                for (double t2 : geomspace(std::max(logistic_scale_floor, d_max / 20.0),
                                           2.0 * d_max, 8))
                    starts.push_back({t1, std::log(t2)});
            }
            break;
        }
    }

    SimplexResult best;
    bool have_best = false;
    for (const auto& s : starts) {
        SimplexResult r = nelder_mead(objective, s, step);
        if (!have_best || r.fx < best.fx) {
            best = std::move(r);
            have_best = true;
        }
    }

    FitResult fit;
    fit.kind = kind;
    fit.params = to_params(best.x);
    fit.rss = best.fx;
    fit.converged = best.converged && best.fx < kPenalty;
    double sigma_sq = fit.rss / static_cast<double>(k);
    if (sigma_sq < kSigmaFloor * kSigmaFloor) {
        sigma_sq = kSigmaFloor * kSigmaFloor;
        fit.aic_unreliable = true;
    }
    fit.sigma = std::sqrt(sigma_sq);
    fit.log_likelihood = -0.5 * static_cast<double>(k) * std::log(2.0 * kPi * sigma_sq) -
                         0.5 * fit.rss / sigma_sq;
    fit.aic = -2.0 * fit.log_likelihood + 2.0 * parameter_count(kind);
    return fit;
}

FitResult select_best(const std::vector<FitResult>& fits) {
    static constexpr ModelKind kOrder[] = {ModelKind::Emax,        ModelKind::LinearLog,
                                           ModelKind::Linear,      ModelKind::Exponential,
                                           ModelKind::Quadratic,   ModelKind::Logistic};
    auto order_index = [](ModelKind k) {
        for (int i = 0; i < 6; ++i)
            if (kOrder[i] == k) return i;
        return 6;
    };
    const FitResult* best = nullptr;
    for (const auto& f : fits) {
        if (!f.converged) continue;
        if (!best) {
            best = &f;
            continue;
        }
        if (f.aic < best->aic - 1e-9) {
            best = &f;
        } else if (std::fabs(f.aic - best->aic) <= 1e-9) {
            if (parameter_count(f.kind) < parameter_count(best->kind) ||
                (parameter_count(f.kind) == parameter_count(best->kind) &&
                 order_index(f.kind) < order_index(best->kind)))
                best = &f;
        }
    }
    if (!best) throw std::runtime_error("select_best: no converged fits");
    return *best;
}

std::optional<double> recommend_dose(const FitResult& fit, const ModelAnchors& anchors,
                                     DoseCriterion criterion, double delta,
                                     double dose_max, Direction direction) {
    if (dose_max <= 0.0) return std::nullopt;
    const double improve = direction == Direction::Increasing ? 1.0 : -1.0;
    auto margin = [&](double d) -> double {
        const double pred = predict(fit.kind, anchors, fit.params, d);
        if (criterion == DoseCriterion::DiffFromPlacebo) {
            const double at_zero = predict(fit.kind, anchors, fit.params, 0.0);
            return (pred - at_zero) * improve - std::fabs(delta);
        }
        return (pred - delta) * improve;
    };

    // Models need not be monotone: scan first, then refine the first
    // crossing by bisection.
    const int grid = 10000;
    if (margin(0.0) >= 0.0) return 0.0;
    for (int i = 1; i <= grid; ++i) {
        const double d = dose_max * static_cast<double>(i) / grid;
        if (margin(d) >= 0.0) {
            double lo = dose_max * static_cast<double>(i - 1) / grid;
            double hi = d;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (margin(mid) >= 0.0 ? hi : lo) = mid;
            }
            return hi;
        }
    }
    return std::nullopt;
}

}  // namespace doseadapt
