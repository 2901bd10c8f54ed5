#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "doseadapt/contrast.hpp"

namespace doseadapt {

enum class ModelKind { Emax, LinearLog, Linear, Exponential, Quadratic, Logistic };

const char* model_name(ModelKind kind);
std::optional<ModelKind> model_from_name(const std::string& name);

/// Free parameters excluding anchors, plus the residual SD.
int parameter_count(ModelKind kind);
/// Names of the free parameters (without sigma), in storage order.
std::vector<std::string> parameter_names(ModelKind kind);

/// Values fixed from the data before fitting: the placebo mean and, for
/// the Emax and Logistic models, the asymptotic effect (most extreme arm
/// mean minus the placebo mean).
struct ModelAnchors {
    double e0 = 0.0;
    double emax_effect = 0.0;
};

/// Anchors derived from arm means: e0 is the dose-0 mean; emax_effect is
/// max(means) - e0 for Increasing, min(means) - e0 for Decreasing.
ModelAnchors anchors_from_means(std::span<const double> means, Direction direction);

struct FitResult {
    ModelKind kind = ModelKind::Linear;
    std::vector<double> params;  // free parameters, see parameter_names()
    double sigma = 0.0;          // MLE residual SD, sqrt(RSS / k)
    double rss = 0.0;
    double log_likelihood = 0.0;
    double aic = 0.0;
    bool converged = false;
    /// Zero-RSS degenerate fit: sigma clamped to 1e-6, AIC not meaningful.
    bool aic_unreliable = false;
};

/// Model mean at `dose`. Throws std::domain_error on parameter-domain
/// violations (Emax needs ED50 > 0, Exponential theta2 != 0, Logistic
/// theta2 > 0).
double predict(ModelKind kind, const ModelAnchors& anchors,
               std::span<const double> params, double dose);

/// Least-squares fit of one model to the k (dose, mean) points via
/// multistart Nelder-Mead, with sigma^2 = RSS/k and
/// AIC = -2 logL + 2 * parameter_count. Optional weights (e.g. arm
/// sizes) rescale the squared residuals; default unweighted.
FitResult fit_model(ModelKind kind, std::span<const double> doses,
                    std::span<const double> means, const ModelAnchors& anchors,
                    std::span<const double> weights = {});

/// Minimum-AIC converged fit; ties broken by fewer parameters, then by
/// the fixed kind order Emax, LinearLog, Linear, Exponential, Quadratic,
/// Logistic. Throws if no fit converged.
FitResult select_best(const std::vector<FitResult>& fits);

enum class DoseCriterion { DiffFromPlacebo, ChangeFromBaseline };

/// Smallest dose in [0, dose_max] whose predicted effect meets the
/// criterion, found by a grid scan (1e-4 * dose_max resolution) plus
/// bisection refinement. Empty when the threshold is never reached.
std::optional<double> recommend_dose(const FitResult& fit, const ModelAnchors& anchors,
                                     DoseCriterion criterion, double delta,
                                     double dose_max, Direction direction);

}  // namespace doseadapt
