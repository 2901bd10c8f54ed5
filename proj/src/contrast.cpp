#include "doseadapt/contrast.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace doseadapt {

namespace {
constexpr double kDegenerateThreshold = 1e-8;
}

double RoundingPolicy::apply(double x) const {
    if (!enabled) return x;
    return std::round(x / grain) * grain;
}

std::vector<double> running_extremes(std::span<const double> means, Direction direction) {
    if (means.empty()) throw std::invalid_argument("running_extremes: empty input");
    std::vector<double> ext(means.size());
    ext[0] = means[0];
    for (std::size_t i = 1; i < means.size(); ++i) {
        ext[i] = direction == Direction::Increasing ? std::max(ext[i - 1], means[i])
                                                    : std::min(ext[i - 1], means[i]);
    }
    return ext;
}

ContrastVector compute_coefficients(std::span<const double> means,
                                    ConstraintSpec constraint,
                                    RoundingPolicy rounding) {
    const std::size_t k = means.size();
    if (k < 2) throw std::invalid_argument("compute_coefficients: need at least 2 arms");
    for (double m : means)
        if (!std::isfinite(m))
            throw std::invalid_argument("compute_coefficients: non-finite mean");

    std::vector<double> m(means.begin(), means.end());
    for (double& v : m) v = rounding.apply(v);

    // Chain values M_i: running extreme for constrained indices, the raw
    // mean for an unconstrained top dose.
    std::vector<double> chain = running_extremes(m, constraint.direction);
    if (constraint.umbrella) chain[k - 1] = m[k - 1];

    // Only the means are rounded; the coefficients themselves are exact so
    // that the sum-to-zero identity (absorbed into c_1) survives.
    ContrastVector out;
    out.constraint = constraint;
    out.coefficients.resize(k);
    double tail = 0.0;
    for (std::size_t i = 1; i < k; ++i) tail += chain[i];
    out.coefficients[0] =
        ((static_cast<double>(k) - 1.0) * m[0] - tail) / static_cast<double>(k);
    for (std::size_t i = 1; i < k; ++i)
        out.coefficients[i] = chain[i] - chain[i - 1] + out.coefficients[i - 1];

    double max_abs = 0.0;
    for (double c : out.coefficients) max_abs = std::max(max_abs, std::fabs(c));
    out.degenerate = max_abs < kDegenerateThreshold;
    return out;
}

namespace detail {

double t_value_unchecked(std::span<const double> coefficients,
                         std::span<const double> means,
                         double variance_term, double pooled_variance) {
    double num = 0.0;
    for (std::size_t i = 0; i < coefficients.size(); ++i)
        num += coefficients[i] * means[i];
    const double denom_sq = variance_term * pooled_variance;
    if (denom_sq <= 0.0) {
        if (num == 0.0) return 0.0;
        return num > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
    }
    return num / std::sqrt(denom_sq);
}

}  // namespace detail

ContrastTestResult contrast_statistic(const ContrastVector& contrast,
                                      const StudySummaries& summaries) {
    const std::size_t k = summaries.arms.size();
    if (contrast.coefficients.size() != k)
        throw std::invalid_argument("contrast_statistic: contrast length != arm count");

    ContrastTestResult res;
    res.contrast = contrast;
    res.pooled_variance = summaries.pooled_variance;
    for (std::size_t i = 0; i < k; ++i) {
        const double c = contrast.coefficients[i];
        res.numerator += c * summaries.arms[i].mean;
        res.variance_term += c * c / static_cast<double>(summaries.arms[i].n);
    }
    if (contrast.degenerate) {
        res.t_value = 0.0;
        return res;
    }
    if (summaries.pooled_variance <= 0.0)
        throw std::invalid_argument(
            "contrast_statistic: zero pooled variance with non-degenerate contrast");
    res.t_value = res.numerator / std::sqrt(res.variance_term * summaries.pooled_variance);
    return res;
}

}  // namespace doseadapt
