#pragma once

#include <span>
#include <vector>

#include "doseadapt/study_data.hpp"

namespace doseadapt {

enum class Direction { Increasing, Decreasing };

/// Ordinal constraint on the contrast coefficients. `umbrella` exempts
/// the highest-dose coefficient from the ordering chain so the contrast
/// can adapt to a rise-then-fall shape.
struct ConstraintSpec {
    Direction direction = Direction::Increasing;
    bool umbrella = false;
};

/// Rounding applied to arm means (and the derived coefficients) before
/// the coefficient recursion. Default grain 1e-5.
struct RoundingPolicy {
    bool enabled = true;
    double grain = 1e-5;

    static RoundingPolicy off() { return {false, 1e-5}; }
    double apply(double x) const;
};

struct ContrastVector {
    std::vector<double> coefficients;
    ConstraintSpec constraint;
    bool degenerate = false;
};

struct ContrastTestResult {
    double t_value = 0.0;
    ContrastVector contrast;
    double pooled_variance = 0.0;
    double numerator = 0.0;      // sum c_i * mean_i
    double variance_term = 0.0;  // sum c_i^2 / n_i
};

/// Element i is the running max (Increasing) or min (Decreasing) of the
/// means up to and including index i.
std::vector<double> running_extremes(std::span<const double> means, Direction direction);

/// Data-adaptive ordinal-constraint contrast coefficients. The
/// coefficients sum to zero and satisfy the constraint's ordering chain;
/// `degenerate` is set when every coefficient vanishes (max |c_i| < 1e-8
/// after rounding).
ContrastVector compute_coefficients(std::span<const double> means,
                                    ConstraintSpec constraint,
                                    RoundingPolicy rounding = {});

/// Contrast t-statistic
///   T = sum c_i mean_i / sqrt((sum c_i^2 / n_i) S^2).
/// A degenerate contrast yields T = 0. Throws if the pooled variance is
/// zero for a non-degenerate contrast.
ContrastTestResult contrast_statistic(const ContrastVector& contrast,
                                      const StudySummaries& summaries);

namespace detail {
/// Raw statistic without validation; returns +-inf when the denominator
/// vanishes with a nonzero numerator. Building block for the permutation
/// engine, where fully mixed-label datasets can have zero pooled variance.
double t_value_unchecked(std::span<const double> coefficients,
                         std::span<const double> means,
                         double variance_term, double pooled_variance);
}  // namespace detail

}  // namespace doseadapt
