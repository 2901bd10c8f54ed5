#pragma once

#include <cstdint>
#include <vector>

#include "doseadapt/contrast.hpp"
#include "doseadapt/study_data.hpp"

namespace doseadapt {

enum class Alternative { Upper, Lower };

struct PermutationConfig {
    int n_permutations = 50000;
    std::uint64_t seed = 0;
    Alternative alternative = Alternative::Upper;
    /// When set, p = (count + 1) / (B + 1) instead of count / B.
    bool add_one_correction = false;
    /// Worker threads; 0 = auto. The result is identical for any value.
    int threads = 0;
    /// Rounding applied to arm means when deriving the adaptive
    /// coefficients (not to the test statistic itself).
    RoundingPolicy rounding = {};
};

struct PermutationOutcome {
    double p_value = 1.0;
    double observed_t = 0.0;
    long exceed_count = 0;
    int n_permutations = 0;
    ContrastVector contrast;
};

/// Adaptive-contrast permutation p-value. The coefficients are computed
/// once from the observed arm means and frozen; each of the B label
/// permutations recomputes per-arm means, the pooled variance, and the
/// statistic with the frozen coefficients. Ties count as exceedances.
/// A degenerate observed contrast short-circuits to p = 1, T = 0.
PermutationOutcome permutation_pvalue(const std::vector<SubjectRecord>& records,
                                      ConstraintSpec constraint,
                                      const PermutationConfig& config);

/// Same engine with a caller-supplied fixed contrast.
PermutationOutcome fixed_contrast_pvalue(const std::vector<SubjectRecord>& records,
                                         const std::vector<double>& contrast,
                                         const PermutationConfig& config);

struct MultiContrastResult {
    std::vector<double> observed_t;
    /// adjusted_p[j] = #{ max_m T_b,m beats T_obs,j } / B.
    std::vector<double> adjusted_p;
    /// Adjusted p of the best observed contrast.
    double global_p = 1.0;
    int best_index = -1;
    int n_permutations = 0;
};

/// Max-T permutation test over several fixed contrasts. Each contrast
/// must sum to zero (1e-9) and match the arm count.
MultiContrastResult multi_contrast_max_t(const std::vector<SubjectRecord>& records,
                                         const std::vector<std::vector<double>>& contrasts,
                                         const PermutationConfig& config);

}  // namespace doseadapt
