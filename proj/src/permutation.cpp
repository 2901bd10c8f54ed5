#include "doseadapt/permutation.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "doseadapt/parallel.hpp"
#include "doseadapt/rng.hpp"

namespace doseadapt {

namespace {

struct PooledData {
    std::vector<double> values;  // arm-by-arm concatenation
    std::vector<int> sizes;
    std::vector<double> doses;
    long total_n = 0;
};

PooledData pool_records(const std::vector<SubjectRecord>& records) {
    GroupedResponses grouped = group_by_arm(records);
    if (grouped.doses.size() < 2)
        throw std::invalid_argument("permutation test: need at least 2 arms");
    PooledData out;
    out.doses = grouped.doses;
    for (const auto& arm : grouped.responses) {
        if (arm.size() < 2)
            throw std::invalid_argument("permutation test: arm with fewer than 2 subjects");
        out.sizes.push_back(static_cast<int>(arm.size()));
        out.total_n += static_cast<long>(arm.size());
        out.values.insert(out.values.end(), arm.begin(), arm.end());
    }
    return out;
}

/// Per-arm means and pooled variance of a pooled vector in arm layout.
void arm_stats(const std::vector<double>& values, const std::vector<int>& sizes,
               std::vector<double>& means, double& pooled_var) {
    const std::size_t k = sizes.size();
    double ss_within = 0.0;
    std::size_t offset = 0;
    long total = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const int n = sizes[i];
        double sum = 0.0, sumsq = 0.0;
        for (int j = 0; j < n; ++j) {
            const double v = values[offset + j];
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / n;
        means[i] = mean;
        ss_within += sumsq - n * mean * mean;
        offset += n;
        total += n;
    }
    pooled_var = std::max(ss_within, 0.0) / static_cast<double>(total - static_cast<long>(k));
}

void validate_config(const PermutationConfig& config) {
    if (config.n_permutations < 100)
        throw std::invalid_argument("permutation test: need at least 100 permutations");
}

bool beats(double t_perm, double t_obs, Alternative alt) {
    return alt == Alternative::Upper ? t_perm >= t_obs : t_perm <= t_obs;
}

/// Shared permutation loop: exceedance counts of max-T (Upper) or min-T
/// (Lower) over the given contrasts against each observed statistic.
std::vector<long> permute_counts(const PooledData& data,
                                 const std::vector<std::vector<double>>& contrasts,
                                 const std::vector<double>& observed_t,
                                 const PermutationConfig& config) {
    const std::size_t k = data.sizes.size();
    const std::size_t m = contrasts.size();
    std::vector<double> variance_terms(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < k; ++i)
            variance_terms[j] += contrasts[j][i] * contrasts[j][i] / data.sizes[i];

    const int threads = resolve_threads(config.threads);
    std::vector<std::vector<long>> counts(threads, std::vector<long>(m, 0));
    parallel_chunks(config.n_permutations, threads, [&](long first, long last, int worker) {
        std::vector<double> scratch;
        std::vector<double> means(k);
        auto& local = counts[worker];
        for (long b = first; b < last; ++b) {
            // Stream b is a function of (seed, b): any scheduling gives
            // the same permutations.
            rng::Stream stream(config.seed, static_cast<std::uint64_t>(b) + 1);
            scratch = data.values;
            stream.shuffle(scratch);
            double s2 = 0.0;
            arm_stats(scratch, data.sizes, means, s2);
            double extreme = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double t =
                    detail::t_value_unchecked(contrasts[j], means, variance_terms[j], s2);
                if (j == 0 || (config.alternative == Alternative::Upper ? t > extreme
                                                                        : t < extreme))
                    extreme = t;
            }
            for (std::size_t j = 0; j < m; ++j)
                if (beats(extreme, observed_t[j], config.alternative)) ++local[j];
        }
    });
    std::vector<long> total(m, 0);
    for (const auto& local : counts)
        for (std::size_t j = 0; j < m; ++j) total[j] += local[j];
    return total;
}

double to_pvalue(long count, int b, bool add_one) {
    return add_one ? static_cast<double>(count + 1) / static_cast<double>(b + 1)
                   : static_cast<double>(count) / static_cast<double>(b);
}

void validate_contrast(const std::vector<double>& contrast, std::size_t k) {
    if (contrast.size() != k)
        throw std::invalid_argument("contrast length does not match arm count");
    double sum = 0.0;
    for (double c : contrast) sum += c;
    if (std::fabs(sum) > 1e-9)
        throw std::invalid_argument("contrast does not sum to zero");
}

PermutationOutcome run_single(const PooledData& data, ContrastVector contrast,
                              const PermutationConfig& config) {
    const std::size_t k = data.sizes.size();
    std::vector<double> means(k);
    double s2 = 0.0;
    arm_stats(data.values, data.sizes, means, s2);

    PermutationOutcome out;
    out.n_permutations = config.n_permutations;
    out.contrast = std::move(contrast);
    if (out.contrast.degenerate) {
        out.p_value = 1.0;
        out.observed_t = 0.0;
        out.exceed_count = config.n_permutations;
        return out;
    }
    double variance_term = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        variance_term +=
            out.contrast.coefficients[i] * out.contrast.coefficients[i] / data.sizes[i];
    out.observed_t =
        detail::t_value_unchecked(out.contrast.coefficients, means, variance_term, s2);

    auto counts = permute_counts(data, {out.contrast.coefficients}, {out.observed_t}, config);
    out.exceed_count = counts[0];
    out.p_value = to_pvalue(out.exceed_count, config.n_permutations,
                            config.add_one_correction);
    return out;
}

}  // namespace

PermutationOutcome permutation_pvalue(const std::vector<SubjectRecord>& records,
                                      ConstraintSpec constraint,
                                      const PermutationConfig& config) {
    validate_config(config);
    PooledData data = pool_records(records);
    std::vector<double> means(data.sizes.size());
    double s2 = 0.0;
    arm_stats(data.values, data.sizes, means, s2);
    // Coefficients adapt to the observed means once, then stay frozen
    // throughout the permutation loop.
    ContrastVector contrast = compute_coefficients(means, constraint, config.rounding);
    return run_single(data, std::move(contrast), config);
}

PermutationOutcome fixed_contrast_pvalue(const std::vector<SubjectRecord>& records,
                                         const std::vector<double>& contrast,
                                         const PermutationConfig& config) {
    validate_config(config);
    PooledData data = pool_records(records);
    validate_contrast(contrast, data.sizes.size());
    ContrastVector cv;
    cv.coefficients = contrast;
    double max_abs = 0.0;
    for (double c : contrast) max_abs = std::max(max_abs, std::fabs(c));
    cv.degenerate = max_abs < 1e-8;
    return run_single(data, std::move(cv), config);
}

MultiContrastResult multi_contrast_max_t(const std::vector<SubjectRecord>& records,
                                         const std::vector<std::vector<double>>& contrasts,
                                         const PermutationConfig& config) {
    validate_config(config);
    if (contrasts.empty())
        throw std::invalid_argument("multi_contrast_max_t: no contrasts given");
    PooledData data = pool_records(records);
    const std::size_t k = data.sizes.size();
    for (const auto& c : contrasts) validate_contrast(c, k);

    std::vector<double> means(k);
    double s2 = 0.0;
    arm_stats(data.values, data.sizes, means, s2);

    MultiContrastResult out;
    out.n_permutations = config.n_permutations;
    for (const auto& c : contrasts) {
        double variance_term = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            variance_term += c[i] * c[i] / data.sizes[i];
        out.observed_t.push_back(
            detail::t_value_unchecked(c, means, variance_term, s2));
    }
    out.best_index = 0;
    for (std::size_t j = 1; j < contrasts.size(); ++j) {
        const bool better = config.alternative == Alternative::Upper
                                ? out.observed_t[j] > out.observed_t[out.best_index]
                                : out.observed_t[j] < out.observed_t[out.best_index];
        if (better) out.best_index = static_cast<int>(j);
    }
    auto counts = permute_counts(data, contrasts, out.observed_t, config);
    for (long c : counts)
        out.adjusted_p.push_back(
            to_pvalue(c, config.n_permutations, config.add_one_correction));
    out.global_p = out.adjusted_p[out.best_index];
    return out;
}

}  // namespace doseadapt
