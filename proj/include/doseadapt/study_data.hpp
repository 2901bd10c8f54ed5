#pragma once

#include <span>
#include <string>
#include <vector>

namespace doseadapt {

/// One subject of an individual-level dataset. Arm indices are 1-based
/// with arm 1 = placebo (dose 0).
struct SubjectRecord {
    int arm_index = 0;
    double dose = 0.0;
    double response = 0.0;
};

/// Per-arm summary statistics. `sd` uses the n-1 denominator.
struct ArmSummary {
    double dose = 0.0;
    int n = 0;
    double mean = 0.0;
    double sd = 0.0;
};

/// Arms in ascending dose order plus the pooled within-arm variance
///   S^2 = sum (n_i - 1) S_i^2 / (sum n_i - k).
struct StudySummaries {
    std::vector<ArmSummary> arms;
    double pooled_variance = 0.0;

    std::vector<double> means() const;
    std::vector<int> sizes() const;
    std::vector<double> doses() const;
};

/// Pooled within-arm variance of a set of arms. Throws if sum n_i <= k.
double pooled_variance(std::span<const ArmSummary> arms);

/// Group individual records into per-arm summaries (ascending dose) and
/// compute the pooled variance. Requires >= 3 arms, >= 2 subjects per
/// arm, a placebo (dose 0) arm, and finite responses.
StudySummaries summarize(const std::vector<SubjectRecord>& records);

StudySummaries summaries_from_arms(std::vector<ArmSummary> arms);

/// Responses grouped by arm in ascending dose order, plus the arm doses.
/// Looser validation than summarize (k >= 2); used by the permutation
/// engine, which has its own preconditions.
struct GroupedResponses {
    std::vector<double> doses;
    std::vector<std::vector<double>> responses;
};
GroupedResponses group_by_arm(const std::vector<SubjectRecord>& records);

/// Individual-level CSV: header row with columns `dose` (or `arm` and
/// `dose`) and `response` (alias `resp`). Malformed rows are reported
/// with their file line number.
std::vector<SubjectRecord> load_csv(const std::string& path);

/// Summary-level CSV with columns dose,n,mean,sd.
std::vector<ArmSummary> load_summary_csv(const std::string& path);

}  // namespace doseadapt
