#include "doseadapt/simulation.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "doseadapt/parallel.hpp"
#include "doseadapt/rng.hpp"

namespace doseadapt {

std::vector<Scenario> builtin_scenarios() {
    return {
        {"Scenario1", {0.2, 0.2, 0.2, 0.2, 0.2}},
        {"Scenario2", {0.2, 0.23, 0.32, 0.56, 0.8}},
        {"Scenario3", {0.2, 0.275, 0.432, 0.664, 0.8}},
        {"Scenario4", {0.2, 0.34, 0.55, 0.725, 0.783}},
        {"Scenario5", {0.2, 0.201, 0.206, 0.226, 0.264}},
        {"Scenario6", {0.2, 0.298, 0.54, 0.8, 0.5}},
        {"Scenario7", {0.271, 0.289, 0.362, 0.631, 0.767}},
        {"Scenario8", {0.2, 0.4, 0.6, 0.6, 0.8}},
        {"Scenario9", {0.2, 0.4, 0.6, 0.6, 0.6}},
        {"Scenario10", {0.2, 0.6, 0.6, 0.6, 0.6}},
        {"Scenario11", {0.2, 0.6, 0.6, 0.8, 0.8}},
    };
}

Scenario builtin_scenario(int index) {
    auto all = builtin_scenarios();
    if (index < 1 || index > static_cast<int>(all.size()))
        throw std::invalid_argument("builtin_scenario: index out of range");
    return all[index - 1];
}

double scenario_curve_mean(ScenarioCurve curve, double d) {
    switch (curve) {
        case ScenarioCurve::Constant: return 0.2;
        case ScenarioCurve::Linear: return 0.2 + 0.6 * d;
        case ScenarioCurve::LinearLogDose:
            return 0.2 + 0.6 * std::log10(5.0 * d + 1.0) / std::log10(6.0);
        case ScenarioCurve::Emax: return 0.2 + 0.7 * d / (0.2 + d);
        case ScenarioCurve::Exponential:
            return 0.183 + 0.017 * std::exp(2.0 * d * std::log10(6.0));
        case ScenarioCurve::Quadratic: return 0.2 + 2.049 * d - 1.749 * d * d;
        case ScenarioCurve::Logistic:
            return 0.193 + 0.607 / (1.0 + std::exp(10.0 * std::log10(3.0) * (0.4 - d)));
    }
    throw std::invalid_argument("scenario_curve_mean: unknown curve");
}

ContrastVector pilot_contrast(const Scenario& scenario, int n_per_arm,
                              ConstraintSpec constraint, std::uint64_t seed) {
    const int k = static_cast<int>(scenario.true_means.size());
    rng::Stream stream(seed, 0, 1);
    std::vector<double> means(k, 0.0);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < n_per_arm; ++j)
            means[i] += stream.next_normal(scenario.true_means[i], scenario.sd);
        means[i] /= n_per_arm;
    }
    return compute_coefficients(means, constraint, RoundingPolicy{});
}

PowerResult simulate_power(const Scenario& scenario, const SimConfig& config) {
    const int k = static_cast<int>(scenario.true_means.size());
    if (k < 3 || scenario.doses.size() != scenario.true_means.size())
        throw std::invalid_argument("simulate_power: malformed scenario");
    if (config.total_n % k != 0)
        throw std::invalid_argument("simulate_power: total_n not divisible by arm count");
    const int n_per_arm = config.total_n / k;
    if (n_per_arm < 2)
        throw std::invalid_argument("simulate_power: fewer than 2 subjects per arm");

    const ContrastVector frozen =
        pilot_contrast(scenario, n_per_arm, config.constraint, config.seed);
    if (frozen.degenerate) {
        PowerResult res;
        res.scenario = scenario.name;
        res.n_sim = config.n_sim;
        return res;
    }

    const int threads = resolve_threads(config.threads);
    std::vector<long> rejections(threads, 0);
    parallel_chunks(config.n_sim, threads, [&](long first, long last, int worker) {
        std::vector<SubjectRecord> records(static_cast<std::size_t>(k) * n_per_arm);
        for (long s = first; s < last; ++s) {
            // Replicate stream and the permutation seed both derive from
            // (seed, replicate); scheduling cannot change either.
            rng::Stream data_stream(config.seed, static_cast<std::uint64_t>(s) + 1, 1);
            rng::Stream seed_stream(config.seed, static_cast<std::uint64_t>(s) + 1, 2);
            std::size_t r = 0;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < n_per_arm; ++j, ++r)
                    records[r] = {i + 1, scenario.doses[i],
                                  data_stream.next_normal(scenario.true_means[i], scenario.sd)};
            PermutationConfig pc;
            pc.n_permutations = config.n_perm;
            pc.seed = seed_stream.next_u64();
            pc.alternative = Alternative::Upper;
            pc.threads = 1;  // replicates are already parallel
            PermutationOutcome outcome =
                fixed_contrast_pvalue(records, frozen.coefficients, pc);
            if (outcome.p_value < config.alpha) ++rejections[worker];
        }
    });

    PowerResult res;
    res.scenario = scenario.name;
    res.n_sim = config.n_sim;
    for (long c : rejections) res.rejections += c;
    res.power = static_cast<double>(res.rejections) / config.n_sim;
    res.mc_se = std::sqrt(res.power * (1.0 - res.power) / config.n_sim);
    return res;
}

std::vector<PowerTableRow> power_table(const std::vector<Scenario>& scenarios,
                                       const std::vector<int>& total_ns,
                                       const std::vector<bool>& umbrella_variants,
                                       const SimConfig& base_config) {
    std::vector<PowerTableRow> rows;
    for (bool umbrella : umbrella_variants) {
        for (const auto& scenario : scenarios) {
            for (int n : total_ns) {
                SimConfig cfg = base_config;
                cfg.total_n = n;
                cfg.constraint.umbrella = umbrella;
                PowerResult pr = simulate_power(scenario, cfg);
                rows.push_back({scenario.name, umbrella ? "umbrella" : "full-chain", n,
                                cfg.n_sim, cfg.n_perm, cfg.alpha, pr.power, pr.mc_se,
                                cfg.seed});
            }
        }
    }
    return rows;
}

std::string power_table_csv(const std::vector<PowerTableRow>& rows) {
    std::string out = "scenario,constraint_variant,N,n_sim,n_perm,alpha,power,mc_se,seed\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%d,%g,%.6f,%.6f,%llu\n",
                      r.scenario.c_str(), r.constraint_variant.c_str(), r.total_n, r.n_sim,
                      r.n_perm, r.alpha, r.power, r.mc_se,
                      static_cast<unsigned long long>(r.seed));
        out += buf;
    }
    return out;
}

}  // namespace doseadapt
