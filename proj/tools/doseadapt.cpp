// doseadapt: adaptive-contrast analysis of dose-response studies.
//
// Subcommands:
//   analyze    coefficients, permutation p-value, model selection, MED
//   power      Monte-Carlo power / type-I error over simulation scenarios
//   plot-data  CSV extracts of a report for external plotting

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "doseadapt/model_fit.hpp"
#include "doseadapt/permutation.hpp"
#include "doseadapt/simulation.hpp"
#include "doseadapt/study_data.hpp"

using json = nlohmann::ordered_json;
using namespace doseadapt;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kCurvePoints = 101;

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::invalid_argument("cannot write file: " + out_path);
    out << text;
}

json fit_to_json(const FitResult& fit, const ModelAnchors& anchors, double dose_max) {
    json j;
    j["kind"] = model_name(fit.kind);
    json params = json::object();
    auto names = parameter_names(fit.kind);
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = fit.params[i];
    j["params"] = params;
    j["anchors"] = {{"e0", anchors.e0}, {"emax_effect", anchors.emax_effect}};
    j["sigma"] = fit.sigma;
    j["rss"] = fit.rss;
    j["log_likelihood"] = fit.log_likelihood;
    j["aic"] = fit.aic;
    j["converged"] = fit.converged;
    j["aic_unreliable"] = fit.aic_unreliable;
    json dose = json::array(), mean = json::array();
    for (int i = 0; i < kCurvePoints; ++i) {
        const double d = dose_max * static_cast<double>(i) / (kCurvePoints - 1);
        dose.push_back(d);
        mean.push_back(predict(fit.kind, anchors, fit.params, d));
    }
    j["curve"] = {{"dose", dose}, {"mean", mean}};
    return j;
}

struct AnalyzeOptions {
    std::string input;
    std::string out;
    std::string direction = "increasing";
    bool umbrella = false;
    bool summary_input = false;
    int n_permutations = 50000;
    std::uint64_t seed = 12345;
    double alpha = 0.025;
    bool no_round = false;
    bool always_fit = false;
    bool add_one = false;
    std::optional<double> delta;
    std::optional<double> pooled_variance_override;
    int threads = 0;
};

int run_analyze(const AnalyzeOptions& opt) {
    const Direction direction =
        opt.direction == "decreasing" ? Direction::Decreasing : Direction::Increasing;
    ConstraintSpec constraint{direction, opt.umbrella};
    RoundingPolicy rounding;
    rounding.enabled = !opt.no_round;

    StudySummaries summaries;
    std::vector<SubjectRecord> records;
    if (opt.summary_input) {
        summaries = summaries_from_arms(load_summary_csv(opt.input));
        if (summaries.arms.size() < 3)
            throw std::invalid_argument("summary input: at least 3 arms required");
    } else {
        records = load_csv(opt.input);
        summaries = summarize(records);
    }
    if (opt.pooled_variance_override)
        summaries.pooled_variance = *opt.pooled_variance_override;

    const std::vector<double> means = summaries.means();
    ContrastVector contrast = compute_coefficients(means, constraint, rounding);
    ContrastTestResult stat = contrast_statistic(contrast, summaries);

    json report;
    report["tool"] = {{"name", "doseadapt"}, {"version", kVersion}};
    report["seed"] = opt.seed;
    report["alpha"] = opt.alpha;
    json arms = json::array();
    for (const auto& a : summaries.arms)
        arms.push_back({{"dose", a.dose}, {"n", a.n}, {"mean", a.mean}, {"sd", a.sd}});
    report["summaries"] = {{"arms", arms}, {"pooled_variance", summaries.pooled_variance}};
    report["contrast"] = {
        {"coefficients", contrast.coefficients},
        {"direction", direction == Direction::Increasing ? "increasing" : "decreasing"},
        {"umbrella", opt.umbrella},
        {"degenerate", contrast.degenerate},
        {"rounding", rounding.enabled}};
    report["statistic"] = {{"t_value", stat.t_value},
                           {"numerator", stat.numerator},
                           {"variance_term", stat.variance_term},
                           {"pooled_variance", stat.pooled_variance}};

    bool have_p = false;
    double p_value = 1.0;
    if (opt.summary_input) {
        report["permutation"] = nullptr;
        report["permutation_note"] = "permutation requires subject-level data";
    } else {
        PermutationConfig pc;
        pc.n_permutations = opt.n_permutations;
        pc.seed = opt.seed;
        pc.add_one_correction = opt.add_one;
        pc.rounding = rounding;
        pc.threads = opt.threads;
        PermutationOutcome outcome = permutation_pvalue(records, constraint, pc);
        p_value = outcome.p_value;
        have_p = true;
        report["permutation"] = {{"p_value", outcome.p_value},
                                 {"observed_t", outcome.observed_t},
                                 {"exceed_count", outcome.exceed_count},
                                 {"n_permutations", outcome.n_permutations},
                                 {"seed", opt.seed},
                                 {"alternative", "upper"},
                                 {"add_one_correction", opt.add_one}};
        report["poc_shown"] = outcome.p_value < opt.alpha;
    }

    const bool do_fit =
        !contrast.degenerate && (opt.always_fit || (have_p && p_value < opt.alpha));
    if (do_fit) {
        const ModelAnchors anchors = anchors_from_means(means, direction);
        const std::vector<double> doses = summaries.doses();
        const double dose_max = doses.back();
        std::vector<FitResult> fits;
        json fits_json = json::array();
        for (ModelKind kind : {ModelKind::Emax, ModelKind::LinearLog, ModelKind::Linear,
                               ModelKind::Exponential, ModelKind::Quadratic,
                               ModelKind::Logistic}) {
            fits.push_back(fit_model(kind, doses, means, anchors));
            fits_json.push_back(fit_to_json(fits.back(), anchors, dose_max));
        }
        report["fits"] = fits_json;
        FitResult best = select_best(fits);  // throws when nothing converged
        report["best_model"] = model_name(best.kind);
        if (opt.delta) {
            auto diff = recommend_dose(best, anchors, DoseCriterion::DiffFromPlacebo,
                                       *opt.delta, dose_max, direction);
            auto change = recommend_dose(best, anchors, DoseCriterion::ChangeFromBaseline,
                                         *opt.delta, dose_max, direction);
            json rec;
            rec["delta"] = *opt.delta;
            rec["diff_from_placebo"] = diff ? json(*diff) : json(nullptr);
            rec["change_from_baseline"] = change ? json(*change) : json(nullptr);
            report["recommended_doses"] = rec;
        }
    } else {
        report["fits"] = json::array();
        report["best_model"] = nullptr;
    }

    write_output(report.dump(2) + "\n", opt.out);
    return 0;
}

struct PowerOptions {
    std::string scenario = "all";
    std::vector<int> total_ns = {250, 375, 500};  // 50/75/100 per arm
    int n_sim = 2000;
    int n_perm = 5000;
    double alpha = 0.025;
    std::uint64_t seed = 2935;
    std::string constraint = "umbrella";
    std::string out;
    bool as_json = false;
    int threads = 0;
};

std::vector<Scenario> scenarios_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
    json j = json::parse(in);
    std::vector<Scenario> out;
    for (const auto& item : j) {
        Scenario s;
        s.name = item.at("name").get<std::string>();
        s.true_means = item.at("true_means").get<std::vector<double>>();
        if (item.contains("sd")) s.sd = item["sd"].get<double>();
        if (item.contains("doses")) s.doses = item["doses"].get<std::vector<double>>();
        if (s.doses.size() != s.true_means.size())
            throw std::invalid_argument("scenario " + s.name + ": doses/means length mismatch");
        out.push_back(std::move(s));
    }
    return out;
}

int run_power(const PowerOptions& opt) {
    std::vector<Scenario> scenarios;
    if (opt.scenario == "all") {
        scenarios = builtin_scenarios();
    } else if (!opt.scenario.empty() && opt.scenario.front() == '@') {
        scenarios = scenarios_from_file(opt.scenario.substr(1));
    } else {
        bool found = false;
        for (auto& s : builtin_scenarios())
            if (s.name == opt.scenario) {
                scenarios.push_back(s);
                found = true;
            }
        if (!found)
            throw std::invalid_argument("unknown scenario: " + opt.scenario +
                                        " (use Scenario1..Scenario11, all, or @file.json)");
    }

    std::vector<bool> variants;
    if (opt.constraint == "umbrella") variants = {true};
    else if (opt.constraint == "full-chain") variants = {false};
    else if (opt.constraint == "both") variants = {true, false};
    else throw std::invalid_argument("constraint must be umbrella, full-chain, or both");

    SimConfig cfg;
    cfg.n_sim = opt.n_sim;
    cfg.n_perm = opt.n_perm;
    cfg.alpha = opt.alpha;
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;
    cfg.constraint.direction = Direction::Increasing;
    auto rows = power_table(scenarios, opt.total_ns, variants, cfg);

    if (opt.as_json) {
        json j;
        j["tool"] = {{"name", "doseadapt"}, {"version", kVersion}};
        json rows_json = json::array();
        for (const auto& r : rows)
            rows_json.push_back({{"scenario", r.scenario},
                                 {"constraint_variant", r.constraint_variant},
                                 {"N", r.total_n},
                                 {"n_sim", r.n_sim},
                                 {"n_perm", r.n_perm},
                                 {"alpha", r.alpha},
                                 {"power", r.power},
                                 {"mc_se", r.mc_se},
                                 {"seed", r.seed}});
        j["rows"] = rows_json;
        write_output(j.dump(2) + "\n", opt.out);
    } else {
        write_output(power_table_csv(rows), opt.out);
    }
    return 0;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

int run_plot_data(const std::string& report_path, const std::string& what,
                  const std::string& out_path) {
    std::ifstream in(report_path);
    if (!in) throw std::invalid_argument("cannot open report: " + report_path);
    json report = json::parse(in);
    std::ostringstream csv;

    if (what == "curves") {
        if (!report.contains("fits") || report["fits"].empty())
            throw std::invalid_argument("report has no model fits");
        const auto& fits = report["fits"];
        csv << "dose";
        for (const auto& f : fits) csv << ',' << f["kind"].get<std::string>();
        csv << ",observed\n";
        const auto& grid = fits[0]["curve"]["dose"];
        for (std::size_t i = 0; i < grid.size(); ++i) {
            csv << format_double(grid[i].get<double>());
            for (const auto& f : fits)
                csv << ',' << format_double(f["curve"]["mean"][i].get<double>());
            csv << ",\n";
        }
        for (const auto& arm : report["summaries"]["arms"]) {
            csv << format_double(arm["dose"].get<double>());
            for (std::size_t j = 0; j < fits.size(); ++j) csv << ',';
            csv << ',' << format_double(arm["mean"].get<double>()) << '\n';
        }
    } else if (what == "power") {
        if (!report.contains("rows"))
            throw std::invalid_argument("report has no power rows");
        std::vector<int> ns;
        std::vector<std::pair<std::string, std::string>> keys;  // (scenario, variant)
        std::map<std::pair<std::string, std::string>, std::map<int, double>> cells;
        for (const auto& r : report["rows"]) {
            const int n = r["N"].get<int>();
            if (std::find(ns.begin(), ns.end(), n) == ns.end()) ns.push_back(n);
            auto key = std::make_pair(r["scenario"].get<std::string>(),
                                      r["constraint_variant"].get<std::string>());
            if (!cells.count(key)) keys.push_back(key);
            cells[key][n] = r["power"].get<double>();
        }
        std::sort(ns.begin(), ns.end());
        csv << "scenario,constraint_variant";
        for (int n : ns) csv << ",N=" << n;
        csv << '\n';
        for (const auto& key : keys) {
            csv << key.first << ',' << key.second;
            for (int n : ns) {
                csv << ',';
                auto it = cells[key].find(n);
                if (it != cells[key].end()) csv << format_double(it->second);
            }
            csv << '\n';
        }
    } else {
        throw std::invalid_argument("--what must be curves or power");
    }
    write_output(csv.str(), out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive contrast test for dose-response studies"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    AnalyzeOptions an;
    auto* analyze = app.add_subcommand("analyze", "Run the adaptive contrast analysis");
    analyze->add_option("input", an.input, "Input CSV")->required();
    analyze->add_option("--direction", an.direction, "Improvement direction")
        ->check(CLI::IsMember({"increasing", "decreasing"}));
    analyze->add_flag("--umbrella", an.umbrella, "Leave the top-dose coefficient unconstrained");
    analyze->add_flag("--summary", an.summary_input, "Input is summary-level (dose,n,mean,sd)");
    analyze->add_option("-B,--permutations", an.n_permutations, "Number of permutations");
    analyze->add_option("--seed", an.seed, "RNG seed");
    analyze->add_option("--alpha", an.alpha, "One-sided significance level");
    analyze->add_flag("--no-round", an.no_round, "Disable 1e-5 rounding of means");
    analyze->add_flag("--always-fit", an.always_fit, "Fit models even without significance");
    analyze->add_flag("--add-one", an.add_one, "Use the (count+1)/(B+1) p-value");
    double delta_val = 0.0;
    auto* delta_opt =
        analyze->add_option("--delta", delta_val, "Clinically meaningful effect for MED");
    double pv_override = 0.0;
    auto* pv_opt = analyze->add_option("--pooled-variance", pv_override,
                                       "Externally computed pooled variance override");
    analyze->add_option("--threads", an.threads, "Worker threads (0 = auto)");

    PowerOptions pw;
    auto* power = app.add_subcommand("power", "Simulate power / type-I error");
    power->add_option("--scenario", pw.scenario, "Scenario name, 'all', or @file.json");
    power->add_option("--n", pw.total_ns, "Total sample sizes (split equally over arms)")
        ->delimiter(',');
    power->add_option("--nsim", pw.n_sim, "Simulated trials per cell");
    power->add_option("--nperm", pw.n_perm, "Permutations per trial");
    power->add_option("--alpha", pw.alpha, "One-sided significance level");
    power->add_option("--seed", pw.seed, "RNG seed");
    power->add_option("--constraint", pw.constraint, "umbrella, full-chain, or both");
    power->add_flag("--json", pw.as_json, "Emit JSON instead of CSV");
    power->add_option("--threads", pw.threads, "Worker threads (0 = auto)");

    std::string plot_report, plot_what = "curves", plot_out;
    auto* plot = app.add_subcommand("plot-data", "Emit CSV plot data from a report");
    plot->add_option("report", plot_report, "Report JSON from analyze or power --json")
        ->required();
    plot->add_option("--what", plot_what, "curves or power");

    std::string an_out, pw_out;
    analyze->add_option("--out", an_out, "Write report to file instead of stdout");
    power->add_option("--out", pw_out, "Write output to file instead of stdout");
    plot->add_option("--out", plot_out, "Write output to file instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*analyze) {
            an.out = an_out;
            if (*delta_opt) an.delta = delta_val;
            if (*pv_opt) an.pooled_variance_override = pv_override;
            return run_analyze(an);
        }
        if (*power) {
            pw.out = pw_out;
            return run_power(pw);
        }
        return run_plot_data(plot_report, plot_what, plot_out);
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
