#include "doseadapt/study_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace doseadapt {

std::vector<double> StudySummaries::means() const {
    std::vector<double> m;
    m.reserve(arms.size());
    for (const auto& a : arms) m.push_back(a.mean);
    return m;
}

std::vector<int> StudySummaries::sizes() const {
    std::vector<int> n;
    n.reserve(arms.size());
    for (const auto& a : arms) n.push_back(a.n);
    return n;
}

std::vector<double> StudySummaries::doses() const {
    std::vector<double> d;
    d.reserve(arms.size());
    for (const auto& a : arms) d.push_back(a.dose);
    return d;
}

double pooled_variance(std::span<const ArmSummary> arms) {
    const std::size_t k = arms.size();
    long total_n = 0;
    double ss = 0.0;
    for (const auto& a : arms) {
        if (a.n < 1) throw std::invalid_argument("pooled_variance: arm with n < 1");
        total_n += a.n;
        ss += (a.n - 1) * a.sd * a.sd;
    }
    if (total_n <= static_cast<long>(k))
        throw std::invalid_argument("pooled_variance: total sample size must exceed arm count");
    return ss / static_cast<double>(total_n - static_cast<long>(k));
}

GroupedResponses group_by_arm(const std::vector<SubjectRecord>& records) {
    // Key on arm index; verify each arm carries a single dose.
    std::map<int, std::pair<double, std::vector<double>>> arms;
    for (const auto& r : records) {
        if (!std::isfinite(r.response))
            throw std::invalid_argument("non-finite response value");
        auto [it, inserted] = arms.try_emplace(r.arm_index, r.dose, std::vector<double>{});
        if (!inserted && it->second.first != r.dose)
            throw std::invalid_argument("inconsistent dose within one arm");
        it->second.second.push_back(r.response);
    }
    std::vector<std::pair<double, std::vector<double>>> ordered;
    ordered.reserve(arms.size());
    for (auto& [idx, arm] : arms) ordered.push_back(std::move(arm));
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    GroupedResponses out;
    for (auto& [dose, resp] : ordered) {
        out.doses.push_back(dose);
        out.responses.push_back(std::move(resp));
    }
    return out;
}

StudySummaries summarize(const std::vector<SubjectRecord>& records) {
    GroupedResponses grouped = group_by_arm(records);
    const std::size_t k = grouped.doses.size();
    if (k < 3) throw std::invalid_argument("summarize: at least 3 arms required");
    bool placebo = false;
    for (std::size_t i = 0; i + 1 < k; ++i)
        if (grouped.doses[i] == grouped.doses[i + 1])
            throw std::invalid_argument("summarize: duplicate dose across arms");
    std::vector<ArmSummary> arms;
    arms.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& resp = grouped.responses[i];
        if (resp.size() < 2)
            throw std::invalid_argument("summarize: arm with fewer than 2 subjects");
        if (grouped.doses[i] == 0.0) placebo = true;
        double sum = 0.0;
        for (double v : resp) sum += v;
        const double mean = sum / static_cast<double>(resp.size());
        double ss = 0.0;
        for (double v : resp) ss += (v - mean) * (v - mean);
        arms.push_back({grouped.doses[i], static_cast<int>(resp.size()), mean,
                        std::sqrt(ss / static_cast<double>(resp.size() - 1))});
    }
    if (!placebo) throw std::invalid_argument("summarize: no placebo (dose 0) arm");
    const double s2 = pooled_variance(arms);
    return {std::move(arms), s2};
}

StudySummaries summaries_from_arms(std::vector<ArmSummary> arms) {
    std::stable_sort(arms.begin(), arms.end(),
                     [](const ArmSummary& a, const ArmSummary& b) { return a.dose < b.dose; });
    double s2 = pooled_variance(arms);
    return {std::move(arms), s2};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trim_lower(std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c); };
    while (!s.empty() && issp(s.front())) s.erase(s.begin());
    while (!s.empty() && issp(s.back())) s.pop_back();
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

double parse_number(const std::string& field, int line_no, const char* what) {
    const char* begin = field.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    while (end && *end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
    if (end == begin || *end != '\0') {
        std::ostringstream msg;
        msg << "row " << line_no << ": cannot parse " << what << " value '" << field << "'";
        throw std::invalid_argument(msg.str());
    }
    return v;
}

}  // namespace

std::vector<SubjectRecord> load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty file: " + path);
    auto header = split_csv_line(line);
    int col_dose = -1, col_resp = -1, col_arm = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string h = trim_lower(header[i]);
        if (h == "dose") col_dose = static_cast<int>(i);
        else if (h == "response" || h == "resp") col_resp = static_cast<int>(i);
        else if (h == "arm") col_arm = static_cast<int>(i);
    }
    if (col_dose < 0 || col_resp < 0)
        throw std::invalid_argument(path + ": header must name 'dose' and 'response' columns");

    struct Row { double arm_key; double dose; double response; };
    std::vector<Row> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_lower(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            std::ostringstream msg;
            msg << "row " << line_no << ": expected " << header.size()
                << " fields, got " << fields.size();
            throw std::invalid_argument(msg.str());
        }
        Row r{};
        r.dose = parse_number(fields[col_dose], line_no, "dose");
        r.response = parse_number(fields[col_resp], line_no, "response");
        r.arm_key = col_arm >= 0 ? parse_number(fields[col_arm], line_no, "arm") : r.dose;
        if (r.dose < 0.0) {
            std::ostringstream msg;
            msg << "row " << line_no << ": negative dose";
            throw std::invalid_argument(msg.str());
        }
        rows.push_back(r);
    }

    // Assign 1-based arm indices in ascending dose order.
    std::map<double, std::pair<int, double>> arm_of_key;  // key -> (index, dose)
    for (const auto& r : rows) {
        auto [it, inserted] = arm_of_key.try_emplace(r.arm_key, 0, r.dose);
        if (!inserted && it->second.second != r.dose)
            throw std::invalid_argument("inconsistent dose within one arm");
    }
    std::vector<std::pair<double, double>> by_dose;  // (dose, key)
    for (const auto& [key, v] : arm_of_key) by_dose.emplace_back(v.second, key);
    std::stable_sort(by_dose.begin(), by_dose.end());
    for (std::size_t i = 0; i < by_dose.size(); ++i)
        arm_of_key[by_dose[i].second].first = static_cast<int>(i) + 1;

    std::vector<SubjectRecord> records;
    records.reserve(rows.size());
    for (const auto& r : rows)
        records.push_back({arm_of_key[r.arm_key].first, r.dose, r.response});
    return records;
}

std::vector<ArmSummary> load_summary_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty file: " + path);
    auto header = split_csv_line(line);
    int col_dose = -1, col_n = -1, col_mean = -1, col_sd = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string h = trim_lower(header[i]);
        if (h == "dose") col_dose = static_cast<int>(i);
        else if (h == "n") col_n = static_cast<int>(i);
        else if (h == "mean") col_mean = static_cast<int>(i);
        else if (h == "sd") col_sd = static_cast<int>(i);
    }
    if (col_dose < 0 || col_n < 0 || col_mean < 0 || col_sd < 0)
        throw std::invalid_argument(path + ": header must name dose,n,mean,sd columns");
    std::vector<ArmSummary> arms;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_lower(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            std::ostringstream msg;
            msg << "row " << line_no << ": expected " << header.size()
                << " fields, got " << fields.size();
            throw std::invalid_argument(msg.str());
        }
        ArmSummary a{};
        a.dose = parse_number(fields[col_dose], line_no, "dose");
        a.n = static_cast<int>(parse_number(fields[col_n], line_no, "n"));
        a.mean = parse_number(fields[col_mean], line_no, "mean");
        a.sd = parse_number(fields[col_sd], line_no, "sd");
        if (a.n < 1 || a.sd < 0.0) {
            std::ostringstream msg;
            msg << "row " << line_no << ": invalid n or sd";
            throw std::invalid_argument(msg.str());
        }
        arms.push_back(a);
    }
    return arms;
}

}  // namespace doseadapt
