#pragma once

// Study document I/O and report emission. The canonical study document is a
// JSON object; a CSV convenience importer handles the common
// one-row-per-exposure-level layout where the first data row is the
// reference level with empty estimate/variance cells.
//
// All emitted numbers are rounded to 10 significant digits so identical
// inputs produce byte-identical outputs.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccor/covariance.hpp"
#include "ccor/sim.hpp"
#include "ccor/trend.hpp"
#include "ccor/types.hpp"

namespace ccor {
namespace io {

using json = nlohmann::json;

inline double round_sig(double x, int digits = 10) {
    if (!std::isfinite(x)) return x;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return std::strtod(buf, nullptr);
}

inline json round_sig(const std::vector<double>& v, int digits = 10) {
    json arr = json::array();
    for (double x : v) arr.push_back(round_sig(x, digits));
    return arr;
}

// ---------------------------------------------------------------------------
// Study documents

inline EffectMeasure measure_from_string(const std::string& s) {
    if (s == "or") return EffectMeasure::odds_ratio;
    if (s == "rr") return EffectMeasure::relative_risk;
    throw ValidationError({{"InvalidMeasure", "measure must be \"or\" or \"rr\", got \"" + s + "\"", -1}});
}

inline json study_to_json(const StudyInput& s) {
    json j;
    j["measure"] = to_string(s.measure);
    if (!s.exposures.empty()) j["exposures"] = round_sig(s.exposures);
    j["log_estimates"] = round_sig(s.log_estimates);
    j["variances"] = round_sig(s.variances);
    if (!s.group_totals.empty()) j["group_totals"] = round_sig(s.group_totals);
    if (s.total_cases) j["total_cases"] = round_sig(*s.total_cases);
    if (s.p) j["p"] = round_sig(*s.p);
    if (s.z) j["z"] = round_sig(*s.z);
    return j;
}

inline StudyInput study_from_json(const json& j) {
    StudyInput s;
    try {
        s.measure = measure_from_string(j.at("measure").get<std::string>());
        s.log_estimates = j.at("log_estimates").get<std::vector<double>>();
        s.variances = j.at("variances").get<std::vector<double>>();
        if (j.contains("exposures")) s.exposures = j["exposures"].get<std::vector<double>>();
        if (j.contains("group_totals")) s.group_totals = j["group_totals"].get<std::vector<double>>();
        if (j.contains("total_cases")) s.total_cases = j["total_cases"].get<double>();
        if (j.contains("p")) s.p = j["p"].get<double>();
        if (j.contains("z")) s.z = j["z"].get<double>();
    } catch (const json::exception& e) {
        throw ValidationError({{"ParseError", e.what(), -1}});
    }
    return s;
}

struct CsvOptions {
    EffectMeasure measure = EffectMeasure::odds_ratio;
    std::optional<double> total_cases;
    std::optional<double> p;
    std::optional<double> z;
    bool estimates_are_ratios = false;  // column holds OR/RR instead of logs
    bool variances_are_se = false;      // column holds standard errors
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') { out.push_back(cur); cur.clear(); }
        else if (ch != '\r') cur += ch;
    }
    out.push_back(cur);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
    }
    return out;
}

}  // namespace detail

// Header: exposure,estimate,variance,subjects  (subjects optional).
// First data row is the reference level; its estimate and variance cells must
// be empty.
inline StudyInput study_from_csv(std::istream& is, const CsvOptions& opts = {}) {
    StudyInput s;
    s.measure = opts.measure;
    s.total_cases = opts.total_cases;
    s.p = opts.p;
    s.z = opts.z;

    std::string line;
    if (!std::getline(is, line))
        throw ValidationError({{"ParseError", "empty CSV input", -1}});
    const auto header = detail::split_csv_line(line);
    int col_exposure = -1, col_estimate = -1, col_variance = -1, col_subjects = -1;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        if (header[c] == "exposure") col_exposure = c;
        else if (header[c] == "estimate") col_estimate = c;
        else if (header[c] == "variance") col_variance = c;
        else if (header[c] == "subjects") col_subjects = c;
    }
    if (col_exposure < 0 || col_estimate < 0 || col_variance < 0)
        throw ValidationError({{"ParseError",
                                "CSV header must contain exposure,estimate,variance", -1}});

    bool first = true;
    std::vector<double> subjects;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const auto f = detail::split_csv_line(line);
        auto cell = [&](int c) -> std::string {
            return c >= 0 && c < static_cast<int>(f.size()) ? f[c] : "";
        };
        const std::string est = cell(col_estimate), var = cell(col_variance);
        if (first) {
            if (!est.empty() || !var.empty())
                throw ValidationError({{"ParseError",
                                        "reference row (first data row) must have empty "
                                        "estimate and variance cells", -1}});
            first = false;
        } else {
            if (est.empty() || var.empty())
                throw ValidationError({{"ParseError",
                                        "non-reference row missing estimate or variance", -1}});
            double e = std::strtod(est.c_str(), nullptr);
            double v = std::strtod(var.c_str(), nullptr);
            if (opts.estimates_are_ratios) {
                if (!(e > 0.0))
                    throw ValidationError({{"NonFiniteEstimate",
                                            "ratio estimates must be positive", -1}});
                e = std::log(e);
            }
            if (opts.variances_are_se) v = v * v;
            s.log_estimates.push_back(e);
            s.variances.push_back(v);
        }
        if (!cell(col_exposure).empty())
            s.exposures.push_back(std::strtod(cell(col_exposure).c_str(), nullptr));
        if (col_subjects >= 0 && !cell(col_subjects).empty())
            subjects.push_back(std::strtod(cell(col_subjects).c_str(), nullptr));
    }
    if (first)
        throw ValidationError({{"ParseError", "CSV has a header but no data rows", -1}});
    if (subjects.size() == s.log_estimates.size() + 1)
        s.group_totals = subjects;
    else if (!subjects.empty())
        throw ValidationError({{"LengthMismatch",
                                "subjects column must be filled for every row when present", -1}});
    return s;
}

inline StudyInput load_study(const std::string& path, const CsvOptions& csv_opts = {}) {
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("cannot open input file: " + path);
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
        return study_from_csv(f, csv_opts);
    json j;
    f >> j;
    StudyInput s = study_from_json(j);
    if (csv_opts.variances_are_se)
        for (auto& v : s.variances) v = v * v;
    return s;
}

// ---------------------------------------------------------------------------
// Result emission

inline json counts_to_json(const PseudoCounts& c, const SolveReport& report) {
    json j;
    j["measure"] = to_string(c.measure);
    j["a0"] = round_sig(c.a0);
    j["b0"] = round_sig(c.b0);
    j["A"] = round_sig(c.A);
    j["B"] = round_sig(c.B);
    j["iterations"] = report.iterations;
    j["residual"] = round_sig(report.final_residual_norm);
    j["termination"] = to_string(report.termination);
    return j;
}

inline PseudoCounts counts_from_json(const json& j) {
    PseudoCounts c;
    c.measure = measure_from_string(j.at("measure").get<std::string>());
    c.a0 = j.at("a0").get<double>();
    c.b0 = j.at("b0").get<double>();
    c.A = j.at("A").get<std::vector<double>>();
    c.B = j.at("B").get<std::vector<double>>();
    return c;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(round_sig(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

inline json covariance_to_json(const covariance::WithinStudyCovariance& c,
                               const std::vector<double>& labels) {
    json j;
    j["labels"] = round_sig(labels);
    j["covariance"] = matrix_to_json(c.matrix);
    j["correlations"] = matrix_to_json(c.correlations);
    j["min_eigenvalue"] = round_sig(c.min_eigenvalue);
    return j;
}

// Row-major CSV with exposure labels as the header.
inline std::string covariance_to_csv(const Matrix& m, const std::vector<double>& labels) {
    std::ostringstream os;
    for (std::size_t j = 0; j < m.cols; ++j) {
        if (j) os << ',';
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.10g", labels.size() == m.cols ? labels[j]
                                                                        : static_cast<double>(j + 1));
        os << buf;
    }
    os << '\n';
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j) os << ',';
            char buf[48];
            std::snprintf(buf, sizeof buf, "%.10g", m(i, j));
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

inline json fit_to_json(const trend::TrendFit& f) {
    json j;
    j["beta"] = round_sig(f.beta);
    j["variance"] = round_sig(f.variance);
    j["method"] = to_string(f.method);
    return j;
}

inline json sim_to_json(const sim::SimConfig& cfg, const sim::SimSummary& s) {
    json j;
    j["replications"] = cfg.replications;
    j["seed"] = cfg.seed;
    j["beta_true"] = round_sig(cfg.beta_true);
    j["mean_gls"] = round_sig(s.mean_gls);
    j["mean_wls"] = round_sig(s.mean_wls);
    j["mean_ols"] = round_sig(s.mean_ols);
    j["var_gls"] = round_sig(s.var_gls);
    j["var_wls"] = round_sig(s.var_wls);
    j["var_ols"] = round_sig(s.var_ols);
    if (!s.samples.empty()) {
        const sim::Histogram h = sim::histogram(s);
        json hist;
        hist["bin_edges"] = round_sig(h.edges);
        hist["counts_gls"] = h.counts_gls;
        hist["counts_ols"] = h.counts_ols;
        j["histogram"] = hist;
    }
    return j;
}

inline std::string samples_to_csv(const sim::SimSummary& s) {
    std::ostringstream os;
    os << "replicate,beta_gls,beta_ols\n";
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g\n", i, s.samples[i][0], s.samples[i][2]);
        os << buf;
    }
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open output file: " + path);
    f << content;
}

}  // namespace io
}  // namespace ccor
