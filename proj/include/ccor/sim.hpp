#pragma once

// Monte Carlo comparison of correlation-corrected GLS against WLS/OLS when
// every exposure group shares one reference group. Group means are drawn
// from their exact sampling distributions, the contrasts eta_k share the
// reference draw, and each replication is fitted with the true covariance
// (GLS) and without it (WLS/OLS).
//
// Randomness: SplitMix64, one stream per replication derived from
// (seed, replication index); normals via Box-Muller. Platform-stable given
// IEEE doubles, so identical seeds give byte-identical summaries.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ccor/linalg.hpp"
#include "ccor/trend.hpp"
#include "ccor/types.hpp"

namespace ccor {
namespace sim {

struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t s) : state(s) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    double uniform() {   // in (0, 1)
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }
    double normal() {    // Box-Muller, one normal per two uniforms
        const double u = uniform();
        const double v = uniform();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.14159265358979323846 * v);
    }
};

inline SplitMix64 replication_stream(std::uint64_t seed, std::uint64_t replication) {
    SplitMix64 seeder(seed ^ (0xD1B54A32D192ED03ull * (replication + 1)));
    return SplitMix64(seeder.next());
}

struct SimConfig {
    double n0 = 1.0;                               // reference group size
    std::vector<double> group_sizes = {10, 10, 10, 10};
    double beta_true = 1.0;
    std::vector<double> sigma = {1, 1, 1, 1, 1};   // reference first
    std::vector<double> exposures = {1, 2, 3, 4};
    int replications = 5000;
    std::uint64_t seed = 0;
    bool keep_samples = false;
};

struct SimSummary {
    double mean_gls = 0.0, mean_wls = 0.0, mean_ols = 0.0;
    double var_gls = 0.0, var_wls = 0.0, var_ols = 0.0;
    std::vector<std::array<double, 3>> samples;   // (gls, wls, ols) when kept
};

inline void validate_config(const SimConfig& c) {
    std::vector<ValidationError::Violation> errs;
    const std::size_t k = c.group_sizes.size();
    if (k < 1) errs.push_back({"LengthMismatch", "at least one exposure group", -1});
    if (c.exposures.size() != k)
        errs.push_back({"LengthMismatch", "exposures must match group_sizes", -1});
    if (c.sigma.size() != k + 1)
        errs.push_back({"LengthMismatch", "sigma needs one entry per group, reference first", -1});
    if (!(c.n0 >= 1.0)) errs.push_back({"NonPositiveCount", "n0 must be >= 1", -1});
    for (double g : c.group_sizes)
        if (!(g >= 1.0)) errs.push_back({"NonPositiveCount", "group sizes must be >= 1", -1});
    for (double s : c.sigma)
        if (!(s >= 0.0)) errs.push_back({"NonPositiveCount", "sigma must be >= 0", -1});
    if (c.replications < 1) errs.push_back({"NonPositiveCount", "replications must be >= 1", -1});
    if (!errs.empty()) throw ValidationError(std::move(errs));
}

// True covariance of the contrasts: off-diagonal sigma0^2/n0, diagonal adds
// the group's own sigma_k^2/n_k.
inline Matrix contrast_covariance(const SimConfig& c) {
    const std::size_t k = c.group_sizes.size();
    const double ref = c.sigma[0] * c.sigma[0] / c.n0;
    Matrix C(k, k, ref);
    for (std::size_t i = 0; i < k; ++i)
        C(i, i) = ref + c.sigma[i + 1] * c.sigma[i + 1] / c.group_sizes[i];
    return C;
}

inline SimSummary run_trend_simulation(const SimConfig& config) {
    validate_config(config);
    const std::size_t k = config.group_sizes.size();
    const Matrix C = contrast_covariance(config);
    std::vector<double> diagC(k);
    for (std::size_t i = 0; i < k; ++i) diagC[i] = C(i, i);

    SimSummary out;
    if (config.keep_samples) out.samples.reserve(config.replications);
    double s_g = 0, s_w = 0, s_o = 0, q_g = 0, q_w = 0, q_o = 0;

    std::vector<double> eta(k);
    for (int rep = 0; rep < config.replications; ++rep) {
        SplitMix64 rng = replication_stream(config.seed, static_cast<std::uint64_t>(rep));
        const double mu0_hat = config.sigma[0] / std::sqrt(config.n0) * rng.normal();
        for (std::size_t i = 0; i < k; ++i) {
            const double mu = config.beta_true * config.exposures[i];
            const double se = config.sigma[i + 1] / std::sqrt(config.group_sizes[i]);
            eta[i] = (mu + se * rng.normal()) - mu0_hat;
        }
        const double bg = trend::gls_fit(config.exposures, eta, C).beta;
        const double bw = trend::wls_fit(config.exposures, eta, diagC).beta;
        const double bo = trend::ols_fit(config.exposures, eta).beta;
        s_g += bg; s_w += bw; s_o += bo;
        q_g += bg * bg; q_w += bw * bw; q_o += bo * bo;
        if (config.keep_samples) out.samples.push_back({bg, bw, bo});
    }

    const double r = static_cast<double>(config.replications);
    out.mean_gls = s_g / r;
    out.mean_wls = s_w / r;
    out.mean_ols = s_o / r;
    out.var_gls = q_g / r - out.mean_gls * out.mean_gls;
    out.var_wls = q_w / r - out.mean_wls * out.mean_wls;
    out.var_ols = q_o / r - out.mean_ols * out.mean_ols;
    return out;
}

// Histogram with shared equal-width bins, for external plotting.
struct Histogram {
    std::vector<double> edges;     // size bins+1
    std::vector<long> counts_gls;
    std::vector<long> counts_ols;
};

inline Histogram histogram(const SimSummary& s, int bins = 40) {
    Histogram h;
    if (s.samples.empty() || bins < 1) return h;
    double lo = s.samples[0][0], hi = lo;
    for (const auto& row : s.samples) {
        lo = std::min({lo, row[0], row[2]});
        hi = std::max({hi, row[0], row[2]});
    }
    if (!(hi > lo)) hi = lo + 1.0;
    h.edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b)
        h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
    h.counts_gls.assign(bins, 0);
    h.counts_ols.assign(bins, 0);
    const double w = (hi - lo) / bins;
    for (const auto& row : s.samples) {
        int bg = std::min(bins - 1, static_cast<int>((row[0] - lo) / w));
        int bo = std::min(bins - 1, static_cast<int>((row[2] - lo) / w));
        ++h.counts_gls[bg];
        ++h.counts_ols[bo];
    }
    return h;
}

}  // namespace sim
}  // namespace ccor
