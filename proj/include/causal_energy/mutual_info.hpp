#pragma once

#include "causal_energy/timeseries.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ce {

/// Digamma for x > 0: recurrence up to x >= 6, then the asymptotic series.
double digamma(double x);

struct KsgOptions {
    int k = 4;
    std::uint64_t seed = 42;
    /// Jitter amplitude as a fraction of each marginal's standard deviation.
    double jitter = 1e-10;
};

/// KSG (algorithm 1) mutual information in nats, max-norm neighbourhoods.
/// Ties are broken by a deterministic uniform jitter whose stream is keyed on
/// the column contents, so swapping x and y gives the bitwise-same estimate.
double ksg_mi(std::span<const double> x, std::span<const double> y, const KsgOptions& options = {});

struct MIScore {
    std::string target;
    std::string factor;
    double value = 0.0;
    std::size_t n = 0;
    int k = 0;
};

struct MICell {
    std::string target;
    std::string factor;
    std::optional<MIScore> score;
    std::string error;  // set when the cell is unavailable
};

inline constexpr std::size_t kMinMIPairs = 100;

/// Target-major table, one cell per (target, factor) in the given orders.
/// Cells are independent and may be computed on `jobs` threads.
std::vector<MICell> mi_matrix(const SeriesFrame& frame, const std::vector<std::string>& targets,
                              const std::vector<std::string>& factors, const KsgOptions& options = {},
                              unsigned jobs = 1);

enum class SelectionRule {
    /// Smallest top-ranked prefix holding >= quantile of the clamped MI mass.
    CumulativeShare,
    /// Every factor whose score is >= the quantile-th percentile of the scores.
    PercentileThreshold,
};

struct SelectionResult {
    std::string target;
    std::vector<MIScore> ranked;
    std::set<std::string> selected;
    double coverage = 0.0;
    bool fell_back = false;  // all scores <= 0: only the forced set is returned
};

SelectionResult select_factors(std::vector<MIScore> scores, double quantile,
                               const std::set<std::string>& forced = {},
                               SelectionRule rule = SelectionRule::CumulativeShare);

}  // namespace ce
