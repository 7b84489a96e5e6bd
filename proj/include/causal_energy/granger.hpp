#pragma once

#include "causal_energy/forecaster.hpp"
#include "causal_energy/lstm.hpp"
#include "causal_energy/prophet.hpp"
#include "causal_energy/timeseries.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ce {

enum class Alternative { Less, Greater, TwoSided };
enum class WilcoxonMethod { Auto, Exact, Normal };

/// Largest zero-dropped sample size handled by the exact null distribution.
inline constexpr std::size_t kWilcoxonExactMax = 25;

struct WilcoxonResult {
    double statistic = 0.0;  // W = sum of ranks of positive differences a - b
    double p_value = 1.0;
    std::size_t n = 0;       // pairs left after dropping zero differences
    bool degenerate = false; // every difference was zero
    bool exact = false;
};

/// Paired signed-rank test on d = a - b. Zero differences are dropped, ties
/// get midranks. Exact null (all 2^n sign assignments) for n <= 25, otherwise
/// normal approximation with tie-corrected variance and continuity correction.
/// Alternative::Less asks whether a tends to lie below b.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    Alternative alternative = Alternative::Less,
                                    WilcoxonMethod method = WilcoxonMethod::Auto);

/// Builds a forecaster factory for one training seed.
using ModelBuilder = std::function<ForecasterFactory(std::uint64_t seed)>;

struct GrangerConfig {
    BaseModel base = BaseModel::Lstm;
    int lag = 7;
    double test_fraction = 0.2;
    std::uint64_t seed = 42;
    int seeds = 1;  // > 1 reruns with derived seeds and reports the median p
    TrainConfig train;
    ProphetConfig prophet;

    void validate() const;
};

ModelBuilder default_model_builder(const GrangerConfig& config);

struct GrangerResult {
    std::string target;
    std::string candidate;
    std::string base_model;
    std::size_t n_pairs = 0;
    double statistic = 0.0;
    double p_value = 1.0;
    double mae_restricted = 0.0;
    double mae_augmented = 0.0;
    std::uint64_t seed = 0;
    std::string status = "ok";
    std::vector<double> seed_p_values;
    std::vector<Date> test_dates;

    [[nodiscard]] bool ok() const noexcept { return status.rfind("failed", 0) != 0; }
};

/// Keeps only the dates both sets share, then asserts equality; throws
/// alignment-error listing offending dates if the two still disagree.
void align_sets(SupervisedSet& restricted, SupervisedSet& augmented);
void check_aligned(const SupervisedSet& restricted, const SupervisedSet& augmented);

/// Restricted model on (y lags, Z), augmented on (y lags, Z, x); identical seed
/// and chronological split; one-sided Wilcoxon on paired absolute test errors
/// (augmented < restricted).
GrangerResult granger_test(const SeriesFrame& frame, const std::string& target, const std::string& candidate,
                           const std::vector<std::string>& controls, const GrangerConfig& config,
                           const ModelBuilder& builder = {});

/// One result per (target, candidate), target-major, candidates lexicographic.
/// Controls for a cell are controls[target] minus the candidate. Cell failures
/// are recorded in `status`, never thrown.
std::vector<GrangerResult> granger_matrix(const SeriesFrame& frame, const std::vector<std::string>& targets,
                                          const std::map<std::string, std::vector<std::string>>& candidates,
                                          const std::map<std::string, std::vector<std::string>>& controls,
                                          const GrangerConfig& config, unsigned jobs = 1,
                                          const ModelBuilder& builder = {});

}  // namespace ce
