#pragma once

#include "causal_energy/forecaster.hpp"
#include "causal_energy/lstm.hpp"
#include "causal_energy/prophet.hpp"
#include "causal_energy/timeseries.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ce {

enum class ExoPolicy { Observed, Frozen };

std::optional<ExoPolicy> parse_exo_policy(std::string_view name);
const char* to_string(ExoPolicy policy) noexcept;

struct InterventionConfig {
    Date anchor = make_date(2022, 2, 24);
    std::optional<Date> horizon_end;  // defaults to the frame's last date
    BaseModel base = BaseModel::Lstm;
    ExoPolicy exo = ExoPolicy::Observed;
    std::set<std::string> freeze;  // columns held at their last pre-anchor value regardless of `exo`
    int lag = 7;
    std::uint64_t seed = 42;
    std::string war_column = "War";
    std::size_t min_pre_anchor_samples = 730;  // two years of daily samples
    TrainConfig train;
    ProphetConfig prophet;
};

struct DatedSeries {
    std::vector<Date> dates;
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const noexcept { return dates.size(); }
};

ForecasterFactory default_factory(const InterventionConfig& config, std::string_view stage);

/// Observed target values on [anchor, horizon].
DatedSeries actual_series(const SeriesFrame& frame, const std::string& sector, const InterventionConfig& config);

/// Model trained on every sample with the war dummy among its inputs;
/// one-step forecasts from observed windows on [anchor, horizon].
DatedSeries factual_forecast(const SeriesFrame& frame, const std::string& sector,
                             const std::vector<std::string>& controls, const InterventionConfig& config,
                             const ForecasterFactory& factory = {});

/// Samples dated strictly before the anchor, war dummy excluded.
SupervisedSet counterfactual_training_set(const SeriesFrame& frame, const std::string& sector,
                                          const std::vector<std::string>& controls,
                                          const InterventionConfig& config);

/// Recursive multi-step rollout of `model` over [start, end]: predictions feed
/// back into the target's own lags, covariates follow `policy`/`freeze`.
/// Values before `start` come from the frame, gaps carried forward.
DatedSeries rollout(const Forecaster& model, const SeriesFrame& frame, const std::string& target, Date start,
                    Date end, ExoPolicy policy, const std::set<std::string>& freeze = {});

/// Model trained on pre-anchor data only, rolled forward from the anchor.
DatedSeries counterfactual_forecast(const SeriesFrame& frame, const std::string& sector,
                                    const std::vector<std::string>& controls, const InterventionConfig& config,
                                    const ForecasterFactory& factory = {});

struct MonthlyRow {
    std::chrono::year_month month;
    std::size_t days = 0;
    double actual = 0.0;
    double factual = 0.0;
    double counterfactual = 0.0;
    double delta_war = 0.0;    // factual - actual
    double delta_nowar = 0.0;  // counterfactual - actual
    std::optional<double> delta_war_pct;
    std::optional<double> delta_nowar_pct;
};

struct CounterfactualReport {
    std::string sector;
    std::vector<MonthlyRow> rows;
    std::vector<std::chrono::year_month> omitted;  // fewer than min_days jointly observed days
};

inline constexpr std::size_t kMinDaysPerMonth = 15;

CounterfactualReport monthly_deltas(const std::string& sector, const DatedSeries& actual,
                                    const DatedSeries& factual, const DatedSeries& counterfactual,
                                    std::size_t min_days = kMinDaysPerMonth);

std::string format_month(std::chrono::year_month ym);

}  // namespace ce
