#pragma once

#include "causal_energy/forecaster.hpp"
#include "causal_energy/timeseries.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ce {

struct ProphetConfig {
    int changepoints = 25;
    double changepoint_range = 0.8;  // leading fraction of history eligible for changepoints
    int yearly_order = 10;
    int weekly_order = 3;
    double lambda_trend = 1.0;
    double lambda_reg = 0.1;  // Fourier and regressor coefficients

    void validate() const;
};

inline constexpr double kYearPeriod = 365.25;
inline constexpr double kWeekPeriod = 7.0;

using NamedColumns = std::vector<std::pair<std::string, Column>>;

/// Training-time scaling that fixes the design for later prediction.
struct ProphetScaling {
    Date start{};
    double span_days = 1.0;        // t = (date - start) / span_days
    std::vector<double> changepoints;  // scaled times s_i
    double y_scale = 1.0;          // y is divided by max |y|
    std::vector<std::string> regressors;
    std::vector<double> regressor_mean;
    std::vector<double> regressor_sd;
};

struct DesignMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major
    std::vector<std::string> labels;

    [[nodiscard]] double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Columns: intercept, scaled time t, one hinge max(0, t - s_i) per changepoint,
/// yearly then weekly sin/cos pairs (orders 1..N, absolute day count), then
/// standardised regressors. Missing regressor values raise invalid-argument.
DesignMatrix design_matrix(std::span<const Date> dates, const NamedColumns& regressors,
                           const ProphetConfig& config, const ProphetScaling& scaling);

/// Piecewise-linear trend + Fourier seasonality + regressors, in units of y / y_scale.
struct ProphetParams {
    double offset = 0.0;              // m
    double slope = 0.0;               // k, per unit of scaled time
    std::vector<double> deltas;       // changepoint slope adjustments
    std::vector<double> yearly;       // sin/cos interleaved, 2 x order
    std::vector<double> weekly;
    std::vector<double> betas;        // regressor coefficients
};

struct ProphetComponents {
    std::vector<double> trend, yearly, weekly, regressors;
};

class ProphetModel final : public Forecaster {
public:
    ProphetModel() = default;
    ProphetModel(ProphetConfig config, ProphetScaling scaling, ProphetParams params);

    [[nodiscard]] const ProphetParams& params() const noexcept { return params_; }
    [[nodiscard]] const ProphetScaling& scaling() const noexcept { return scaling_; }
    [[nodiscard]] const ProphetConfig& config() const noexcept { return config_; }

    /// Trend value at the first training date, in original units.
    [[nodiscard]] double offset() const noexcept { return params_.offset * scaling_.y_scale; }
    /// Initial trend slope in original units per day.
    [[nodiscard]] double slope_per_day() const noexcept;

    [[nodiscard]] std::vector<double> predict(std::span<const Date> dates, const NamedColumns& regressors) const;
    [[nodiscard]] ProphetComponents components(std::span<const Date> dates, const NamedColumns& regressors) const;

    [[nodiscard]] std::string to_json() const;
    static ProphetModel from_json(std::string_view text);

    // Forecaster view: window entries act as regressors named "<feature>@<lag>".
    void bind_window_features(std::vector<std::string> features, int lag);
    const std::vector<std::string>& feature_names() const override { return window_features_; }
    int lag() const override { return window_lag_; }
    double predict(std::span<const double> window, Date date) const override;
    std::string kind() const override { return "prophet"; }

private:
    [[nodiscard]] std::vector<double> coefficients() const;

    ProphetConfig config_;
    ProphetScaling scaling_;
    ProphetParams params_;
    std::vector<std::string> window_features_;
    int window_lag_ = 0;
};

/// Ridge-penalised least squares (Cholesky on the normal equations); intercept
/// and base slope are unpenalised. Needs >= 2 x design columns observations.
ProphetModel fit_prophet(std::span<const double> y, std::span<const Date> dates, const NamedColumns& regressors,
                         const ProphetConfig& config);

/// Regressor name for window row r (0 = oldest) of feature f: lag = tau - r.
std::string window_regressor_name(const std::string& feature, int lag);

ProphetModel fit_prophet_windows(const SupervisedSet& set, const ProphetConfig& config);
ForecasterFactory prophet_factory(ProphetConfig config);

}  // namespace ce
