#include "causal_energy/prophet.hpp"

#include "causal_energy/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ce {

namespace {

double day_number(Date d) { return static_cast<double>(d.time_since_epoch().count()); }

std::size_t design_cols(const ProphetConfig& c, std::size_t regressors) {
    return 2 + static_cast<std::size_t>(c.changepoints) + 2 * static_cast<std::size_t>(c.yearly_order) +
           2 * static_cast<std::size_t>(c.weekly_order) + regressors;
}

void fourier_row(double day, double period, int order, double* out) {
    for (int n = 1; n <= order; ++n) {
        const double angle = 2.0 * std::numbers::pi * n * day / period;
        out[2 * (n - 1)] = std::sin(angle);
        out[2 * (n - 1) + 1] = std::cos(angle);
    }
}

}  // namespace

void ProphetConfig::validate() const {
    if (changepoints < 0 || yearly_order < 0 || weekly_order < 0) {
        fail(ErrorCode::InvalidArgument, "prophet orders and changepoint count must be >= 0");
    }
    if (!(lambda_trend >= 0.0) || !(lambda_reg >= 0.0)) {
        fail(ErrorCode::InvalidArgument, "prophet penalties must be >= 0");
    }
    if (!(changepoint_range > 0.0 && changepoint_range <= 1.0)) {
        fail(ErrorCode::InvalidArgument, "changepoint range must lie in (0, 1]");
    }
}

DesignMatrix design_matrix(std::span<const Date> dates, const NamedColumns& regressors,
                           const ProphetConfig& config, const ProphetScaling& scaling) {
    const std::size_t R = scaling.regressors.size();
    std::vector<const Column*> reg_cols(R);
    for (std::size_t r = 0; r < R; ++r) {
        auto it = std::find_if(regressors.begin(), regressors.end(),
                               [&](const auto& c) { return c.first == scaling.regressors[r]; });
        if (it == regressors.end()) {
            fail(ErrorCode::InvalidArgument, "missing regressor '" + scaling.regressors[r] + "'");
        }
        if (it->second.size() != dates.size()) {
            fail(ErrorCode::InvalidArgument, "regressor '" + it->first + "' length differs from dates");
        }
        reg_cols[r] = &it->second;
    }

    DesignMatrix X;
    X.rows = dates.size();
    X.cols = design_cols(config, R);
    X.values.assign(X.rows * X.cols, 0.0);
    X.labels = {"intercept", "t"};
    for (std::size_t i = 0; i < scaling.changepoints.size(); ++i) X.labels.push_back("cp" + std::to_string(i));
    for (int n = 1; n <= config.yearly_order; ++n) {
        X.labels.push_back("yearly_sin" + std::to_string(n));
        X.labels.push_back("yearly_cos" + std::to_string(n));
    }
    for (int n = 1; n <= config.weekly_order; ++n) {
        X.labels.push_back("weekly_sin" + std::to_string(n));
        X.labels.push_back("weekly_cos" + std::to_string(n));
    }
    for (const auto& r : scaling.regressors) X.labels.push_back(r);

    const std::size_t ncp = scaling.changepoints.size();
    for (std::size_t i = 0; i < X.rows; ++i) {
        double* row = X.values.data() + i * X.cols;
        const double t = (day_number(dates[i]) - day_number(scaling.start)) / scaling.span_days;
        row[0] = 1.0;
        row[1] = t;
        for (std::size_t c = 0; c < ncp; ++c) row[2 + c] = std::max(0.0, t - scaling.changepoints[c]);
        std::size_t at = 2 + ncp;
        fourier_row(day_number(dates[i]), kYearPeriod, config.yearly_order, row + at);
        at += 2 * static_cast<std::size_t>(config.yearly_order);
        fourier_row(day_number(dates[i]), kWeekPeriod, config.weekly_order, row + at);
        at += 2 * static_cast<std::size_t>(config.weekly_order);
        for (std::size_t r = 0; r < R; ++r) {
            const auto& v = (*reg_cols[r])[i];
            if (!v) {
                fail(ErrorCode::InvalidArgument, "regressor '" + scaling.regressors[r] + "' missing on " +
                                                     format_date(dates[i]));
            }
            row[at + r] = (*v - scaling.regressor_mean[r]) / scaling.regressor_sd[r];
        }
    }
    return X;
}

ProphetModel::ProphetModel(ProphetConfig config, ProphetScaling scaling, ProphetParams params)
    : config_(std::move(config)), scaling_(std::move(scaling)), params_(std::move(params)) {
    if (params_.deltas.size() != scaling_.changepoints.size() ||
        params_.yearly.size() != 2 * static_cast<std::size_t>(config_.yearly_order) ||
        params_.weekly.size() != 2 * static_cast<std::size_t>(config_.weekly_order) ||
        params_.betas.size() != scaling_.regressors.size()) {
        fail(ErrorCode::InvalidArgument, "prophet parameter shapes do not match the config");
    }
}

double ProphetModel::slope_per_day() const noexcept {
    return params_.slope * scaling_.y_scale / scaling_.span_days;
}

std::vector<double> ProphetModel::coefficients() const {
    std::vector<double> beta{params_.offset, params_.slope};
    beta.insert(beta.end(), params_.deltas.begin(), params_.deltas.end());
    beta.insert(beta.end(), params_.yearly.begin(), params_.yearly.end());
    beta.insert(beta.end(), params_.weekly.begin(), params_.weekly.end());
    beta.insert(beta.end(), params_.betas.begin(), params_.betas.end());
    return beta;
}

std::vector<double> ProphetModel::predict(std::span<const Date> dates, const NamedColumns& regressors) const {
    const auto X = design_matrix(dates, regressors, config_, scaling_);
    const auto beta = coefficients();
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < X.cols; ++c) s += X.at(i, c) * beta[c];
        out[i] = s * scaling_.y_scale;
    }
    return out;
}

ProphetComponents ProphetModel::components(std::span<const Date> dates, const NamedColumns& regressors) const {
    const auto X = design_matrix(dates, regressors, config_, scaling_);
    const auto beta = coefficients();
    const std::size_t trend_end = 2 + params_.deltas.size();
    const std::size_t yearly_end = trend_end + params_.yearly.size();
    const std::size_t weekly_end = yearly_end + params_.weekly.size();
    ProphetComponents comp;
    for (auto* v : {&comp.trend, &comp.yearly, &comp.weekly, &comp.regressors}) v->assign(X.rows, 0.0);
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t c = 0; c < X.cols; ++c) {
            const double term = X.at(i, c) * beta[c] * scaling_.y_scale;
            if (c < trend_end) comp.trend[i] += term;
            else if (c < yearly_end) comp.yearly[i] += term;
            else if (c < weekly_end) comp.weekly[i] += term;
            else comp.regressors[i] += term;
        }
    }
    return comp;
}

ProphetModel fit_prophet(std::span<const double> y, std::span<const Date> dates, const NamedColumns& regressors,
                         const ProphetConfig& config) {
    config.validate();
    const std::size_t n = y.size();
    if (dates.size() != n) fail(ErrorCode::InvalidArgument, "prophet: y and dates lengths differ");
    const std::size_t cols = design_cols(config, regressors.size());
    if (n < 2 * cols) {
        fail(ErrorCode::InvalidArgument, "prophet: " + std::to_string(n) + " observations < 2 x " +
                                             std::to_string(cols) + " design columns");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (dates[i] <= dates[i - 1]) fail(ErrorCode::InvalidArgument, "prophet: dates must increase");
    }

    ProphetScaling s;
    s.start = dates.front();
    s.span_days = std::max(1.0, day_number(dates.back()) - day_number(dates.front()));
    double ymax = 0.0;
    for (double v : y) {
        if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "prophet: non-finite target");
        ymax = std::max(ymax, std::abs(v));
    }
    s.y_scale = ymax > 0.0 ? ymax : 1.0;
    // Changepoints at evenly spaced history positions inside the eligible prefix.
    const auto last = static_cast<double>(n - 1) * config.changepoint_range;
    for (int c = 1; c <= config.changepoints; ++c) {
        const auto idx = static_cast<std::size_t>(std::llround(last * c / (config.changepoints + 1)));
        s.changepoints.push_back((day_number(dates[idx]) - day_number(s.start)) / s.span_days);
    }
    for (const auto& [name, col] : regressors) {
        double sum = 0.0;
        for (const auto& v : col) {
            if (!v) fail(ErrorCode::InvalidArgument, "regressor '" + name + "' has missing values");
            sum += *v;
        }
        const double mean = sum / static_cast<double>(col.size());
        double ss = 0.0;
        for (const auto& v : col) ss += (*v - mean) * (*v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(col.size() - 1));
        s.regressors.push_back(name);
        s.regressor_mean.push_back(mean);
        s.regressor_sd.push_back(sd > 0.0 ? sd : 1.0);
    }

    const auto D = design_matrix(dates, regressors, config, s);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
        D.values.data(), static_cast<Eigen::Index>(D.rows), static_cast<Eigen::Index>(D.cols));
    Eigen::VectorXd ys(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) ys[static_cast<Eigen::Index>(i)] = y[i] / s.y_scale;

    Eigen::VectorXd penalty = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D.cols));
    const std::size_t trend_end = 2 + s.changepoints.size();
    for (std::size_t c = 2; c < D.cols; ++c) {
        penalty[static_cast<Eigen::Index>(c)] = c < trend_end ? config.lambda_trend : config.lambda_reg;
    }
    Eigen::MatrixXd A = X.transpose() * X;
    A.diagonal() += penalty;
    const Eigen::VectorXd rhs = X.transpose() * ys;
    const Eigen::LLT<Eigen::MatrixXd> llt(A);
    bool singular = llt.info() != Eigen::Success;
    if (!singular) {
        const auto diag = llt.matrixLLT().diagonal();
        const double max_pivot = diag.cwiseAbs2().maxCoeff();
        singular = !(diag.cwiseAbs2().minCoeff() > 1e-12 * max_pivot);
    }
    if (singular) fail(ErrorCode::SingularSystem, "prophet: normal equations are not positive definite");
    Eigen::VectorXd beta = llt.solve(rhs);
    beta += llt.solve(rhs - A * beta);  // one refinement step

    ProphetParams p;
    std::size_t at = 0;
    auto take = [&](std::size_t count) {
        std::vector<double> v(count);
        for (auto& x : v) x = beta[static_cast<Eigen::Index>(at++)];
        return v;
    };
    p.offset = take(1)[0];
    p.slope = take(1)[0];
    p.deltas = take(s.changepoints.size());
    p.yearly = take(2 * static_cast<std::size_t>(config.yearly_order));
    p.weekly = take(2 * static_cast<std::size_t>(config.weekly_order));
    p.betas = take(s.regressors.size());
    for (double v : beta) {
        if (!std::isfinite(v)) fail(ErrorCode::SingularSystem, "prophet: non-finite solution");
    }
    return ProphetModel(config, std::move(s), std::move(p));
}

std::string window_regressor_name(const std::string& feature, int lag) {
    return feature + "@" + std::to_string(lag);
}

namespace {

NamedColumns window_regressors(const std::vector<std::string>& features, int lag,
                               const std::vector<const std::vector<double>*>& windows) {
    const std::size_t D = features.size();
    const auto tau = static_cast<std::size_t>(lag);
    NamedColumns cols;
    for (std::size_t r = 0; r < tau; ++r) {
        for (std::size_t d = 0; d < D; ++d) {
            Column c(windows.size());
            for (std::size_t i = 0; i < windows.size(); ++i) c[i] = (*windows[i])[r * D + d];
            cols.emplace_back(window_regressor_name(features[d], lag - static_cast<int>(r)), std::move(c));
        }
    }
    return cols;
}

}  // namespace

void ProphetModel::bind_window_features(std::vector<std::string> features, int lag) {
    window_features_ = std::move(features);
    window_lag_ = lag;
}

double ProphetModel::predict(std::span<const double> window, Date date) const {
    if (window.size() != window_features_.size() * static_cast<std::size_t>(window_lag_)) {
        fail(ErrorCode::InvalidArgument, "window shape does not match the prophet model");
    }
    const std::vector<double> w(window.begin(), window.end());
    const auto regs = window_regressors(window_features_, window_lag_, {&w});
    const Date d[] = {date};
    return predict(std::span<const Date>(d), regs)[0];
}

ProphetModel fit_prophet_windows(const SupervisedSet& set, const ProphetConfig& config) {
    std::vector<const std::vector<double>*> windows;
    std::vector<double> y;
    for (const auto& s : set.samples) {
        windows.push_back(&s.window);
        y.push_back(s.target);
    }
    const auto dates = set.dates();
    auto model = fit_prophet(y, dates, window_regressors(set.feature_names, set.lag, windows), config);
    model.bind_window_features(set.feature_names, set.lag);
    return model;
}

ForecasterFactory prophet_factory(ProphetConfig config) {
    return [config](const SupervisedSet& train_set) -> std::unique_ptr<Forecaster> {
        return std::make_unique<ProphetModel>(fit_prophet_windows(train_set, config));
    };
}

std::string ProphetModel::to_json() const {
    using json = nlohmann::json;
    json j{{"format", "causal-energy/prophet"},
           {"format_version", 1},
           {"config",
            {{"changepoints", config_.changepoints},
             {"changepoint_range", config_.changepoint_range},
             {"yearly_order", config_.yearly_order},
             {"weekly_order", config_.weekly_order},
             {"lambda_trend", config_.lambda_trend},
             {"lambda_reg", config_.lambda_reg}}},
           {"scaling",
            {{"start", format_date(scaling_.start)},
             {"span_days", scaling_.span_days},
             {"changepoints", scaling_.changepoints},
             {"y_scale", scaling_.y_scale},
             {"regressors", scaling_.regressors},
             {"regressor_mean", scaling_.regressor_mean},
             {"regressor_sd", scaling_.regressor_sd}}},
           {"params",
            {{"offset", params_.offset},
             {"slope", params_.slope},
             {"deltas", params_.deltas},
             {"yearly", params_.yearly},
             {"weekly", params_.weekly},
             {"betas", params_.betas}}},
           {"window", {{"features", window_features_}, {"lag", window_lag_}}}};
    return j.dump();
}

ProphetModel ProphetModel::from_json(std::string_view text) {
    using json = nlohmann::json;
    try {
        const json j = json::parse(text);
        if (j.at("format") != "causal-energy/prophet" || j.at("format_version") != 1) {
            fail(ErrorCode::InvalidArgument, "not a version-1 prophet model document");
        }
        const auto& c = j.at("config");
        ProphetConfig cfg{c.at("changepoints"), c.at("changepoint_range"), c.at("yearly_order"),
                          c.at("weekly_order"), c.at("lambda_trend"), c.at("lambda_reg")};
        const auto& sj = j.at("scaling");
        ProphetScaling s;
        const auto start = parse_date(sj.at("start").get<std::string>());
        if (!start) fail(ErrorCode::InvalidArgument, "bad start date in prophet model");
        s.start = *start;
        s.span_days = sj.at("span_days");
        s.changepoints = sj.at("changepoints").get<std::vector<double>>();
        s.y_scale = sj.at("y_scale");
        s.regressors = sj.at("regressors").get<std::vector<std::string>>();
        s.regressor_mean = sj.at("regressor_mean").get<std::vector<double>>();
        s.regressor_sd = sj.at("regressor_sd").get<std::vector<double>>();
        const auto& pj = j.at("params");
        ProphetParams p{pj.at("offset"), pj.at("slope"), pj.at("deltas"), pj.at("yearly"), pj.at("weekly"),
                        pj.at("betas")};
        cfg.changepoints = static_cast<int>(s.changepoints.size());
        ProphetModel m(cfg, std::move(s), std::move(p));
        m.bind_window_features(j.at("window").at("features"), j.at("window").at("lag"));
        return m;
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("malformed prophet model: ") + e.what());
    }
}

}  // namespace ce
