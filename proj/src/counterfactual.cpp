#include "causal_energy/counterfactual.hpp"

#include "causal_energy/error.hpp"
#include "causal_energy/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace ce {

using namespace std::chrono;

std::optional<ExoPolicy> parse_exo_policy(std::string_view name) {
    if (name == "observed") return ExoPolicy::Observed;
    if (name == "frozen") return ExoPolicy::Frozen;
    return std::nullopt;
}

const char* to_string(ExoPolicy policy) noexcept {
    return policy == ExoPolicy::Observed ? "observed" : "frozen";
}

std::string format_month(year_month ym) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(ym.year()), static_cast<unsigned>(ym.month()));
    return buf;
}

ForecasterFactory default_factory(const InterventionConfig& config, std::string_view stage) {
    if (config.base == BaseModel::Prophet) return prophet_factory(config.prophet);
    TrainConfig c = config.train;
    c.seed = derive_seed(config.seed, stage);
    return lstm_factory(c);
}

namespace {

struct Window {
    std::size_t begin;
    std::size_t end;  // inclusive
};

Window evaluation_window(const SeriesFrame& frame, const InterventionConfig& config) {
    if (frame.rows() == 0) fail(ErrorCode::EmptyDataset, "empty frame");
    const auto& idx = frame.index();
    const Date end = config.horizon_end.value_or(idx.back());
    if (config.anchor < idx.front() || config.anchor > idx.back()) {
        fail(ErrorCode::InvalidArgument, "anchor " + format_date(config.anchor) + " outside the frame range " +
                                             format_date(idx.front()) + " .. " + format_date(idx.back()));
    }
    if (end <= config.anchor) {
        fail(ErrorCode::InvalidArgument, "horizon end " + format_date(end) + " is not after the anchor " +
                                             format_date(config.anchor));
    }
    if (end > idx.back()) fail(ErrorCode::InvalidArgument, "horizon end beyond the frame");
    const auto b = idx.position(config.anchor), e = idx.position(end);
    if (!b || !e) fail(ErrorCode::InvalidArgument, "anchor/horizon dates not in a contiguous index");
    return {*b, *e};
}

std::vector<std::string> without(const std::vector<std::string>& v, const std::string& a, const std::string& b) {
    std::vector<std::string> out;
    for (const auto& s : v) {
        if (s != a && s != b && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    return out;
}

}  // namespace

DatedSeries actual_series(const SeriesFrame& frame, const std::string& sector, const InterventionConfig& config) {
    const auto w = evaluation_window(frame, config);
    const Column& y = frame.column(sector);
    DatedSeries out;
    for (std::size_t t = w.begin; t <= w.end; ++t) {
        if (y[t]) {
            out.dates.push_back(frame.index()[t]);
            out.values.push_back(*y[t]);
        }
    }
    return out;
}

DatedSeries factual_forecast(const SeriesFrame& frame, const std::string& sector,
                             const std::vector<std::string>& controls, const InterventionConfig& config,
                             const ForecasterFactory& factory) {
    const auto w = evaluation_window(frame, config);
    SeriesFrame f = frame;
    if (!f.has(config.war_column)) {
        Column war(f.rows());
        for (std::size_t i = 0; i < f.rows(); ++i) war[i] = war_dummy(f.index()[i], config.anchor);
        f = f.with_column(config.war_column, std::move(war));
    }
    auto features = without(controls, config.war_column, sector);
    features.push_back(config.war_column);
    const auto set = make_windows(f, sector, features, config.lag);
    const auto model = (factory ? factory : default_factory(config, "factual"))(set);

    const Date first = frame.index()[w.begin], last = frame.index()[w.end];
    DatedSeries out;
    for (const auto& s : set.samples) {
        if (s.date < first || s.date > last) continue;
        out.dates.push_back(s.date);
        out.values.push_back(model->predict(s.window, s.date));
    }
    return out;
}

SupervisedSet counterfactual_training_set(const SeriesFrame& frame, const std::string& sector,
                                          const std::vector<std::string>& controls,
                                          const InterventionConfig& config) {
    (void)evaluation_window(frame, config);
    const auto features = without(controls, config.war_column, sector);
    const Date anchor = config.anchor;
    auto set = make_windows(frame, sector, features, config.lag).filter([anchor](Date d) { return d < anchor; });
    if (set.size() < config.min_pre_anchor_samples) {
        fail(ErrorCode::EmptyDataset, "only " + std::to_string(set.size()) + " pre-anchor samples (< " +
                                          std::to_string(config.min_pre_anchor_samples) + ")");
    }
    return set;
}

DatedSeries rollout(const Forecaster& model, const SeriesFrame& frame, const std::string& target, Date start,
                    Date end, ExoPolicy policy, const std::set<std::string>& freeze) {
    const auto& names = model.feature_names();
    if (names.empty() || names.front() != target) {
        fail(ErrorCode::InvalidArgument, "rollout: model's first feature must be the target '" + target + "'");
    }
    const auto s = frame.index().position(start), e = frame.index().position(end);
    if (!s || !e || *e < *s) fail(ErrorCode::InvalidArgument, "rollout: start/end not in frame or reversed");
    const auto tau = static_cast<std::size_t>(model.lag());
    if (*s < tau) fail(ErrorCode::EmptyDataset, "rollout: fewer than lag rows before the start date");
    const std::size_t D = names.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    // work[d][t] for t <= e; pre-start gaps are carried forward.
    std::vector<std::vector<double>> work(D, std::vector<double>(*e + 1, nan));
    for (std::size_t d = 0; d < D; ++d) {
        const Column& col = frame.column(names[d]);
        double last = nan;
        for (std::size_t t = 0; t < *s; ++t) {
            if (col[t]) last = *col[t];
            work[d][t] = last;
        }
        const bool frozen = d == 0 || policy == ExoPolicy::Frozen || freeze.count(names[d]) > 0;
        if (d == 0) continue;  // target filled by predictions below
        for (std::size_t t = *s; t <= *e; ++t) {
            if (!frozen && col[t]) last = *col[t];
            work[d][t] = last;
        }
    }

    DatedSeries out;
    std::vector<double> window(tau * D);
    for (std::size_t t = *s; t <= *e; ++t) {
        for (std::size_t r = 0; r < tau; ++r) {
            for (std::size_t d = 0; d < D; ++d) {
                const double v = work[d][t - tau + r];
                if (std::isnan(v)) {
                    fail(ErrorCode::EmptyDataset, "rollout: no observed history for '" + names[d] + "' before " +
                                                      format_date(frame.index()[t]));
                }
                window[r * D + d] = v;
            }
        }
        const double pred = model.predict(window, frame.index()[t]);
        work[0][t] = pred;
        out.dates.push_back(frame.index()[t]);
        out.values.push_back(pred);
    }
    return out;
}

DatedSeries counterfactual_forecast(const SeriesFrame& frame, const std::string& sector,
                                    const std::vector<std::string>& controls, const InterventionConfig& config,
                                    const ForecasterFactory& factory) {
    const auto w = evaluation_window(frame, config);
    const auto set = counterfactual_training_set(frame, sector, controls, config);
    const auto model = (factory ? factory : default_factory(config, "counterfactual"))(set);
    return rollout(*model, frame, sector, frame.index()[w.begin], frame.index()[w.end], config.exo, config.freeze);
}

CounterfactualReport monthly_deltas(const std::string& sector, const DatedSeries& actual,
                                    const DatedSeries& factual, const DatedSeries& counterfactual,
                                    std::size_t min_days) {
    auto to_map = [](const DatedSeries& s) {
        if (s.dates.size() != s.values.size()) fail(ErrorCode::InvalidArgument, "dated series length mismatch");
        std::map<Date, double> m;
        for (std::size_t i = 0; i < s.size(); ++i) m[s.dates[i]] = s.values[i];
        return m;
    };
    const auto a = to_map(actual), f = to_map(factual), c = to_map(counterfactual);

    struct Acc {
        std::size_t days = 0;
        double a = 0.0, f = 0.0, c = 0.0;
    };
    std::map<year_month, Acc> months;
    for (const auto& [date, av] : a) {
        const year_month_day ymd{date};
        auto& acc = months[ymd.year() / ymd.month()];
        auto fi = f.find(date);
        auto ci = c.find(date);
        if (fi == f.end() || ci == c.end()) continue;
        ++acc.days;
        acc.a += av;
        acc.f += fi->second;
        acc.c += ci->second;
    }
    CounterfactualReport report{sector, {}, {}};
    for (const auto& [ym, acc] : months) {
        if (acc.days < min_days) {
            report.omitted.push_back(ym);
            continue;
        }
        MonthlyRow row;
        row.month = ym;
        row.days = acc.days;
        const auto n = static_cast<double>(acc.days);
        row.actual = acc.a / n;
        row.factual = acc.f / n;
        row.counterfactual = acc.c / n;
        row.delta_war = row.factual - row.actual;
        row.delta_nowar = row.counterfactual - row.actual;
        if (row.actual != 0.0) {
            row.delta_war_pct = 100.0 * row.delta_war / row.actual;
            row.delta_nowar_pct = 100.0 * row.delta_nowar / row.actual;
        }
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace ce
