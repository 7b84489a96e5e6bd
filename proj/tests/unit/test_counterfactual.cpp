#include "causal_energy/counterfactual.hpp"
#include "causal_energy/error.hpp"
#include "causal_energy/synth.hpp"

#include "../support/fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace ce;
using namespace std::chrono;

namespace {

Synthetic stepped(std::uint64_t seed, double effect, GeneratorKind base = GeneratorKind::Ar1, double phi = 0.5,
                  std::size_t n = 2000) {
    GeneratorSpec s;
    s.kind = GeneratorKind::StepIntervention;
    s.base = base;
    s.phi = phi;
    s.n = n;
    s.anchor_index = 1500;
    s.effect = effect;
    s.seed = seed;
    return generate(s);
}

Date anchor_of(const SeriesFrame& frame) { return frame.index()[1500]; }

InterventionConfig prophet_config(const SeriesFrame& frame) {
    InterventionConfig c;
    c.anchor = anchor_of(frame);
    c.base = BaseModel::Prophet;
    c.prophet.yearly_order = 0;
    c.prophet.weekly_order = 0;
    c.prophet.changepoints = 0;
    return c;
}

DatedSeries series(Date start, std::vector<double> v) {
    DatedSeries s;
    for (std::size_t i = 0; i < v.size(); ++i) s.dates.push_back(start + days(static_cast<int>(i)));
    s.values = std::move(v);
    return s;
}

}  // namespace

TEST_CASE("persistence stub: factual lags actual by a day, counterfactual stays flat") {
    const auto frame = stepped(1, -10).frame;
    const auto cfg = prophet_config(frame);
    const auto stub = persistence_factory();
    const auto actual = actual_series(frame, "y", cfg);
    const auto factual = factual_forecast(frame, "y", {}, cfg, stub);
    const auto counter = counterfactual_forecast(frame, "y", {}, cfg, stub);
    REQUIRE(actual.size() == 500);
    REQUIRE(factual.size() == 500);
    REQUIRE(counter.size() == 500);
    CHECK(actual.dates.front() == cfg.anchor);
    const auto y = frame.column("y");
    for (std::size_t i = 0; i < 500; ++i) {
        CHECK(factual.dates[i] == actual.dates[i]);
        CHECK(factual.values[i] == *y[1499 + i]);
        CHECK(counter.values[i] == *y[1499]);
    }
}

TEST_CASE("horizon and history checks") {
    const auto frame = stepped(2, -10).frame;
    auto cfg = prophet_config(frame);
    cfg.horizon_end = cfg.anchor - days(1);
    CHECK_CE_ERROR(counterfactual_forecast(frame, "y", {}, cfg), ErrorCode::InvalidArgument);

    auto short_history = prophet_config(frame);
    short_history.anchor = frame.index()[600];
    CHECK_CE_ERROR(counterfactual_forecast(frame, "y", {}, short_history), ErrorCode::EmptyDataset);

    auto horizon = prophet_config(frame);
    horizon.horizon_end = horizon.anchor + days(59);
    CHECK(counterfactual_forecast(frame, "y", {}, horizon, persistence_factory()).size() == 60);
}

TEST_CASE("counterfactual training never sees the anchor or the war dummy") {
    const auto frame = stepped(3, -10, GeneratorKind::TanhCoupled).frame;
    const auto cfg = prophet_config(frame);
    const auto set = counterfactual_training_set(frame, "y", {"x", "War"}, cfg);
    CHECK(set.size() > 0);
    for (const auto& s : set.samples) CHECK(s.date < cfg.anchor);
    for (const auto& f : set.feature_names) CHECK(f != "War");

    // anything the factory sees must be pre-anchor as well
    bool leaked = false;
    const ForecasterFactory spy = [&](const SupervisedSet& train) {
        for (const auto& s : train.samples) leaked = leaked || s.date >= cfg.anchor;
        for (const auto& f : train.feature_names) leaked = leaked || f == "War";
        return persistence_factory()(train);
    };
    counterfactual_forecast(frame, "y", {"x"}, cfg, spy);
    CHECK_FALSE(leaked);
}

TEST_CASE("monthly deltas") {
    const Date start = make_date(2022, 3, 1);
    const auto actual = series(start, std::vector<double>(31, 200.0));
    const auto factual = series(start, std::vector<double>(31, 190.0));
    const auto counter = series(start, std::vector<double>(31, 210.0));
    const auto r = monthly_deltas("LDZ", actual, factual, counter);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].delta_war == doctest::Approx(-10));
    CHECK(*r.rows[0].delta_war_pct == doctest::Approx(-5));
    CHECK(r.rows[0].delta_nowar == doctest::Approx(10));
    CHECK(r.rows[0].days == 31);
    CHECK(format_month(r.rows[0].month) == "2022-03");

    // a ten-day month is omitted
    const auto partial = monthly_deltas("LDZ", series(start + days(21), std::vector<double>(10, 1.0)),
                                        series(start + days(21), std::vector<double>(10, 1.0)),
                                        series(start + days(21), std::vector<double>(10, 1.0)));
    CHECK(partial.rows.empty());
    REQUIRE(partial.omitted.size() == 1);

    const auto zero = monthly_deltas("LDZ", series(start, std::vector<double>(31, 0.0)), factual, counter);
    CHECK_FALSE(zero.rows[0].delta_war_pct.has_value());
    CHECK_FALSE(zero.rows[0].delta_nowar_pct.has_value());
}

TEST_CASE("relative and absolute deltas agree") {
    Rng rng(5);
    const Date start = make_date(2022, 2, 24);
    std::vector<double> a(200), f(200), c(200);
    for (std::size_t i = 0; i < 200; ++i) {
        a[i] = 50 + 10 * rng.normal();
        f[i] = a[i] + rng.normal();
        c[i] = a[i] + 5 + rng.normal();
    }
    const auto r = monthly_deltas("IND", series(start, a), series(start, f), series(start, c));
    CHECK(r.rows.size() == 6);
    for (const auto& row : r.rows) {
        CHECK(*row.delta_war_pct * row.actual / 100 == doctest::Approx(row.delta_war).epsilon(1e-9));
        CHECK(*row.delta_nowar_pct * row.actual / 100 == doctest::Approx(row.delta_nowar).epsilon(1e-9));
    }
}

TEST_CASE("planted step is recovered month by month") {
    const auto frame = stepped(4, -10).frame;
    const auto cfg = prophet_config(frame);
    const auto r = monthly_deltas("y", actual_series(frame, "y", cfg), factual_forecast(frame, "y", {}, cfg),
                                  counterfactual_forecast(frame, "y", {}, cfg));
    REQUIRE(r.rows.size() >= 6);
    for (std::size_t m = 0; m < 6; ++m) {
        CHECK(r.rows[m].delta_nowar == doctest::Approx(10).epsilon(0.2));
        CHECK(std::abs(r.rows[m].delta_war) < 2.0);
    }
}

TEST_CASE("rollout error grows with lead time") {
    double near = 0, far = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto frame = stepped(10 + seed, 0.0, GeneratorKind::Ar1, 0.95).frame;
        const auto cfg = prophet_config(frame);
        const auto a = actual_series(frame, "y", cfg);
        const auto c = counterfactual_forecast(frame, "y", {}, cfg);
        for (std::size_t i = 0; i < 3; ++i) near += std::abs(c.values[i] - a.values[i]) / 3;
        for (std::size_t i = 60; i < 180; ++i) far += std::abs(c.values[i] - a.values[i]) / 120;
    }
    CHECK(far > 1.5 * near);
}

TEST_CASE("exogenous policy only touches the counterfactual") {
    const auto frame = stepped(6, -3, GeneratorKind::TanhCoupled).frame;
    auto observed = prophet_config(frame);
    auto frozen = observed;
    frozen.exo = ExoPolicy::Frozen;
    CHECK(factual_forecast(frame, "y", {"x"}, observed).values == factual_forecast(frame, "y", {"x"}, frozen).values);
    const auto co = counterfactual_forecast(frame, "y", {"x"}, observed);
    const auto cf = counterfactual_forecast(frame, "y", {"x"}, frozen);
    CHECK(co.values != cf.values);
    auto pinned = observed;
    pinned.freeze = {"x"};
    CHECK(counterfactual_forecast(frame, "y", {"x"}, pinned).values == cf.values);
}

TEST_CASE("policy names") {
    CHECK(parse_exo_policy("frozen") == ExoPolicy::Frozen);
    CHECK(parse_exo_policy("observed") == ExoPolicy::Observed);
    CHECK_FALSE(parse_exo_policy("Frozen ").has_value());
    CHECK(std::string(to_string(ExoPolicy::Frozen)) == "frozen");
}
