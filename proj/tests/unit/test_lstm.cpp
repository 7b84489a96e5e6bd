#include "causal_energy/error.hpp"
#include "causal_energy/lstm.hpp"

#include "../support/fixtures.hpp"
#include "../support/gradcheck.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ce;

namespace {

double sigmoid(double x) { return 1 / (1 + std::exp(-x)); }

SupervisedSet sine_set(std::size_t samples, int lag, double scale = 1.0) {
    std::vector<double> y(samples + static_cast<std::size_t>(lag));
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = scale * std::sin(2 * std::numbers::pi * static_cast<double>(t) / 25.0);
    const auto f = fixtures::frame(make_date(2015, 1, 1), {{"y", fixtures::col(y)}});
    return make_windows(f, "y", {}, lag);
}

SupervisedSet two_feature_set(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    std::vector<double> x(n), y(n);
    for (std::size_t t = 0; t < n; ++t) {
        x[t] = rng.normal();
        y[t] = scale * (t > 0 ? 0.5 * y[t - 1] / scale + std::tanh(x[t - 1]) : 0.0) + scale * 0.1 * rng.normal();
    }
    const auto f = fixtures::frame(make_date(2015, 1, 1), {{"y", fixtures::col(y)}, {"x", fixtures::col(x)}});
    return make_windows(f, "y", {"x"}, 3);
}

TrainConfig small_config(int lag) {
    TrainConfig c;
    c.lag = lag;
    c.hidden = 8;
    c.epochs = 40;
    c.learning_rate = 1e-2;
    c.batch_size = 32;
    c.patience = 10;
    return c;
}

}  // namespace

TEST_CASE("init is deterministic with unit forget bias") {
    const auto a = init_params(7, 3, 4), b = init_params(7, 3, 4), c = init_params(8, 3, 4);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(a.values.size() == LstmParams::count(3, 4));
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(a.values[a.b_offset() + j] == 0.0);          // input gate
        CHECK(a.values[a.b_offset() + 4 + j] == 1.0);      // forget gate
        CHECK(a.values[a.b_offset() + 8 + j] == 0.0);
        CHECK(a.values[a.b_offset() + 12 + j] == 0.0);
    }
    const double wbound = std::sqrt(6.0 / (3 + 4));  // per-gate H x D block
    const double ubound = std::sqrt(6.0 / (4 + 4));
    for (std::size_t i = 0; i < a.u_offset(); ++i) CHECK(std::abs(a.values[i]) <= wbound);
    for (std::size_t i = a.u_offset(); i < a.b_offset(); ++i) CHECK(std::abs(a.values[i]) <= ubound);
    CHECK(a.values[a.head_bias_offset()] == 0.0);
}

TEST_CASE("forward on a zero network and on a zero window") {
    LstmParams zero{2, 3, std::vector<double>(LstmParams::count(2, 3), 0.0)};
    const std::vector<double> window{1, 2, 3, 4, 5, 6};
    CHECK(forward(zero, window) == 0.0);

    auto p = init_params(3, 2, 3);
    for (std::size_t i = p.b_offset(); i < p.values.size(); ++i) p.values[i] = 0.1 * static_cast<double>(i % 5);
    const std::vector<double> zeros(6, 0.0);
    const double base = forward(p, zeros);
    auto q = p;
    for (std::size_t i = 0; i < q.u_offset(); ++i) q.values[i] = 9.0;  // input weights do not matter
    CHECK(forward(q, zeros) == base);
    std::vector<double> bad = window;
    bad[2] = std::nan("");
    CHECK_CE_ERROR(forward(p, bad), ErrorCode::InvalidArgument);
    CHECK_CE_ERROR(forward(p, std::span(window).first(5)), ErrorCode::InvalidArgument);
}

TEST_CASE("forward matches a scalar hand trace") {
    // D = 1, H = 1, two steps.
    LstmParams p{1, 1, std::vector<double>(LstmParams::count(1, 1))};
    const double W[4] = {0.5, -0.3, 0.8, 0.2}, U[4] = {0.1, 0.4, -0.2, 0.7}, b[4] = {0.05, 1.0, -0.1, 0.0};
    for (int g = 0; g < 4; ++g) {
        p.values[p.w_offset() + g] = W[g];
        p.values[p.u_offset() + g] = U[g];
        p.values[p.b_offset() + g] = b[g];
    }
    p.values[p.head_offset()] = 1.5;
    p.values[p.head_bias_offset()] = -0.25;
    const double x[2] = {0.6, -1.1};
    double h = 0, c = 0;
    for (double xt : x) {
        const double i = sigmoid(W[0] * xt + U[0] * h + b[0]);
        const double f = sigmoid(W[1] * xt + U[1] * h + b[1]);
        const double o = sigmoid(W[2] * xt + U[2] * h + b[2]);
        const double g = std::tanh(W[3] * xt + U[3] * h + b[3]);
        c = f * c + i * g;
        h = o * std::tanh(c);
    }
    const std::vector<double> window{x[0], x[1]};
    CHECK(forward(p, window) == doctest::Approx(1.5 * h - 0.25).epsilon(1e-14));
}

TEST_CASE("loss_and_grad: perfect fit and duplicated batch") {
    LstmParams p{2, 3, std::vector<double>(LstmParams::count(2, 3), 0.0)};
    p.values[p.head_bias_offset()] = 0.7;
    std::vector<Sample> batch{{make_date(2020, 1, 1), {1, 2, 3, 4}, 0.7}};
    const auto perfect = loss_and_grad(p, batch);
    CHECK(perfect.loss == 0.0);
    for (double g : perfect.grad) CHECK(g == 0.0);

    auto q = init_params(5, 2, 3);
    std::vector<Sample> one{{make_date(2020, 1, 1), {0.3, -0.2, 1.0, 0.5}, 0.4}};
    std::vector<Sample> two{one[0], one[0]};
    const auto a = loss_and_grad(q, one), b = loss_and_grad(q, two);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
    for (std::size_t i = 0; i < a.grad.size(); ++i) CHECK(a.grad[i] == doctest::Approx(b.grad[i]).epsilon(1e-12));
    // Plain MSE, no one-half factor.
    const double pred = forward(q, one[0].window);
    CHECK(a.loss == doctest::Approx((pred - 0.4) * (pred - 0.4)).epsilon(1e-14));
}

TEST_CASE("gradient matches central differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto r = gradcheck::run(1000 + seed);
        CHECK_MESSAGE(r.max_rel_error < 1e-4, "seed " << seed << " params " << r.params);
    }
}

TEST_CASE("sine autoregression trains to low validation error") {
    const auto set = sine_set(500, 7);
    TrainConfig c;
    c.lag = 7;
    c.hidden = 16;
    c.epochs = 200;
    c.learning_rate = 1e-2;
    const auto fit = train(set, c);
    CHECK(fit.report.validation_mse < 0.01);
    CHECK(fit.report.epochs_run <= 200);
    CHECK(fit.report.best_epoch <= fit.report.epochs_run);
    for (std::size_t i = 1; i < fit.report.best_history.size(); ++i) {
        CHECK(fit.report.best_history[i] <= fit.report.best_history[i - 1]);
    }
}

TEST_CASE("training is deterministic per seed") {
    const auto set = two_feature_set(300, 4);
    const auto a = train(set, small_config(3)), b = train(set, small_config(3));
    CHECK(a.model.params().values == b.model.params().values);
    CHECK(a.report.validation_history == b.report.validation_history);
    CHECK(a.report.train_mse == b.report.train_mse);
    auto other = small_config(3);
    other.seed = 43;
    CHECK(train(set, other).model.params().values != a.model.params().values);
}

TEST_CASE("training preconditions") {
    const auto flat = fixtures::frame(make_date(2015, 1, 1), {{"y", fixtures::col(std::vector<double>(120, 3.0))}});
    CHECK_CE_ERROR(train(make_windows(flat, "y", {}, 3), small_config(3)), ErrorCode::DegenerateColumn);
    CHECK_CE_ERROR(train(sine_set(40, 3), small_config(3)), ErrorCode::EmptyDataset);
    CHECK_CE_ERROR(train(sine_set(100, 3), small_config(4)), ErrorCode::InvalidArgument);
    auto bad = small_config(3);
    bad.validation_fraction = 0.7;
    CHECK_CE_ERROR(train(sine_set(100, 3), bad), ErrorCode::InvalidArgument);
    bad = small_config(3);
    bad.learning_rate = 1e6;
    bad.clip_norm = 1e12;
    bool diverged_or_ok = true;
    try {
        (void)train(sine_set(200, 3, 1e150), bad);
    } catch (const Error& e) {
        diverged_or_ok = e.code() == ErrorCode::TrainingDiverged || e.code() == ErrorCode::DegenerateColumn;
    }
    CHECK(diverged_or_ok);
}

TEST_CASE("prediction binds features by name") {
    const auto set = two_feature_set(300, 6);
    const auto fit = train(set, small_config(3));
    const auto& s = set.samples[100];
    const double canonical = predict_one(fit.model, s.window, {"y", "x"});
    std::vector<double> swapped(s.window.size());
    for (std::size_t r = 0; r < 3; ++r) {
        swapped[r * 2] = s.window[r * 2 + 1];
        swapped[r * 2 + 1] = s.window[r * 2];
    }
    CHECK(predict_one(fit.model, swapped, {"x", "y"}) == canonical);
    CHECK(fit.model.predict(s.window, s.date) == canonical);
    CHECK_CE_ERROR(predict_one(fit.model, std::span(s.window).first(3), {"y"}), ErrorCode::InvalidArgument);
    CHECK_CE_ERROR(predict_one(fit.model, s.window, {"y", "z"}), ErrorCode::InvalidArgument);
    // Fitted on a learnable signal: in-sample error stays near the noise level.
    double se = 0;
    for (const auto& x : set.samples) se += std::pow(fit.model.predict(x.window, x.date) - x.target, 2);
    CHECK(std::sqrt(se / static_cast<double>(set.size())) < 0.3);
}

TEST_CASE("target scaling is absorbed by standardization") {
    const auto set = two_feature_set(300, 8);
    auto scaled = set;
    for (auto& s : scaled.samples) {
        s.target *= 2;
        for (std::size_t r = 0; r < 3; ++r) s.window[r * 2] *= 2;
    }
    const auto a = train(set, small_config(3)), b = train(scaled, small_config(3));
    for (std::size_t i = 0; i < set.size(); i += 17) {
        const double pa = a.model.predict(set.samples[i].window, set.samples[i].date);
        const double pb = b.model.predict(scaled.samples[i].window, scaled.samples[i].date);
        CHECK(std::abs(pb - 2 * pa) <= 1e-6 * std::max(1.0, std::abs(2 * pa)));
    }
}

TEST_CASE("model JSON round trip") {
    const auto set = two_feature_set(200, 9);
    const auto fit = train(set, small_config(3));
    const auto text = fit.model.to_json();
    CHECK(text.find("\"format_version\"") != std::string::npos);
    const auto back = LstmModel::from_json(text);
    CHECK(back.params().values == fit.model.params().values);
    CHECK(back.feature_names() == fit.model.feature_names());
    const auto& s = set.samples[50];
    CHECK(back.predict(s.window, s.date) == fit.model.predict(s.window, s.date));
    CHECK_CE_ERROR(LstmModel::from_json("{\"format\": \"other\"}"), ErrorCode::InvalidArgument);
}
