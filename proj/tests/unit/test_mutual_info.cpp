#include "causal_energy/error.hpp"
#include "causal_energy/mutual_info.hpp"
#include "causal_energy/rng.hpp"
#include "causal_energy/synth.hpp"

#include "../support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace ce;

namespace {

std::pair<std::vector<double>, std::vector<double>> gaussian_pair(double rho, std::size_t n, std::uint64_t seed) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::GaussianPair;
    spec.rho = rho;
    spec.n = n;
    spec.seed = seed;
    const auto syn = generate(spec);
    std::vector<double> x, y;
    for (const auto& v : syn.frame.column("x")) x.push_back(*v);
    for (const auto& v : syn.frame.column("y")) y.push_back(*v);
    return {x, y};
}

MIScore score(const std::string& factor, double v) {
    MIScore s;
    s.target = "T";
    s.factor = factor;
    s.value = v;
    s.n = 500;
    s.k = 4;
    return s;
}

}  // namespace

TEST_CASE("digamma reference values") {
    CHECK(std::abs(digamma(1.0) + 0.5772156649015329) < 1e-10);
    CHECK(std::abs(digamma(2.0) - 0.4227843350984671) < 1e-10);
    CHECK(std::abs(digamma(10.0) - 2.251752589066721) < 1e-10);
    CHECK(std::abs(digamma(0.5) + 1.9635100260214235) < 1e-10);
    CHECK(std::abs(digamma(1e4) - 9.210290371142850) < 1e-10);
    for (double x : {0.3, 1.7, 5.5, 6.0, 42.0}) CHECK(std::abs(digamma(x + 1) - digamma(x) - 1 / x) < 1e-10);
    CHECK_CE_ERROR(digamma(0.0), ErrorCode::InvalidArgument);
    CHECK_CE_ERROR(digamma(-1.0), ErrorCode::InvalidArgument);
}

TEST_CASE("independent uniforms give MI near zero") {
    Rng rng(7);
    std::vector<double> x(5000), y(5000);
    for (auto& v : x) v = rng.uniform();
    for (auto& v : y) v = rng.uniform();
    CHECK(std::abs(ksg_mi(x, y)) < 0.05);
}

TEST_CASE("correlated Gaussian matches the analytic value") {
    const auto [x, y] = gaussian_pair(0.9, 5000, 1);
    CHECK(std::abs(ksg_mi(x, y) - 0.8304) < 0.05);
}

TEST_CASE("degenerate inputs") {
    const auto [x, y] = gaussian_pair(0.5, 200, 2);
    CHECK_CE_ERROR(ksg_mi(x, x), ErrorCode::DegenerateInput);
    std::vector<double> flat(200, 3.0);
    CHECK_CE_ERROR(ksg_mi(x, flat), ErrorCode::DegenerateInput);
    CHECK_CE_ERROR(ksg_mi(std::span(x).first(4), std::span(y).first(4)), ErrorCode::InvalidArgument);
    CHECK_CE_ERROR(ksg_mi(std::span(x).first(10), std::span(y).first(9)), ErrorCode::InvalidArgument);
    auto bad = y;
    bad[3] = std::nan("");
    CHECK_CE_ERROR(ksg_mi(x, bad), ErrorCode::InvalidArgument);
}

TEST_CASE("estimate is exactly symmetric") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto [x, y] = gaussian_pair(0.3 * static_cast<double>(seed) / 2, 800, seed);
        CHECK(ksg_mi(x, y) == ksg_mi(y, x));
    }
    // Binary dummies tie heavily; jitter must keep symmetry.
    std::vector<double> war(600), y(600);
    Rng rng(4);
    for (std::size_t i = 0; i < war.size(); ++i) {
        war[i] = i >= 400 ? 1.0 : 0.0;
        y[i] = war[i] * 2 + rng.normal();
    }
    CHECK(ksg_mi(war, y) == ksg_mi(y, war));
    CHECK(ksg_mi(war, y) > 0.1);
}

TEST_CASE("monotone marginal transform leaves MI nearly unchanged") {
    const auto [x, y] = gaussian_pair(0.7, 5000, 9);
    std::vector<double> ex(x.size());
    std::transform(x.begin(), x.end(), ex.begin(), [](double v) { return std::exp(v); });
    std::vector<double> lx(ex.size());
    std::transform(ex.begin(), ex.end(), lx.begin(), [](double v) { return std::log(v + 1.0); });
    CHECK(std::abs(ksg_mi(x, y) - ksg_mi(lx, y)) <= 0.1);
}

TEST_CASE("mi_matrix ranks noise last and drops missing pairs") {
    Rng rng(21);
    const std::size_t n = 1500;
    std::vector<double> t(n), strong(n), weak(n), noise(n);
    for (std::size_t i = 0; i < n; ++i) {
        strong[i] = rng.normal();
        weak[i] = rng.normal();
        noise[i] = rng.normal();
        t[i] = strong[i] + 0.5 * weak[i] + 0.3 * rng.normal();
    }
    auto tc = fixtures::col(t);
    tc[10].reset();
    auto frame = fixtures::frame(make_date(2020, 1, 1), {{"T", tc},
                                                         {"strong", fixtures::col(strong)},
                                                         {"weak", fixtures::col(weak)},
                                                         {"noise", fixtures::col(noise)},
                                                         {"copy", fixtures::col(t)}});
    const auto cells = mi_matrix(frame, {"T"}, {"weak", "noise", "strong", "copy"}, {}, 2);
    REQUIRE(cells.size() == 4);
    CHECK(cells[0].factor == "weak");
    CHECK(cells[2].factor == "strong");
    REQUIRE(cells[2].score);
    CHECK(cells[2].score->n == n - 1);
    CHECK(cells[2].score->value > cells[0].score->value);
    CHECK(cells[0].score->value > cells[1].score->value);
    // "copy" equals T on every complete pair.
    CHECK_FALSE(cells[3].score);
    CHECK(cells[3].error.find("degenerate") != std::string::npos);

    const auto serial = mi_matrix(frame, {"T"}, {"weak", "noise", "strong", "copy"}, {}, 1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(serial[i].score->value == cells[i].score->value);

    auto short_frame = frame.slice(0, 80);
    const auto few = mi_matrix(short_frame, {"T"}, {"strong"});
    CHECK_FALSE(few[0].score);
}

TEST_CASE("select_factors examples") {
    auto r = select_factors({score("c", 0.05), score("a", 1.0), score("b", 0.5)}, 0.9);
    CHECK(r.selected == std::set<std::string>{"a", "b"});
    CHECK(r.coverage == doctest::Approx(1.5 / 1.55));
    CHECK(r.ranked.front().factor == "a");

    auto single = select_factors({score("only", 0.2)}, 0.9);
    CHECK(single.selected == std::set<std::string>{"only"});
    CHECK(single.coverage == doctest::Approx(1.0));

    auto forced = select_factors({score("a", 1.0)}, 0.9, {"War"});
    CHECK(forced.selected == std::set<std::string>{"a", "War"});

    auto negative = select_factors({score("a", -0.01), score("b", 0.0)}, 0.9, {"War", "Rus"});
    CHECK(negative.fell_back);
    CHECK(negative.coverage == 0.0);
    CHECK(negative.selected == std::set<std::string>{"War", "Rus"});

    auto all = select_factors({score("a", 1.0), score("b", 0.5), score("c", 0.05), score("d", -0.1)}, 1.0);
    CHECK(all.selected == std::set<std::string>{"a", "b", "c"});

    CHECK_CE_ERROR(select_factors({}, 0.9), ErrorCode::InvalidArgument);
    CHECK_CE_ERROR(select_factors({score("a", 1)}, 0.0), ErrorCode::InvalidArgument);
    CHECK_CE_ERROR(select_factors({score("a", 1)}, 1.5), ErrorCode::InvalidArgument);
}

TEST_CASE("selection properties: prefix, minimality, order invariance, monotonicity") {
    Rng rng(33);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<MIScore> scores;
        const int m = 1 + static_cast<int>(rng.below(8));
        for (int i = 0; i < m; ++i) {
            // Coarse values force ties, broken by name.
            const double v = std::round(rng.uniform(-0.2, 1.0) * 10) / 10;
            scores.push_back(score(std::string(1, static_cast<char>('a' + i)), v));
        }
        auto shuffled = scores;
        for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);

        double prev_size = 0;
        for (double q : {0.1, 0.5, 0.8, 0.9, 1.0}) {
            const auto r = select_factors(scores, q);
            const auto s = select_factors(shuffled, q);
            CHECK(r.selected == s.selected);
            REQUIRE(r.ranked.size() == s.ranked.size());
            for (std::size_t i = 0; i < r.ranked.size(); ++i) CHECK(r.ranked[i].factor == s.ranked[i].factor);
            CHECK(static_cast<double>(r.selected.size()) >= prev_size);
            prev_size = static_cast<double>(r.selected.size());
            if (r.fell_back) continue;
            double total = 0;
            for (const auto& x : r.ranked) total += std::max(0.0, x.value);
            // selected = first |selected| of the ranking and no shorter prefix reaches q
            const std::size_t k = r.selected.size();
            double cum = 0;
            for (std::size_t i = 0; i < k; ++i) {
                CHECK(r.selected.count(r.ranked[i].factor) == 1);
                if (i + 1 < k) CHECK(cum + std::max(0.0, r.ranked[i].value) < q * total);
                cum += std::max(0.0, r.ranked[i].value);
            }
            CHECK(cum / total >= q - 1e-12);
            CHECK(r.coverage == doctest::Approx(cum / total));
        }
    }
}

TEST_CASE("percentile-threshold rule") {
    const auto r = select_factors({score("a", 1.0), score("b", 0.5), score("c", 0.05), score("d", 0.01)}, 0.5, {},
                                  SelectionRule::PercentileThreshold);
    CHECK(r.selected == std::set<std::string>{"a", "b"});
}
