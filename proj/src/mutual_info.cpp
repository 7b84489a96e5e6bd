#include "causal_energy/mutual_info.hpp"

#include "causal_energy/error.hpp"
#include "causal_energy/parallel.hpp"
#include "causal_energy/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <queue>

namespace ce {

double digamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        fail(ErrorCode::InvalidArgument, "digamma requires a finite x > 0");
    }
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // ln x - 1/(2x) - sum B_2n / (2n x^2n)
    const double series =
        inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132)))));
    return result + std::log(x) - 0.5 * inv - series;
}

namespace {

double sample_sd(std::span<const double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::uint64_t content_hash(std::span<const double> v) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (double x : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xFF;
            h *= 0x100000001B3ULL;
        }
    }
    return h;
}

std::vector<double> jittered(std::span<const double> v, double amplitude, std::uint64_t seed) {
    Rng rng(derive_seed(seed, content_hash(v)));
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x += amplitude * rng.uniform(-1.0, 1.0);
    return out;
}

// Number of j != i with |v[j] - v[i]| < eps, scanning outward in sorted order.
std::size_t count_within(const std::vector<double>& sorted_vals, std::size_t pos, double eps) {
    const double centre = sorted_vals[pos];
    std::size_t count = 0;
    for (std::size_t j = pos + 1; j < sorted_vals.size() && std::abs(sorted_vals[j] - centre) < eps; ++j) ++count;
    for (std::size_t j = pos; j-- > 0 && std::abs(sorted_vals[j] - centre) < eps;) ++count;
    return count;
}

}  // namespace

double ksg_mi(std::span<const double> x_in, std::span<const double> y_in, const KsgOptions& options) {
    const std::size_t n = x_in.size();
    if (y_in.size() != n) fail(ErrorCode::InvalidArgument, "ksg_mi: x and y lengths differ");
    if (options.k < 1) fail(ErrorCode::InvalidArgument, "ksg_mi: k must be >= 1");
    const auto k = static_cast<std::size_t>(options.k);
    if (n <= k) fail(ErrorCode::InvalidArgument, "ksg_mi: need n > k samples");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x_in[i]) || !std::isfinite(y_in[i])) {
            fail(ErrorCode::InvalidArgument, "ksg_mi: non-finite value");
        }
    }
    if (std::equal(x_in.begin(), x_in.end(), y_in.begin())) {
        fail(ErrorCode::DegenerateInput, "ksg_mi: y duplicates x exactly (zero max-norm distances)");
    }
    const double sdx = sample_sd(x_in), sdy = sample_sd(y_in);
    if (!(sdx > 0.0) || !(sdy > 0.0)) fail(ErrorCode::DegenerateInput, "ksg_mi: zero-variance marginal");

    const auto x = jittered(x_in, options.jitter * sdx, options.seed);
    const auto y = jittered(y_in, options.jitter * sdy, options.seed);

    auto order_by = [n](const std::vector<double>& v) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return v[a] < v[b] || (v[a] == v[b] && a < b);
        });
        return order;
    };
    const auto ox = order_by(x), oy = order_by(y);
    std::vector<std::size_t> rank_x(n), rank_y(n);
    std::vector<double> sx(n), sy(n);
    for (std::size_t r = 0; r < n; ++r) {
        rank_x[ox[r]] = r;
        rank_y[oy[r]] = r;
        sx[r] = x[ox[r]];
        sy[r] = y[oy[r]];
    }

    double psi_sum = 0.0;
    std::priority_queue<double> best;  // max-heap of the k smallest distances
    for (std::size_t i = 0; i < n; ++i) {
        best = {};
        auto offer = [&](std::size_t j) {
            const double d = std::max(std::abs(x[j] - x[i]), std::abs(y[j] - y[i]));
            if (best.size() < k) {
                best.push(d);
            } else if (d < best.top()) {
                best.pop();
                best.push(d);
            }
        };
        const std::size_t p = rank_x[i];
        std::size_t lo = p, hi = p + 1;
        bool left_open = lo > 0, right_open = hi < n;
        while (left_open || right_open) {
            if (right_open) {
                const std::size_t j = ox[hi];
                if (best.size() == k && std::abs(x[j] - x[i]) >= best.top()) {
                    right_open = false;
                } else {
                    offer(j);
                    right_open = ++hi < n;
                }
            }
            if (left_open) {
                const std::size_t j = ox[lo - 1];
                if (best.size() == k && std::abs(x[j] - x[i]) >= best.top()) {
                    left_open = false;
                } else {
                    offer(j);
                    left_open = --lo > 0;
                }
            }
        }
        const double eps = best.top();
        if (!(eps > 0.0)) fail(ErrorCode::DegenerateInput, "ksg_mi: duplicate points (zero distance)");
        const auto nx = count_within(sx, rank_x[i], eps);
        const auto ny = count_within(sy, rank_y[i], eps);
        psi_sum += digamma(static_cast<double>(nx + 1)) + digamma(static_cast<double>(ny + 1));
    }
    return digamma(static_cast<double>(k)) + digamma(static_cast<double>(n)) -
           psi_sum / static_cast<double>(n);
}

std::vector<MICell> mi_matrix(const SeriesFrame& frame, const std::vector<std::string>& targets,
                              const std::vector<std::string>& factors, const KsgOptions& options,
                              unsigned jobs) {
    std::vector<MICell> cells;
    for (const auto& t : targets) {
        for (const auto& f : factors) cells.push_back({t, f, std::nullopt, {}});
    }
    parallel_for(cells.size(), jobs, [&](std::size_t c) {
        auto& cell = cells[c];
        try {
            const Column& ty = frame.column(cell.target);
            const Column& fx = frame.column(cell.factor);
            std::vector<double> xs, ys;
            for (std::size_t r = 0; r < frame.rows(); ++r) {
                if (fx[r] && ty[r]) {
                    xs.push_back(*fx[r]);
                    ys.push_back(*ty[r]);
                }
            }
            if (xs.size() < kMinMIPairs) {
                cell.error = "only " + std::to_string(xs.size()) + " complete pairs (< " +
                             std::to_string(kMinMIPairs) + ")";
                return;
            }
            cell.score = MIScore{cell.target, cell.factor, ksg_mi(xs, ys, options), xs.size(), options.k};
        } catch (const Error& e) {
            cell.error = std::string(to_string(e.code())) + ": " + e.what();
        }
    });
    return cells;
}

SelectionResult select_factors(std::vector<MIScore> scores, double quantile,
                               const std::set<std::string>& forced, SelectionRule rule) {
    if (scores.empty()) fail(ErrorCode::InvalidArgument, "select_factors: no scores");
    if (!(quantile > 0.0 && quantile <= 1.0)) {
        fail(ErrorCode::InvalidArgument, "select_factors: quantile must lie in (0, 1]");
    }
    std::sort(scores.begin(), scores.end(), [](const MIScore& a, const MIScore& b) {
        return a.value > b.value || (a.value == b.value && a.factor < b.factor);
    });
    SelectionResult result{scores.front().target, scores, forced, 0.0, false};

    double total = 0.0;
    for (const auto& s : scores) total += std::max(0.0, s.value);
    if (!(total > 0.0)) {
        result.fell_back = true;
        return result;
    }

    if (rule == SelectionRule::CumulativeShare) {
        double cum = 0.0;
        for (const auto& s : scores) {
            cum += std::max(0.0, s.value);
            result.selected.insert(s.factor);
            if (cum >= quantile * total) break;
        }
    } else {
        // Linear-interpolated percentile of the raw scores (ascending order).
        std::vector<double> values;
        for (const auto& s : scores) values.push_back(s.value);
        std::sort(values.begin(), values.end());
        const double pos = quantile * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double threshold = values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
        for (const auto& s : scores) {
            if (s.value >= threshold && s.value > 0.0) result.selected.insert(s.factor);
        }
    }
    double covered = 0.0;
    for (const auto& s : scores) {
        if (result.selected.count(s.factor)) covered += std::max(0.0, s.value);
    }
    result.coverage = covered / total;
    return result;
}

}  // namespace ce
