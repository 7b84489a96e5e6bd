#include "causal_energy/error.hpp"
#include "causal_energy/granger.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ce {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    Alternative alternative, WilcoxonMethod method) {
    if (a.size() != b.size()) fail(ErrorCode::InvalidArgument, "wilcoxon: paired vectors differ in length");
    std::vector<double> d;
    d.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        if (!std::isfinite(diff)) fail(ErrorCode::InvalidArgument, "wilcoxon: non-finite difference");
        if (diff != 0.0) d.push_back(diff);
    }
    WilcoxonResult r;
    r.n = d.size();
    if (d.empty()) {
        r.degenerate = true;
        return r;
    }
    if (r.n < 5) {
        fail(ErrorCode::SampleTooSmall, "wilcoxon: " + std::to_string(r.n) + " non-zero differences (< 5)");
    }

    // Doubled midranks are integers: tied block over sorted positions [i, j)
    // gets rank2 = (i + 1) + j.
    std::vector<std::size_t> order(r.n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(d[x]) < std::abs(d[y]);
    });
    std::vector<std::uint64_t> rank2(r.n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < r.n;) {
        std::size_t j = i + 1;
        while (j < r.n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
        for (std::size_t k = i; k < j; ++k) rank2[order[k]] = (i + 1) + j;
        const auto t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    std::uint64_t w2 = 0;
    for (std::size_t i = 0; i < r.n; ++i) {
        if (d[i] > 0) w2 += rank2[i];
    }
    r.statistic = static_cast<double>(w2) / 2.0;

    const bool exact = method == WilcoxonMethod::Exact ||
                       (method == WilcoxonMethod::Auto && r.n <= kWilcoxonExactMax);
    if (exact) {
        if (r.n > 62) fail(ErrorCode::InvalidArgument, "wilcoxon: exact branch limited to n <= 62");
        // counts[s] = number of sign assignments whose doubled positive-rank sum is s.
        const std::uint64_t total2 = std::accumulate(rank2.begin(), rank2.end(), std::uint64_t{0});
        std::vector<std::uint64_t> counts(total2 + 1, 0);
        counts[0] = 1;
        std::uint64_t reach = 0;
        for (auto rk : rank2) {
            reach += rk;
            for (std::uint64_t s = reach; s >= rk; --s) counts[s] += counts[s - rk];
        }
        std::uint64_t le = 0, ge = 0;
        for (std::uint64_t s = 0; s <= total2; ++s) {
            if (s <= w2) le += counts[s];
            if (s >= w2) ge += counts[s];
        }
        const double denom = std::ldexp(1.0, static_cast<int>(r.n));
        const double p_less = static_cast<double>(le) / denom;
        const double p_greater = static_cast<double>(ge) / denom;
        r.exact = true;
        switch (alternative) {
        case Alternative::Less: r.p_value = p_less; break;
        case Alternative::Greater: r.p_value = p_greater; break;
        case Alternative::TwoSided: r.p_value = std::min(1.0, 2.0 * std::min(p_less, p_greater)); break;
        }
        return r;
    }

    const auto n = static_cast<double>(r.n);
    const double mean = n * (n + 1.0) / 4.0;
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    const double sd = std::sqrt(var);
    const double p_less = normal_cdf((r.statistic - mean + 0.5) / sd);
    const double p_greater = normal_cdf(-(r.statistic - mean - 0.5) / sd);
    switch (alternative) {
    case Alternative::Less: r.p_value = p_less; break;
    case Alternative::Greater: r.p_value = p_greater; break;
    case Alternative::TwoSided: r.p_value = std::min(1.0, 2.0 * std::min(p_less, p_greater)); break;
    }
    r.p_value = std::clamp(r.p_value, 0.0, 1.0);
    return r;
}

}  // namespace ce
