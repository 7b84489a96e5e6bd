#include "causal_energy/granger.hpp"

#include "causal_energy/error.hpp"
#include "causal_energy/parallel.hpp"
#include "causal_energy/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace ce {

void GrangerConfig::validate() const {
    if (lag < 1) fail(ErrorCode::InvalidArgument, "granger: lag must be >= 1");
    if (!(test_fraction > 0.0 && test_fraction <= 0.5)) {
        fail(ErrorCode::InvalidArgument, "granger: test fraction must lie in (0, 0.5]");
    }
    if (seeds < 1) fail(ErrorCode::InvalidArgument, "granger: seeds must be >= 1");
}

ModelBuilder default_model_builder(const GrangerConfig& config) {
    if (config.base == BaseModel::Prophet) {
        return [prophet = config.prophet](std::uint64_t) { return prophet_factory(prophet); };
    }
    return [train = config.train](std::uint64_t seed) {
        TrainConfig c = train;
        c.seed = seed;
        return lstm_factory(c);
    };
}

void check_aligned(const SupervisedSet& restricted, const SupervisedSet& augmented) {
    const auto a = restricted.dates(), b = augmented.dates();
    if (a == b && !a.empty()) return;
    std::vector<Date> diff;
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
    std::string list;
    for (std::size_t i = 0; i < diff.size() && i < 10; ++i) list += (i ? ", " : "") + format_date(diff[i]);
    if (diff.size() > 10) list += ", ... (" + std::to_string(diff.size()) + " total)";
    if (a.empty() || b.empty()) list = "no shared sample dates";
    fail(ErrorCode::Alignment, "restricted and augmented samples are misaligned: " + list);
}

void align_sets(SupervisedSet& restricted, SupervisedSet& augmented) {
    const auto a = restricted.dates(), b = augmented.dates();
    std::vector<Date> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    const std::set<Date> keep(common.begin(), common.end());
    auto in_common = [&](Date d) { return keep.count(d) > 0; };
    restricted = restricted.filter(in_common);
    augmented = augmented.filter(in_common);
    check_aligned(restricted, augmented);
}

namespace {

struct SeedRun {
    WilcoxonResult test;
    double mae_restricted = 0.0;
    double mae_augmented = 0.0;
    std::uint64_t seed = 0;
};

std::vector<double> abs_errors(const Forecaster& model, const SupervisedSet& test) {
    std::vector<double> e;
    e.reserve(test.size());
    for (const auto& s : test.samples) e.push_back(std::abs(s.target - model.predict(s.window, s.date)));
    return e;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

GrangerResult granger_test(const SeriesFrame& frame, const std::string& target, const std::string& candidate,
                           const std::vector<std::string>& controls, const GrangerConfig& config,
                           const ModelBuilder& builder) {
    config.validate();
    if (candidate == target) fail(ErrorCode::InvalidArgument, "granger: candidate equals target");
    std::vector<std::string> z;
    for (const auto& c : controls) {
        if (c != candidate && c != target && std::find(z.begin(), z.end(), c) == z.end()) z.push_back(c);
    }
    auto with_x = z;
    with_x.push_back(candidate);
    auto restricted = make_windows(frame, target, z, config.lag);
    auto augmented = make_windows(frame, target, with_x, config.lag);
    align_sets(restricted, augmented);

    const std::size_t n = restricted.size();
    const auto n_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(n)));
    if (n_test < 5 || n_test >= n) {
        fail(ErrorCode::EmptyDataset, "granger: " + std::to_string(n) + " aligned samples leave no usable test split");
    }
    const std::size_t n_train = n - n_test;
    const auto r_train = restricted.subset(0, n_train), r_test = restricted.subset(n_train, n);
    const auto a_train = augmented.subset(0, n_train), a_test = augmented.subset(n_train, n);
    check_aligned(r_test, a_test);

    const ModelBuilder& build = builder ? builder : default_model_builder(config);
    std::vector<SeedRun> runs;
    for (int k = 0; k < config.seeds; ++k) {
        const std::uint64_t seed = k == 0 ? config.seed : derive_seed(config.seed, static_cast<std::uint64_t>(k));
        const auto factory = build(seed);
        const auto model_r = factory(r_train);
        const auto model_a = factory(a_train);
        const auto err_r = abs_errors(*model_r, r_test);
        const auto err_a = abs_errors(*model_a, a_test);
        runs.push_back({wilcoxon_signed_rank(err_a, err_r, Alternative::Less), mean(err_r), mean(err_a), seed});
    }

    std::vector<std::size_t> order(runs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return runs[x].test.p_value < runs[y].test.p_value || (runs[x].test.p_value == runs[y].test.p_value && x < y);
    });
    const std::size_t mid = (runs.size() - 1) / 2;
    const SeedRun& rep = runs[order[mid]];

    GrangerResult result;
    result.target = target;
    result.candidate = candidate;
    result.base_model = to_string(config.base);
    result.n_pairs = rep.test.n;
    result.statistic = rep.test.statistic;
    result.p_value = runs.size() % 2 == 1
                         ? rep.test.p_value
                         : 0.5 * (rep.test.p_value + runs[order[mid + 1]].test.p_value);
    result.mae_restricted = rep.mae_restricted;
    result.mae_augmented = rep.mae_augmented;
    result.seed = rep.seed;
    result.status = rep.test.degenerate ? "degenerate" : "ok";
    for (const auto& r : runs) result.seed_p_values.push_back(r.test.p_value);
    result.test_dates = r_test.dates();
    return result;
}

std::vector<GrangerResult> granger_matrix(const SeriesFrame& frame, const std::vector<std::string>& targets,
                                          const std::map<std::string, std::vector<std::string>>& candidates,
                                          const std::map<std::string, std::vector<std::string>>& controls,
                                          const GrangerConfig& config, unsigned jobs,
                                          const ModelBuilder& builder) {
    std::vector<GrangerResult> cells;
    for (const auto& t : targets) {
        auto it = candidates.find(t);
        if (it == candidates.end()) continue;
        std::set<std::string> sorted(it->second.begin(), it->second.end());
        for (const auto& c : sorted) {
            GrangerResult r;
            r.target = t;
            r.candidate = c;
            r.base_model = to_string(config.base);
            r.seed = config.seed;
            cells.push_back(std::move(r));
        }
    }
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        auto& cell = cells[i];
        auto ctl = controls.find(cell.target);
        const std::vector<std::string> z = ctl == controls.end() ? std::vector<std::string>{} : ctl->second;
        try {
            cell = granger_test(frame, cell.target, cell.candidate, z, config, builder);
        } catch (const Error& e) {
            cell.status = std::string("failed: ") + to_string(e.code()) + ": " + e.what();
            cell.p_value = std::numeric_limits<double>::quiet_NaN();
        }
    });
    return cells;
}

}  // namespace ce
