#pragma once
// Shared test fixtures: small frames and a seeded stand-in for the gas-demand
// dataset with the same column layout and a planted step at 2022-02-24.

#include "causal_energy/error.hpp"
#include "causal_energy/ingest.hpp"
#include "causal_energy/rng.hpp"
#include "causal_energy/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

namespace fixtures {

inline ce::Column col(std::initializer_list<double> v) {
    ce::Column c;
    for (double x : v) c.emplace_back(x);
    return c;
}

inline ce::Column col(const std::vector<double>& v) {
    ce::Column c;
    for (double x : v) c.emplace_back(x);
    return c;
}

inline ce::SeriesFrame frame(ce::Date start, std::vector<std::pair<std::string, ce::Column>> cols) {
    const std::size_t n = cols.empty() ? 0 : cols.front().second.size();
    return ce::SeriesFrame(ce::TimeIndex::daily(start, n), std::move(cols));
}

/// Daily frame shaped like the published dataset. LDZ follows HDD-1, IND and
/// GTP drop after the anchor, EU storage/EU LNG/Workday are unrelated noise
/// for LDZ.
inline ce::SeriesFrame energy_fixture(std::uint64_t seed, ce::Date start = ce::make_date(2018, 1, 1),
                                      ce::Date end = ce::make_date(2023, 7, 31)) {
    const auto n = static_cast<std::size_t>((end - start).count() + 1);
    const auto anchor = ce::make_date(2022, 2, 24);
    ce::Rng rng(seed);
    std::vector<double> ngd(n), ldz(n), ind(n), gtp(n), hdd(n), rus(n), price(n), wind(n), solar(n), nuclear(n),
        ukprod(n), storage(n), lng(n), index(n), workday(n);
    double temp_noise = 0.0, wind_state = 0.0, storage_state = 50.0, ar = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const ce::Date d = start + std::chrono::days(static_cast<int>(t));
        const double doy = static_cast<double>(t % 365);
        const bool war = d >= anchor;
        const double since = war ? static_cast<double>((d - anchor).count()) : 0.0;
        temp_noise = 0.7 * temp_noise + 2.0 * rng.normal();
        const double temp = 10.0 - 9.0 * std::cos(2 * std::numbers::pi * (doy - 15.0) / 365.25) + temp_noise;
        hdd[t] = ce::hdd_from_temperature(temp);
        const unsigned wd = std::chrono::weekday(d).iso_encoding();
        workday[t] = wd <= 5 ? 1.0 : 0.0;
        wind_state = 0.8 * wind_state + rng.normal();
        wind[t] = 300.0 + 80.0 * wind_state;
        solar[t] = 100.0 + 80.0 * std::sin(2 * std::numbers::pi * (doy - 80.0) / 365.25) + 10.0 * rng.normal();
        nuclear[t] = 900.0 + 50.0 * rng.normal();
        ukprod[t] = 100.0 + 5.0 * rng.normal();
        storage_state = std::clamp(storage_state + rng.normal(), 0.0, 100.0);
        storage[t] = storage_state;
        lng[t] = 200.0 + 20.0 * rng.normal();
        index[t] = 100.0 + 3.0 * rng.normal();
        rus[t] = war ? std::max(0.0, 150.0 - 0.6 * since) + 5.0 * rng.normal() : 150.0 + 5.0 * rng.normal();
        price[t] = war ? 40.0 + 120.0 * std::exp(-since / 250.0) + 5.0 * rng.normal() : 20.0 + 3.0 * rng.normal();
        const double hdd_prev = t > 0 ? hdd[t - 1] : hdd[t];
        ar = 0.5 * ar + rng.normal();
        ldz[t] = 80.0 + 9.0 * hdd_prev + 3.0 * hdd[t] + 4.0 * ar - (war ? 10.0 : 0.0);
        ind[t] = 110.0 + 12.0 * workday[t] + 4.0 * rng.normal() - (war ? 20.0 : 0.0);
        gtp[t] = 70.0 - 0.05 * (wind[t] - 300.0) + 5.0 * rng.normal() - (war ? 8.0 : 0.0);
        ngd[t] = ldz[t] + ind[t] + gtp[t];
    }
    return frame(start, {{"NGD", col(ngd)},
                         {"LDZ", col(ldz)},
                         {"IND", col(ind)},
                         {"GTP", col(gtp)},
                         {"HDD", col(hdd)},
                         {"Rus", col(rus)},
                         {"THE Price", col(price)},
                         {"DE wind", col(wind)},
                         {"DE solar", col(solar)},
                         {"French nuclear", col(nuclear)},
                         {"UK NL Production", col(ukprod)},
                         {"EU storage", col(storage)},
                         {"EU LNG", col(lng)},
                         {"DE index", col(index)},
                         {"Workday", col(workday)}});
}

inline std::string write_energy_csv(const std::filesystem::path& path, std::uint64_t seed) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    ce::write_csv(energy_fixture(seed), out, "Date");
    return path.string();
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ce_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace fixtures

#define CHECK_CE_ERROR(expr, expected)                                   \
    do {                                                                 \
        bool ce_thrown_ = false;                                         \
        try {                                                            \
            (void)(expr);                                                \
        } catch (const ce::Error& ce_e_) {                               \
            ce_thrown_ = true;                                           \
            CHECK_MESSAGE(ce_e_.code() == (expected), ce_e_.what());     \
        }                                                                \
        CHECK_MESSAGE(ce_thrown_, "expected ce::Error from " #expr);     \
    } while (0)
