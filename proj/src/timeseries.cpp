#include "causal_energy/timeseries.hpp"

#include "causal_energy/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace ce {

using namespace std::chrono;

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    auto parse = [](std::string_view part, auto& out) {
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        return ec == std::errc{} && ptr == part.data() + part.size();
    };
    if (!parse(text.substr(0, 4), y) || !parse(text.substr(5, 2), m) ||
        !parse(text.substr(8, 2), d)) {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

std::string format_date(Date date) {
    const year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

Date make_date(int y, unsigned m, unsigned d) {
    return sys_days{year_month_day{year{y}, month{m}, day{d}}};
}

unsigned month_of(Date date) {
    return static_cast<unsigned>(year_month_day{date}.month());
}

TimeIndex::TimeIndex(std::vector<Date> dates) : dates_(std::move(dates)) {
    for (std::size_t i = 1; i < dates_.size(); ++i) {
        if (dates_[i] <= dates_[i - 1]) {
            fail(ErrorCode::InvalidArgument,
                 "time index not strictly increasing at " + format_date(dates_[i]));
        }
    }
}

TimeIndex TimeIndex::daily(Date first, std::size_t count) {
    std::vector<Date> dates(count);
    for (std::size_t i = 0; i < count; ++i) dates[i] = first + days{static_cast<int>(i)};
    return TimeIndex(std::move(dates));
}

bool TimeIndex::contiguous() const noexcept {
    for (std::size_t i = 1; i < dates_.size(); ++i) {
        if (dates_[i] - dates_[i - 1] != days{1}) return false;
    }
    return true;
}

std::optional<std::size_t> TimeIndex::position(Date date) const {
    auto it = std::lower_bound(dates_.begin(), dates_.end(), date);
    if (it == dates_.end() || *it != date) return std::nullopt;
    return static_cast<std::size_t>(it - dates_.begin());
}

SeriesFrame::SeriesFrame(TimeIndex index, std::vector<std::pair<std::string, Column>> columns)
    : index_(std::move(index)), columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        const auto& [name, values] = columns_[i];
        if (name.empty()) fail(ErrorCode::InvalidArgument, "empty column name");
        if (values.size() != index_.size()) {
            fail(ErrorCode::InvalidArgument, "column '" + name + "' has " +
                                                 std::to_string(values.size()) + " rows, index has " +
                                                 std::to_string(index_.size()));
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (columns_[j].first == name) {
                fail(ErrorCode::InvalidArgument, "duplicate column name '" + name + "'");
            }
        }
    }
}

std::vector<std::string> SeriesFrame::column_names() const {
    std::vector<std::string> names;
    names.reserve(columns_.size());
    for (const auto& c : columns_) names.push_back(c.first);
    return names;
}

bool SeriesFrame::has(std::string_view name) const noexcept {
    return std::any_of(columns_.begin(), columns_.end(),
                       [&](const auto& c) { return c.first == name; });
}

const Column& SeriesFrame::column(std::string_view name) const {
    for (const auto& c : columns_) {
        if (c.first == name) return c.second;
    }
    fail(ErrorCode::InvalidArgument, "unknown column '" + std::string(name) + "'");
}

SeriesFrame SeriesFrame::with_column(std::string name, Column values) const {
    if (has(name)) fail(ErrorCode::InvalidArgument, "column '" + name + "' already exists");
    auto columns = columns_;
    columns.emplace_back(std::move(name), std::move(values));
    return SeriesFrame(index_, std::move(columns));
}

SeriesFrame SeriesFrame::without_column(std::string_view name) const {
    (void)column(name);
    auto columns = columns_;
    std::erase_if(columns, [&](const auto& c) { return c.first == name; });
    return SeriesFrame(index_, std::move(columns));
}

SeriesFrame SeriesFrame::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows()) fail(ErrorCode::InvalidArgument, "slice out of range");
    std::vector<Date> dates(index_.dates().begin() + begin, index_.dates().begin() + end);
    std::vector<std::pair<std::string, Column>> columns;
    columns.reserve(columns_.size());
    for (const auto& [name, values] : columns_) {
        columns.emplace_back(name, Column(values.begin() + begin, values.begin() + end));
    }
    return SeriesFrame(TimeIndex(std::move(dates)), std::move(columns));
}

SeriesFrame concat(const SeriesFrame& earlier, const SeriesFrame& later) {
    if (earlier.column_names() != later.column_names()) {
        fail(ErrorCode::InvalidArgument, "concat: column sets differ");
    }
    std::vector<Date> dates = earlier.index().dates();
    dates.insert(dates.end(), later.index().dates().begin(), later.index().dates().end());
    std::vector<std::pair<std::string, Column>> columns;
    for (std::size_t i = 0; i < earlier.cols(); ++i) {
        Column values = earlier.column_at(i).second;
        const Column& tail = later.column_at(i).second;
        values.insert(values.end(), tail.begin(), tail.end());
        columns.emplace_back(earlier.column_at(i).first, std::move(values));
    }
    return SeriesFrame(TimeIndex(std::move(dates)), std::move(columns));
}

namespace {

constexpr std::pair<Transform, const char*> kTransformNames[] = {
    {Transform::Raw, "raw"},
    {Transform::Lag, "lag"},
    {Transform::CyclicalMonth, "cyclical-month"},
    {Transform::MonthNumber, "month-number"},
    {Transform::WorkdayFlag, "workday-flag"},
    {Transform::WarDummy, "war-dummy"},
    {Transform::HddFromTemperature, "hdd-from-temperature"},
};

}  // namespace

std::optional<Transform> parse_transform(std::string_view name) {
    for (const auto& [t, n] : kTransformNames) {
        if (name == n) return t;
    }
    return std::nullopt;
}

const char* to_string(Transform transform) noexcept {
    for (const auto& [t, n] : kTransformNames) {
        if (t == transform) return n;
    }
    return "?";
}

std::vector<std::string> output_names(const FeatureSpec& spec) {
    if (spec.transform == Transform::CyclicalMonth) {
        const std::string stem = spec.output.empty() ? "Month" : spec.output;
        return {stem + "_sin", stem + "_cos"};
    }
    if (!spec.output.empty()) return {spec.output};
    switch (spec.transform) {
    case Transform::Raw: return {spec.source};
    case Transform::Lag: return {spec.source + "-" + std::to_string(spec.lag)};
    case Transform::MonthNumber: return {"Month"};
    case Transform::WorkdayFlag: return {"Workday"};
    case Transform::WarDummy: return {"War"};
    case Transform::HddFromTemperature: return {"HDD"};
    case Transform::CyclicalMonth: break;
    }
    return {};
}

Column lag(std::span<const Value> column, int k) {
    if (k < 1) fail(ErrorCode::InvalidArgument, "lag must be >= 1, got " + std::to_string(k));
    const auto shift = static_cast<std::size_t>(k);
    if (shift >= column.size()) {
        fail(ErrorCode::InvalidArgument, "lag " + std::to_string(k) + " >= column length " +
                                             std::to_string(column.size()));
    }
    Column out(column.size());
    for (std::size_t t = shift; t < column.size(); ++t) out[t] = column[t - shift];
    return out;
}

int war_dummy(Date date, Date anchor) noexcept {
    return date < anchor ? 0 : 1;
}

std::pair<double, double> cyclical_month(Date date) {
    const double angle = 2.0 * std::numbers::pi * (month_of(date) - 1) / 12.0;
    return {std::sin(angle), std::cos(angle)};
}

double hdd_from_temperature(double mean_temp, double base) {
    return std::max(0.0, base - mean_temp);
}

Standardized standardize(std::span<const Value> column) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : column) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n < 2) fail(ErrorCode::DegenerateColumn, "standardize needs >= 2 present values");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& v : column) {
        if (v) ss += (*v - mean) * (*v - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
        fail(ErrorCode::DegenerateColumn, "column has zero variance");
    }
    Standardized out{Column(column.size()), mean, sd};
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (column[i]) out.values[i] = (*column[i] - mean) / sd;
    }
    return out;
}

Column destandardize(std::span<const Value> column, double mean, double sd) {
    Column out(column.size());
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (column[i]) out[i] = *column[i] * sd + mean;
    }
    return out;
}

}  // namespace ce
