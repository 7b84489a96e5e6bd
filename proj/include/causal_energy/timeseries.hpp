#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ce {

using Date = std::chrono::sys_days;
using Value = std::optional<double>;
using Column = std::vector<Value>;

/// Parses YYYY-MM-DD; returns nullopt for anything else (including invalid days).
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);
Date make_date(int year, unsigned month, unsigned day);
unsigned month_of(Date date);

/// Ordered daily dates, strictly increasing.
class TimeIndex {
public:
    TimeIndex() = default;
    explicit TimeIndex(std::vector<Date> dates);

    static TimeIndex daily(Date first, std::size_t count);

    [[nodiscard]] std::size_t size() const noexcept { return dates_.size(); }
    [[nodiscard]] bool empty() const noexcept { return dates_.empty(); }
    [[nodiscard]] Date operator[](std::size_t i) const { return dates_[i]; }
    [[nodiscard]] Date front() const { return dates_.front(); }
    [[nodiscard]] Date back() const { return dates_.back(); }
    [[nodiscard]] const std::vector<Date>& dates() const noexcept { return dates_; }
    [[nodiscard]] bool contiguous() const noexcept;
    [[nodiscard]] std::optional<std::size_t> position(Date date) const;

private:
    std::vector<Date> dates_;
};

/// Aligned daily multivariate series. Immutable once built: "modifiers" return
/// a new frame.
class SeriesFrame {
public:
    SeriesFrame() = default;
    SeriesFrame(TimeIndex index, std::vector<std::pair<std::string, Column>> columns);

    [[nodiscard]] const TimeIndex& index() const noexcept { return index_; }
    [[nodiscard]] std::size_t rows() const noexcept { return index_.size(); }
    [[nodiscard]] std::size_t cols() const noexcept { return columns_.size(); }
    [[nodiscard]] std::vector<std::string> column_names() const;
    [[nodiscard]] bool has(std::string_view name) const noexcept;
    /// Throws invalid-argument naming the column if absent.
    [[nodiscard]] const Column& column(std::string_view name) const;
    [[nodiscard]] const std::pair<std::string, Column>& column_at(std::size_t i) const {
        return columns_[i];
    }

    [[nodiscard]] SeriesFrame with_column(std::string name, Column values) const;
    [[nodiscard]] SeriesFrame without_column(std::string_view name) const;
    /// Rows [begin, end).
    [[nodiscard]] SeriesFrame slice(std::size_t begin, std::size_t end) const;

private:
    TimeIndex index_;
    std::vector<std::pair<std::string, Column>> columns_;
};

/// Stacks `later` under `earlier`; both must carry the same column names and
/// `later` must start after `earlier` ends.
SeriesFrame concat(const SeriesFrame& earlier, const SeriesFrame& later);

enum class Transform {
    Raw,
    Lag,
    CyclicalMonth,
    MonthNumber,
    WorkdayFlag,
    WarDummy,
    HddFromTemperature,
};

std::optional<Transform> parse_transform(std::string_view name);
const char* to_string(Transform transform) noexcept;

struct FeatureSpec {
    std::string source;  // unused by the date-derived transforms
    Transform transform = Transform::Raw;
    int lag = 1;
    Date anchor = make_date(2022, 2, 24);
    double hdd_base = 15.5;
    std::string output;  // empty = default naming
};

/// Deterministic names of the columns a spec adds ("HDD-1", "War", ...).
std::vector<std::string> output_names(const FeatureSpec& spec);

// ---- pure transforms ------------------------------------------------------

Column lag(std::span<const Value> column, int k);
int war_dummy(Date date, Date anchor) noexcept;
std::pair<double, double> cyclical_month(Date date);
double hdd_from_temperature(double mean_temp, double base = 15.5);

struct Standardized {
    Column values;
    double mean = 0.0;
    double sd = 1.0;
};

/// Sample mean/sd over present entries; zero variance raises degenerate-column.
Standardized standardize(std::span<const Value> column);
Column destandardize(std::span<const Value> column, double mean, double sd);

}  // namespace ce
