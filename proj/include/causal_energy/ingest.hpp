#pragma once

#include "causal_energy/timeseries.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ce {

enum class ColumnKind { Target, Predictor, Auxiliary };

struct ColumnSchema {
    std::string name;
    std::string unit;
    ColumnKind kind = ColumnKind::Predictor;
};

/// Required CSV columns plus derived features. JSON form:
///   {"date_column": "Date", "date_format": "%Y-%m-%d", "require_sectors": true,
///    "columns": {"NGD": {"unit": "mcm/day", "kind": "target"}, ...},
///    "features": [{"transform": "lag", "source": "HDD", "k": 1}, ...]}
struct DatasetSchema {
    std::string date_column = "date";
    std::string date_format = "%Y-%m-%d";
    bool require_sectors = false;
    std::vector<ColumnSchema> columns;
    std::vector<FeatureSpec> features;

    /// The gas-demand layout: four sector targets, observed predictors and the
    /// derived HDD-1 / War / Month features.
    static DatasetSchema energy_default();
    static DatasetSchema from_json(std::string_view text);
    static DatasetSchema load(const std::string& path);
    [[nodiscard]] std::string to_json() const;

    [[nodiscard]] std::vector<std::string> targets() const;
    /// Observed predictors followed by derived feature names.
    [[nodiscard]] std::vector<std::string> predictors() const;
    void validate() const;
};

inline constexpr const char* kSectors[] = {"NGD", "LDZ", "IND", "GTP"};

struct LoadResult {
    SeriesFrame frame;
    std::size_t gap_rows = 0;
    std::map<std::string, std::size_t> parse_failures;
    std::string sha256;
};

LoadResult load_csv(const std::string& path, const DatasetSchema& schema);
/// Same as load_csv, from in-memory bytes (`source` labels error messages).
LoadResult parse_csv(std::string_view bytes, const DatasetSchema& schema,
                     std::string_view source = "<memory>");

/// Ingest CSV format: `date` header then columns in frame order; empty cell = missing.
void write_csv(const SeriesFrame& frame, std::ostream& out, std::string_view date_column = "date");

SeriesFrame build_features(const SeriesFrame& frame, const std::vector<FeatureSpec>& specs);

struct Sample {
    Date date;
    std::vector<double> window;  // lag x features, row-major, oldest row first
    double target = 0.0;
};

struct SupervisedSet {
    std::string target;
    std::vector<std::string> feature_names;
    int lag = 0;
    std::vector<Sample> samples;

    [[nodiscard]] std::size_t dims() const noexcept { return feature_names.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
    [[nodiscard]] std::vector<Date> dates() const;
    [[nodiscard]] SupervisedSet subset(std::size_t begin, std::size_t end) const;
    [[nodiscard]] SupervisedSet filter(const std::function<bool(Date)>& keep) const;
};

/// Window feature order: target first (its own lags), then `features` minus the target.
SupervisedSet make_windows(const SeriesFrame& frame, std::string_view target,
                           const std::vector<std::string>& features, int lag);

/// Window columns for one target: target first, then unique features.
std::vector<std::string> window_columns(std::string_view target,
                                        const std::vector<std::string>& features);

std::string sha256_hex(std::string_view bytes);

}  // namespace ce
