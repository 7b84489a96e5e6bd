#pragma once

#include "causal_energy/counterfactual.hpp"
#include "causal_energy/granger.hpp"
#include "causal_energy/ingest.hpp"
#include "causal_energy/mutual_info.hpp"
#include "causal_energy/synth.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ce {

inline constexpr const char* kToolVersion = "0.3.0";

/// JSON keys mirror the field names below; unknown keys are rejected.
struct RunConfig {
    std::string dataset;
    std::string schema;  // empty: built-in energy layout
    std::string output_dir = "out";
    std::uint64_t seed = 42;
    unsigned jobs = 1;
    BaseModel base_model = BaseModel::Lstm;
    std::vector<std::string> targets;  // empty: schema targets
    std::vector<std::string> factors;  // empty: schema predictors

    struct Mi {
        int k = 4;
        double quantile = 0.9;
        std::set<std::string> forced{"War", "Rus"};
        SelectionRule rule = SelectionRule::CumulativeShare;
    } mi;

    struct Granger {
        int lag = 7;
        double test_fraction = 0.2;
        int seeds = 1;
        std::vector<std::string> candidates;  // empty: MI-selected factors per target
        std::optional<std::vector<std::string>> controls;  // unset: MI-selected factors
    } granger;

    struct Intervention {
        std::string anchor = "2022-02-24";
        std::string horizon_end;  // empty: last date
        ExoPolicy exo = ExoPolicy::Observed;
        std::set<std::string> freeze;
        int lag = 7;
        std::optional<std::vector<std::string>> controls;
        bool save_models = false;
    } intervention;

    TrainConfig train;
    ProphetConfig prophet;
    GeneratorSpec synth;

    static RunConfig from_json(std::string_view text);
    static RunConfig load(const std::string& path);
    [[nodiscard]] std::string to_json() const;
    void validate() const;
};

struct StageResult {
    std::string stage;
    int status = 0;  // 0 ok, 1 partial
    std::vector<std::string> files;
    std::vector<std::string> failures;
    std::string summary_json;
};

struct Dataset {
    SeriesFrame frame;
    DatasetSchema schema;
    std::string sha256;
    std::size_t gap_rows = 0;
    std::map<std::string, std::size_t> parse_failures;
};

/// Loads the CSV named by config.dataset and derives the schema features that
/// are not already present as columns.
Dataset load_dataset(const RunConfig& config);

/// Model inputs for a factor list: "Month" expands into its cyclic pair when present.
std::vector<std::string> model_features(const SeriesFrame& frame, const std::vector<std::string>& factors);

StageResult run_ingest(const RunConfig& config);
StageResult run_mi(const RunConfig& config);
StageResult run_granger(const RunConfig& config);
StageResult run_counterfactual(const RunConfig& config);
StageResult run_synth(const RunConfig& config);

/// Dispatch by name: ingest, mi, granger, counterfactual, synth.
StageResult run_stage(std::string_view stage, const RunConfig& config);

}  // namespace ce
