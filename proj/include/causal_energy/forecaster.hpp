#pragma once

#include "causal_energy/ingest.hpp"
#include "causal_energy/timeseries.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ce {

enum class BaseModel { Lstm, Prophet };

std::optional<BaseModel> parse_base_model(std::string_view name);
const char* to_string(BaseModel model) noexcept;

/// One-step forecaster contract shared by the LSTM and the Prophet-style model.
/// A window is `lag()` rows by `feature_names().size()` columns, row-major,
/// oldest row first, in original units; `date` is the date being predicted.
class Forecaster {
public:
    virtual ~Forecaster() = default;

    [[nodiscard]] virtual const std::vector<std::string>& feature_names() const = 0;
    [[nodiscard]] virtual int lag() const = 0;
    [[nodiscard]] virtual double predict(std::span<const double> window, Date date) const = 0;
    [[nodiscard]] virtual std::string kind() const = 0;
};

using ForecasterFactory = std::function<std::unique_ptr<Forecaster>(const SupervisedSet& train)>;

/// Predicts the most recent value of its first window column (the target's own lag).
class PersistenceForecaster final : public Forecaster {
public:
    PersistenceForecaster(std::vector<std::string> features, int lag)
        : features_(std::move(features)), lag_(lag) {}

    const std::vector<std::string>& feature_names() const override { return features_; }
    int lag() const override { return lag_; }
    double predict(std::span<const double> window, Date) const override {
        return window[(static_cast<std::size_t>(lag_) - 1) * features_.size()];
    }
    std::string kind() const override { return "persistence"; }

private:
    std::vector<std::string> features_;
    int lag_;
};

ForecasterFactory persistence_factory();

/// Reorders a window given under `names` into the forecaster's feature order.
/// Throws invalid-argument naming any missing or extra feature.
std::vector<double> bind_window(const Forecaster& model, std::span<const double> window,
                                const std::vector<std::string>& names);

}  // namespace ce
