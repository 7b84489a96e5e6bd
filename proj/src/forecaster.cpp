#include "causal_energy/forecaster.hpp"

#include "causal_energy/error.hpp"

#include <algorithm>

namespace ce {

std::optional<BaseModel> parse_base_model(std::string_view name) {
    if (name == "lstm") return BaseModel::Lstm;
    if (name == "prophet") return BaseModel::Prophet;
    return std::nullopt;
}

const char* to_string(BaseModel model) noexcept {
    return model == BaseModel::Lstm ? "lstm" : "prophet";
}

ForecasterFactory persistence_factory() {
    return [](const SupervisedSet& train) -> std::unique_ptr<Forecaster> {
        return std::make_unique<PersistenceForecaster>(train.feature_names, train.lag);
    };
}

std::vector<double> bind_window(const Forecaster& model, std::span<const double> window,
                                const std::vector<std::string>& names) {
    const auto& expected = model.feature_names();
    const auto lag = static_cast<std::size_t>(model.lag());
    if (names.size() != expected.size()) {
        fail(ErrorCode::InvalidArgument, "feature count mismatch: model expects " +
                                             std::to_string(expected.size()) + ", got " +
                                             std::to_string(names.size()));
    }
    if (window.size() != lag * names.size()) {
        fail(ErrorCode::InvalidArgument, "window has " + std::to_string(window.size()) +
                                             " values, expected " + std::to_string(lag * names.size()));
    }
    std::vector<std::size_t> source(expected.size());
    for (std::size_t d = 0; d < expected.size(); ++d) {
        auto it = std::find(names.begin(), names.end(), expected[d]);
        if (it == names.end()) fail(ErrorCode::InvalidArgument, "window lacks feature '" + expected[d] + "'");
        source[d] = static_cast<std::size_t>(it - names.begin());
    }
    std::vector<double> out(window.size());
    const std::size_t dims = expected.size();
    for (std::size_t r = 0; r < lag; ++r) {
        for (std::size_t d = 0; d < dims; ++d) out[r * dims + d] = window[r * dims + source[d]];
    }
    return out;
}

}  // namespace ce
