#pragma once

#include "causal_energy/forecaster.hpp"
#include "causal_energy/ingest.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ce {

/// Single-layer LSTM regressor parameters, stored flat so the optimiser and
/// the gradient check can treat them as one vector. Layout (row-major):
///   W  [4H x D]  input weights, gate blocks in order i, f, o, g
///   U  [4H x H]  recurrent weights, same gate order
///   b  [4H]      gate biases
///   w  [H]       output head
///   c  [1]       output bias
struct LstmParams {
    std::size_t inputs = 0;
    std::size_t hidden = 0;
    std::vector<double> values;

    static std::size_t count(std::size_t inputs, std::size_t hidden) noexcept {
        return 4 * hidden * inputs + 4 * hidden * hidden + 4 * hidden + hidden + 1;
    }
    [[nodiscard]] std::size_t w_offset() const noexcept { return 0; }
    [[nodiscard]] std::size_t u_offset() const noexcept { return 4 * hidden * inputs; }
    [[nodiscard]] std::size_t b_offset() const noexcept { return u_offset() + 4 * hidden * hidden; }
    [[nodiscard]] std::size_t head_offset() const noexcept { return b_offset() + 4 * hidden; }
    [[nodiscard]] std::size_t head_bias_offset() const noexcept { return head_offset() + hidden; }
};

/// Xavier-uniform matrices, zero biases except the forget gate (1.0), zero head bias.
LstmParams init_params(std::uint64_t seed, std::size_t inputs, std::size_t hidden);

/// Per-step activations kept for backpropagation.
struct LstmCache {
    std::size_t steps = 0;
    std::vector<double> gates;   // steps x 4H, post-activation (i, f, o, g)
    std::vector<double> cell;    // (steps + 1) x H, row 0 is the zero state
    std::vector<double> hidden;  // (steps + 1) x H
};

/// Runs the recurrence over `window` (steps x inputs) from a zero state and
/// returns head . h_last + bias. Throws invalid-argument on non-finite input.
double forward(const LstmParams& params, std::span<const double> window, LstmCache* cache = nullptr);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Mean squared error over the batch and its exact BPTT gradient.
LossGrad loss_and_grad(const LstmParams& params, std::span<const Sample> batch);

struct TrainConfig {
    int lag = 7;
    std::size_t hidden = 32;
    int epochs = 200;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::uint64_t seed = 42;
    double validation_fraction = 0.2;
    int patience = 20;
    double clip_norm = 5.0;

    void validate() const;
};

struct FitReport {
    double train_mse = 0.0;
    double validation_mse = 0.0;
    int epochs_run = 0;
    int best_epoch = 0;
    std::uint64_t seed = 0;
    std::vector<double> validation_history;
    std::vector<double> best_history;  // best-so-far validation MSE after each epoch
};

class LstmModel final : public Forecaster {
public:
    LstmModel() = default;
    LstmModel(LstmParams params, std::string target, std::vector<std::string> features, int lag,
              std::vector<double> feature_mean, std::vector<double> feature_sd, double target_mean,
              double target_sd, std::uint64_t seed);

    const std::vector<std::string>& feature_names() const override { return features_; }
    int lag() const override { return lag_; }
    double predict(std::span<const double> window, Date date) const override;
    std::string kind() const override { return "lstm"; }

    [[nodiscard]] const LstmParams& params() const noexcept { return params_; }
    [[nodiscard]] const std::string& target() const noexcept { return target_; }

    [[nodiscard]] std::string to_json() const;
    static LstmModel from_json(std::string_view text);

private:
    LstmParams params_;
    std::string target_;
    std::vector<std::string> features_;
    int lag_ = 0;
    std::vector<double> feature_mean_;
    std::vector<double> feature_sd_;
    double target_mean_ = 0.0;
    double target_sd_ = 1.0;
    std::uint64_t seed_ = 0;
};

struct TrainedLstm {
    LstmModel model;
    FitReport report;
};

/// Chronological split (validation = trailing fraction), Adam with global-norm
/// clipping, early stopping on validation MSE; returns the best-validation model.
TrainedLstm train(const SupervisedSet& set, const TrainConfig& config);

/// Forward pass plus inverse standardisation; the window's columns are bound
/// to the model's features by name.
double predict_one(const LstmModel& model, std::span<const double> window,
                   const std::vector<std::string>& names);

ForecasterFactory lstm_factory(TrainConfig config);

}  // namespace ce
