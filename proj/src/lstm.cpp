#include "causal_energy/lstm.hpp"

#include "causal_energy/error.hpp"
#include "causal_energy/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ce {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Reusable scratch for one sample's forward + backward pass.
class Backprop {
public:
    /// Adds scale * d(prediction - target)^2 / dparams into grad; returns the squared error.
    double accumulate(const LstmParams& p, std::span<const double> window, double target, double scale,
                      std::vector<double>& grad) {
        const std::size_t D = p.inputs, H = p.hidden;
        const double pred = forward(p, window, &cache_);
        const double err = pred - target;
        const double dpred = 2.0 * err * scale;
        const std::size_t T = cache_.steps;

        const double* U = p.values.data() + p.u_offset();
        const double* head = p.values.data() + p.head_offset();
        double* gW = grad.data() + p.w_offset();
        double* gU = grad.data() + p.u_offset();
        double* gb = grad.data() + p.b_offset();
        double* ghead = grad.data() + p.head_offset();

        const double* h_last = cache_.hidden.data() + T * H;
        for (std::size_t j = 0; j < H; ++j) ghead[j] += dpred * h_last[j];
        grad[p.head_bias_offset()] += dpred;

        dh_.assign(H, 0.0);
        dc_.assign(H, 0.0);
        dz_.resize(4 * H);
        for (std::size_t j = 0; j < H; ++j) dh_[j] = dpred * head[j];

        for (std::size_t t = T; t-- > 0;) {
            const double* g = cache_.gates.data() + t * 4 * H;
            const double* c_prev = cache_.cell.data() + t * H;
            const double* c_now = cache_.cell.data() + (t + 1) * H;
            const double* h_prev = cache_.hidden.data() + t * H;
            const double* x = window.data() + t * D;
            for (std::size_t j = 0; j < H; ++j) {
                const double ig = g[j], fg = g[H + j], og = g[2 * H + j], gg = g[3 * H + j];
                const double tc = std::tanh(c_now[j]);
                const double d_o = dh_[j] * tc;
                const double dc = dc_[j] + dh_[j] * og * (1.0 - tc * tc);
                dz_[j] = dc * gg * ig * (1.0 - ig);
                dz_[H + j] = dc * c_prev[j] * fg * (1.0 - fg);
                dz_[2 * H + j] = d_o * og * (1.0 - og);
                dz_[3 * H + j] = dc * ig * (1.0 - gg * gg);
                dc_[j] = dc * fg;
            }
            std::fill(dh_.begin(), dh_.end(), 0.0);
            for (std::size_t r = 0; r < 4 * H; ++r) {
                const double dz = dz_[r];
                gb[r] += dz;
                double* gw_row = gW + r * D;
                for (std::size_t d = 0; d < D; ++d) gw_row[d] += dz * x[d];
                double* gu_row = gU + r * H;
                const double* u_row = U + r * H;
                for (std::size_t k = 0; k < H; ++k) {
                    gu_row[k] += dz * h_prev[k];
                    dh_[k] += u_row[k] * dz;
                }
            }
        }
        return err * err;
    }

private:
    LstmCache cache_;
    std::vector<double> dh_, dc_, dz_;
};

double mse(const LstmParams& p, std::span<const Sample> samples) {
    LstmCache cache;
    double sum = 0.0;
    for (const auto& s : samples) {
        const double e = forward(p, s.window, &cache) - s.target;
        sum += e * e;
    }
    return sum / static_cast<double>(samples.size());
}

}  // namespace

LstmParams init_params(std::uint64_t seed, std::size_t inputs, std::size_t hidden) {
    if (inputs < 1 || hidden < 1) fail(ErrorCode::InvalidArgument, "LSTM dims must be >= 1");
    LstmParams p{inputs, hidden, std::vector<double>(LstmParams::count(inputs, hidden), 0.0)};
    Rng rng(seed);
    // Xavier bound per gate matrix: fan_in = cols, fan_out = H.
    const double w_bound = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
    const double u_bound = std::sqrt(6.0 / static_cast<double>(hidden + hidden));
    const double head_bound = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    for (std::size_t i = 0; i < 4 * hidden * inputs; ++i) p.values[p.w_offset() + i] = rng.uniform(-w_bound, w_bound);
    for (std::size_t i = 0; i < 4 * hidden * hidden; ++i) p.values[p.u_offset() + i] = rng.uniform(-u_bound, u_bound);
    for (std::size_t j = 0; j < hidden; ++j) p.values[p.b_offset() + hidden + j] = 1.0;
    for (std::size_t j = 0; j < hidden; ++j) p.values[p.head_offset() + j] = rng.uniform(-head_bound, head_bound);
    return p;
}

double forward(const LstmParams& p, std::span<const double> window, LstmCache* cache) {
    const std::size_t D = p.inputs, H = p.hidden;
    if (D == 0 || window.size() % D != 0 || window.empty()) {
        fail(ErrorCode::InvalidArgument, "window size " + std::to_string(window.size()) +
                                             " is not a positive multiple of " + std::to_string(D));
    }
    for (double v : window) {
        if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "non-finite value in LSTM input window");
    }
    const std::size_t T = window.size() / D;
    LstmCache local;
    LstmCache& c = cache ? *cache : local;
    c.steps = T;
    c.gates.resize(T * 4 * H);
    c.cell.assign((T + 1) * H, 0.0);
    c.hidden.assign((T + 1) * H, 0.0);

    const double* W = p.values.data() + p.w_offset();
    const double* U = p.values.data() + p.u_offset();
    const double* b = p.values.data() + p.b_offset();
    for (std::size_t t = 0; t < T; ++t) {
        const double* x = window.data() + t * D;
        const double* h_prev = c.hidden.data() + t * H;
        const double* c_prev = c.cell.data() + t * H;
        double* g = c.gates.data() + t * 4 * H;
        for (std::size_t r = 0; r < 4 * H; ++r) {
            double z = b[r];
            const double* w_row = W + r * D;
            for (std::size_t d = 0; d < D; ++d) z += w_row[d] * x[d];
            const double* u_row = U + r * H;
            for (std::size_t k = 0; k < H; ++k) z += u_row[k] * h_prev[k];
            g[r] = r < 3 * H ? sigmoid(z) : std::tanh(z);
        }
        double* c_now = c.cell.data() + (t + 1) * H;
        double* h_now = c.hidden.data() + (t + 1) * H;
        for (std::size_t j = 0; j < H; ++j) {
            c_now[j] = g[H + j] * c_prev[j] + g[j] * g[3 * H + j];
            h_now[j] = g[2 * H + j] * std::tanh(c_now[j]);
        }
    }
    const double* head = p.values.data() + p.head_offset();
    const double* h_last = c.hidden.data() + T * H;
    double out = p.values[p.head_bias_offset()];
    for (std::size_t j = 0; j < H; ++j) out += head[j] * h_last[j];
    return out;
}

LossGrad loss_and_grad(const LstmParams& params, std::span<const Sample> batch) {
    if (batch.empty()) fail(ErrorCode::InvalidArgument, "loss_and_grad: empty batch");
    LossGrad out{0.0, std::vector<double>(params.values.size(), 0.0)};
    Backprop bp;
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const auto& s : batch) out.loss += bp.accumulate(params, s.window, s.target, scale, out.grad);
    out.loss *= scale;
    return out;
}

void TrainConfig::validate() const {
    if (lag < 1 || hidden < 1 || epochs < 1 || batch_size < 1 || patience < 1 ||
        !(learning_rate > 0.0) || !(clip_norm > 0.0)) {
        fail(ErrorCode::InvalidArgument, "train config values must all be positive");
    }
    if (!(validation_fraction > 0.0 && validation_fraction <= 0.5)) {
        fail(ErrorCode::InvalidArgument, "validation fraction must lie in (0, 0.5]");
    }
}

LstmModel::LstmModel(LstmParams params, std::string target, std::vector<std::string> features, int lag,
                     std::vector<double> feature_mean, std::vector<double> feature_sd, double target_mean,
                     double target_sd, std::uint64_t seed)
    : params_(std::move(params)),
      target_(std::move(target)),
      features_(std::move(features)),
      lag_(lag),
      feature_mean_(std::move(feature_mean)),
      feature_sd_(std::move(feature_sd)),
      target_mean_(target_mean),
      target_sd_(target_sd),
      seed_(seed) {
    if (params_.inputs != features_.size() || feature_mean_.size() != features_.size() ||
        feature_sd_.size() != features_.size() ||
        params_.values.size() != LstmParams::count(params_.inputs, params_.hidden)) {
        fail(ErrorCode::InvalidArgument, "inconsistent LSTM model dimensions");
    }
}

double LstmModel::predict(std::span<const double> window, Date) const {
    const std::size_t D = features_.size();
    if (window.size() != static_cast<std::size_t>(lag_) * D) {
        fail(ErrorCode::InvalidArgument, "window shape does not match (lag, features)");
    }
    std::vector<double> z(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
        z[i] = (window[i] - feature_mean_[i % D]) / feature_sd_[i % D];
    }
    return forward(params_, z) * target_sd_ + target_mean_;
}

std::string LstmModel::to_json() const {
    using json = nlohmann::json;
    const std::size_t D = params_.inputs, H = params_.hidden;
    json weights = json::object();
    static constexpr const char* gates[] = {"i", "f", "o", "g"};
    auto block = [&](std::size_t offset, std::size_t len) {
        return std::vector<double>(params_.values.begin() + static_cast<std::ptrdiff_t>(offset),
                                   params_.values.begin() + static_cast<std::ptrdiff_t>(offset + len));
    };
    for (std::size_t g = 0; g < 4; ++g) {
        weights[std::string("W_") + gates[g]] = block(params_.w_offset() + g * H * D, H * D);
        weights[std::string("U_") + gates[g]] = block(params_.u_offset() + g * H * H, H * H);
        weights[std::string("b_") + gates[g]] = block(params_.b_offset() + g * H, H);
    }
    weights["head_w"] = block(params_.head_offset(), H);
    weights["head_b"] = params_.values[params_.head_bias_offset()];
    json j{{"format", "causal-energy/lstm"},
           {"format_version", 1},
           {"dims", {{"inputs", D}, {"hidden", H}, {"lag", lag_}}},
           {"target", target_},
           {"features", features_},
           {"seed", seed_},
           {"standardization",
            {{"feature_mean", feature_mean_},
             {"feature_sd", feature_sd_},
             {"target_mean", target_mean_},
             {"target_sd", target_sd_}}},
           {"weights", weights}};
    return j.dump();
}

LstmModel LstmModel::from_json(std::string_view text) {
    using json = nlohmann::json;
    try {
        const json j = json::parse(text);
        if (j.at("format") != "causal-energy/lstm" || j.at("format_version") != 1) {
            fail(ErrorCode::InvalidArgument, "not a version-1 LSTM model document");
        }
        const std::size_t D = j.at("dims").at("inputs"), H = j.at("dims").at("hidden");
        LstmParams p{D, H, std::vector<double>(LstmParams::count(D, H))};
        const auto& w = j.at("weights");
        static constexpr const char* gates[] = {"i", "f", "o", "g"};
        auto put = [&](const json& arr, std::size_t offset, std::size_t len) {
            const auto v = arr.get<std::vector<double>>();
            if (v.size() != len) fail(ErrorCode::InvalidArgument, "weight block has wrong length");
            std::copy(v.begin(), v.end(), p.values.begin() + static_cast<std::ptrdiff_t>(offset));
        };
        for (std::size_t g = 0; g < 4; ++g) {
            put(w.at(std::string("W_") + gates[g]), p.w_offset() + g * H * D, H * D);
            put(w.at(std::string("U_") + gates[g]), p.u_offset() + g * H * H, H * H);
            put(w.at(std::string("b_") + gates[g]), p.b_offset() + g * H, H);
        }
        put(w.at("head_w"), p.head_offset(), H);
        p.values[p.head_bias_offset()] = w.at("head_b").get<double>();
        const auto& st = j.at("standardization");
        return LstmModel(std::move(p), j.at("target"), j.at("features"), j.at("dims").at("lag"),
                         st.at("feature_mean"), st.at("feature_sd"), st.at("target_mean"),
                         st.at("target_sd"), j.at("seed"));
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("malformed LSTM model: ") + e.what());
    }
}

TrainedLstm train(const SupervisedSet& set, const TrainConfig& config) {
    config.validate();
    constexpr std::size_t kMinSamples = 50;
    if (set.size() < kMinSamples) {
        fail(ErrorCode::EmptyDataset, "training needs >= 50 samples, got " + std::to_string(set.size()));
    }
    if (set.lag != config.lag) {
        fail(ErrorCode::InvalidArgument, "supervised set lag " + std::to_string(set.lag) +
                                             " differs from config lag " + std::to_string(config.lag));
    }
    const std::size_t n = set.size();
    const std::size_t D = set.dims();
    const auto tau = static_cast<std::size_t>(set.lag);
    const std::size_t n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(n))));
    const std::size_t n_train = n - n_val;

    // Statistics from the training split only: target over training targets,
    // each feature over the newest window row of each training sample.
    std::vector<Value> targets(n_train);
    for (std::size_t i = 0; i < n_train; ++i) targets[i] = set.samples[i].target;
    const auto target_stats = standardize(targets);
    std::vector<double> f_mean(D), f_sd(D);
    for (std::size_t d = 0; d < D; ++d) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n_train; ++i) sum += set.samples[i].window[(tau - 1) * D + d];
        const double mean = sum / static_cast<double>(n_train);
        double ss = 0.0;
        for (std::size_t i = 0; i < n_train; ++i) {
            const double v = set.samples[i].window[(tau - 1) * D + d] - mean;
            ss += v * v;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n_train - 1));
        f_mean[d] = mean;
        f_sd[d] = sd > 0.0 ? sd : 1.0;  // constant in training: centred only
    }
    std::vector<Sample> scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = set.samples[i];
        scaled[i].date = s.date;
        scaled[i].target = (s.target - target_stats.mean) / target_stats.sd;
        scaled[i].window.resize(s.window.size());
        for (std::size_t k = 0; k < s.window.size(); ++k) {
            scaled[i].window[k] = (s.window[k] - f_mean[k % D]) / f_sd[k % D];
        }
    }
    const std::span<const Sample> train_part(scaled.data(), n_train);
    const std::span<const Sample> val_part(scaled.data() + n_train, n_val);

    LstmParams params = init_params(derive_seed(config.seed, "lstm-init"), D, config.hidden);
    LstmParams best = params;
    Rng shuffle(derive_seed(config.seed, "lstm-shuffle"));
    const std::size_t P = params.values.size();
    std::vector<double> m(P, 0.0), v(P, 0.0), grad(P);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::uint64_t step = 0;

    FitReport report;
    report.seed = config.seed;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);
    Backprop bp;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = n_train; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
        for (std::size_t start = 0; start < n_train; start += config.batch_size) {
            const std::size_t end = std::min(n_train, start + config.batch_size);
            const double scale = 1.0 / static_cast<double>(end - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            double loss = 0.0;
            for (std::size_t b = start; b < end; ++b) {
                const auto& s = train_part[order[b]];
                loss += bp.accumulate(params, s.window, s.target, scale, grad);
            }
            if (!std::isfinite(loss)) {
                fail(ErrorCode::TrainingDiverged, "non-finite training loss at epoch " + std::to_string(epoch));
            }
            double norm = 0.0;
            for (double g : grad) norm += g * g;
            norm = std::sqrt(norm);
            const double clip = norm > config.clip_norm ? config.clip_norm / norm : 1.0;
            ++step;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t k = 0; k < P; ++k) {
                const double g = grad[k] * clip;
                m[k] = beta1 * m[k] + (1.0 - beta1) * g;
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
                params.values[k] -= config.learning_rate * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
            }
        }
        const double val = mse(params, val_part);
        if (!std::isfinite(val)) {
            fail(ErrorCode::TrainingDiverged, "non-finite validation loss at epoch " + std::to_string(epoch));
        }
        report.epochs_run = epoch;
        report.validation_history.push_back(val);
        if (val < best_val) {
            best_val = val;
            best = params;
            report.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            report.best_history.push_back(best_val);
            break;
        }
        report.best_history.push_back(best_val);
    }
    report.validation_mse = best_val;
    report.train_mse = mse(best, train_part);
    LstmModel model(std::move(best), set.target, set.feature_names, set.lag, std::move(f_mean),
                    std::move(f_sd), target_stats.mean, target_stats.sd, config.seed);
    return {std::move(model), std::move(report)};
}

double predict_one(const LstmModel& model, std::span<const double> window,
                   const std::vector<std::string>& names) {
    const auto bound = bind_window(model, window, names);
    return model.predict(bound, Date{});
}

ForecasterFactory lstm_factory(TrainConfig config) {
    return [config](const SupervisedSet& train_set) -> std::unique_ptr<Forecaster> {
        TrainConfig c = config;
        c.lag = train_set.lag;
        return std::make_unique<LstmModel>(train(train_set, c).model);
    };
}

}  // namespace ce
