#include "causal_energy/pipeline.hpp"

#include "causal_energy/error.hpp"
#include "causal_energy/parallel.hpp"
#include "causal_energy/report.hpp"
#include "causal_energy/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>

namespace ce {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) fail(ErrorCode::InvalidArgument, "config: '" + where + "' must be an object");
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; })) {
            fail(ErrorCode::InvalidArgument, "config: unknown key '" + (where.empty() ? k : where + "." + k) + "'");
        }
    }
}

template <class T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

const char* rule_name(SelectionRule rule) {
    return rule == SelectionRule::CumulativeShare ? "cumulative-share" : "percentile-threshold";
}

SelectionRule parse_rule(const std::string& s) {
    if (s == "cumulative-share") return SelectionRule::CumulativeShare;
    if (s == "percentile-threshold") return SelectionRule::PercentileThreshold;
    fail(ErrorCode::InvalidArgument, "config: unknown mi.rule '" + s + "'");
}

json generator_json(const GeneratorSpec& s) {
    return {{"kind", to_string(s.kind)},   {"base", to_string(s.base)},
            {"rho", s.rho},                {"phi", s.phi},
            {"sigma", s.sigma},            {"phi_x", s.phi_x},
            {"sigma_x", s.sigma_x},        {"phi_y", s.phi_y},
            {"coupling", s.coupling},      {"lag", s.lag},
            {"anchor_index", s.anchor_index}, {"effect", s.effect},
            {"n", s.n},                    {"seed", s.seed},
            {"start", format_date(s.start)}, {"burn_in", s.burn_in}};
}

Date required_date(const std::string& text, const char* what) {
    const auto d = parse_date(text);
    if (!d) fail(ErrorCode::InvalidArgument, std::string("config: bad ") + what + " date '" + text + "'");
    return *d;
}

class Writer {
public:
    Writer(const RunConfig& config, std::string stage) : dir_(config.output_dir), result_{} {
        result_.stage = std::move(stage);
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) fail(ErrorCode::Io, "cannot create output directory '" + dir_.string() + "': " + ec.message());
    }

    void write(const std::string& name, const std::string& content) {
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        out << content;
        out.close();
        if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
        std::lock_guard lock(mutex_);
        result_.files.push_back(path.string());
    }

    void failure(std::string message) {
        std::lock_guard lock(mutex_);
        result_.failures.push_back(std::move(message));
        result_.status = 1;
    }

    StageResult finish(const RunConfig& config, const std::string& dataset_sha, json summary) {
        std::sort(result_.files.begin(), result_.files.end());
        json files = json::array();
        for (const auto& f : result_.files) files.push_back(fs::path(f).filename().string());
        const json manifest{{"tool", "causal_energy"},
                            {"version", kToolVersion},
                            {"stage", result_.stage},
                            {"seed", config.seed},
                            {"dataset", config.dataset},
                            {"dataset_sha256", dataset_sha},
                            {"config", json::parse(config.to_json())},
                            {"outputs", files},
                            {"failures", result_.failures},
                            {"status", result_.status == 0 ? "ok" : "partial"},
                            {"summary", summary}};
        write("manifest_" + result_.stage + ".json", manifest.dump(2) + "\n");
        summary["status"] = result_.status;
        summary["failures"] = result_.failures;
        result_.summary_json = summary.dump();
        return std::move(result_);
    }

private:
    fs::path dir_;
    StageResult result_;
    std::mutex mutex_;
};

std::string stamp(const RunConfig& config, const std::string& sha) {
    return "causal_energy " + std::string(kToolVersion) + " seed " + std::to_string(config.seed) + " dataset " +
           sha;
}

std::vector<std::string> resolve_targets(const RunConfig& config, const Dataset& ds) {
    auto targets = config.targets.empty() ? ds.schema.targets() : config.targets;
    if (targets.empty()) fail(ErrorCode::Schema, "no target columns configured");
    for (const auto& t : targets) {
        if (!ds.frame.has(t)) fail(ErrorCode::Schema, "target column '" + t + "' not in dataset");
    }
    return targets;
}

std::vector<std::string> resolve_factors(const RunConfig& config, const Dataset& ds,
                                         const std::vector<std::string>& targets) {
    std::vector<std::string> out;
    if (!config.factors.empty()) {
        for (const auto& f : config.factors) {
            if (!ds.frame.has(f)) fail(ErrorCode::Schema, "factor column '" + f + "' not in dataset");
            out.push_back(f);
        }
        return out;
    }
    for (const auto& f : ds.schema.predictors()) {
        if (ds.frame.has(f) && std::find(targets.begin(), targets.end(), f) == targets.end()) out.push_back(f);
    }
    return out;
}

struct MiOutcome {
    std::vector<MICell> cells;
    std::map<std::string, SelectionResult> selections;
    std::vector<std::string> failures;
};

MiOutcome compute_mi(const RunConfig& config, const Dataset& ds, const std::vector<std::string>& targets,
                     const std::vector<std::string>& factors) {
    MiOutcome out;
    KsgOptions opts;
    opts.k = config.mi.k;
    opts.seed = derive_seed(config.seed, "mi");
    out.cells = mi_matrix(ds.frame, targets, factors, opts, config.jobs);
    std::set<std::string> forced;
    for (const auto& f : config.mi.forced) {
        if (std::find(factors.begin(), factors.end(), f) != factors.end()) forced.insert(f);
    }
    for (const auto& t : targets) {
        std::vector<MIScore> scores;
        for (const auto& c : out.cells) {
            if (c.target != t) continue;
            if (c.score) scores.push_back(*c.score);
            else out.failures.push_back("mi " + t + "/" + c.factor + ": " + c.error);
        }
        if (scores.empty()) {
            out.failures.push_back("mi " + t + ": no factor could be scored");
            continue;
        }
        auto sel = select_factors(std::move(scores), config.mi.quantile, forced, config.mi.rule);
        if (sel.fell_back) out.failures.push_back("mi " + t + ": all scores <= 0, forced set only");
        out.selections.emplace(t, std::move(sel));
    }
    return out;
}

std::vector<std::string> selected_list(const MiOutcome& mi, const std::string& target) {
    auto it = mi.selections.find(target);
    if (it == mi.selections.end()) return {};
    std::vector<std::string> out;
    for (const auto& f : it->second.selected) {
        if (f != target) out.push_back(f);
    }
    return out;
}

GrangerConfig granger_config(const RunConfig& config) {
    GrangerConfig g;
    g.base = config.base_model;
    g.lag = config.granger.lag;
    g.test_fraction = config.granger.test_fraction;
    g.seed = derive_seed(config.seed, "granger");
    g.seeds = config.granger.seeds;
    g.train = config.train;
    g.train.lag = config.granger.lag;
    g.prophet = config.prophet;
    return g;
}

InterventionConfig intervention_config(const RunConfig& config) {
    InterventionConfig ic;
    ic.anchor = required_date(config.intervention.anchor, "intervention.anchor");
    if (!config.intervention.horizon_end.empty()) {
        ic.horizon_end = required_date(config.intervention.horizon_end, "intervention.horizon_end");
    }
    ic.base = config.base_model;
    ic.exo = config.intervention.exo;
    ic.freeze = config.intervention.freeze;
    ic.lag = config.intervention.lag;
    ic.seed = derive_seed(config.seed, "counterfactual");
    ic.train = config.train;
    ic.train.lag = config.intervention.lag;
    ic.prophet = config.prophet;
    return ic;
}

std::string model_json(const Forecaster& model) {
    if (const auto* m = dynamic_cast<const LstmModel*>(&model)) return m->to_json();
    if (const auto* m = dynamic_cast<const ProphetModel*>(&model)) return m->to_json();
    return "{}";
}

std::string safe_name(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

}  // namespace

RunConfig RunConfig::from_json(std::string_view text) {
    RunConfig c;
    try {
        const json j = json::parse(text);
        reject_unknown(j,
                       {"dataset", "schema", "output_dir", "seed", "jobs", "base_model", "targets", "factors", "mi",
                        "granger", "intervention", "train", "prophet", "synth"},
                       "");
        take(j, "dataset", c.dataset);
        take(j, "schema", c.schema);
        take(j, "output_dir", c.output_dir);
        take(j, "seed", c.seed);
        take(j, "jobs", c.jobs);
        if (j.contains("base_model")) {
            const auto b = parse_base_model(j.at("base_model").get<std::string>());
            if (!b) fail(ErrorCode::InvalidArgument, "config: unknown base_model " + j.at("base_model").dump());
            c.base_model = *b;
        }
        take(j, "targets", c.targets);
        take(j, "factors", c.factors);
        if (j.contains("mi")) {
            const auto& m = j.at("mi");
            reject_unknown(m, {"k", "quantile", "forced", "rule"}, "mi");
            take(m, "k", c.mi.k);
            take(m, "quantile", c.mi.quantile);
            take(m, "forced", c.mi.forced);
            if (m.contains("rule")) c.mi.rule = parse_rule(m.at("rule").get<std::string>());
        }
        if (j.contains("granger")) {
            const auto& g = j.at("granger");
            reject_unknown(g, {"lag", "test_fraction", "seeds", "candidates", "controls"}, "granger");
            take(g, "lag", c.granger.lag);
            take(g, "test_fraction", c.granger.test_fraction);
            take(g, "seeds", c.granger.seeds);
            take(g, "candidates", c.granger.candidates);
            if (g.contains("controls")) c.granger.controls = g.at("controls").get<std::vector<std::string>>();
        }
        if (j.contains("intervention")) {
            const auto& iv = j.at("intervention");
            reject_unknown(iv, {"anchor", "horizon_end", "exo", "freeze", "lag", "controls", "save_models"},
                           "intervention");
            take(iv, "anchor", c.intervention.anchor);
            take(iv, "horizon_end", c.intervention.horizon_end);
            if (iv.contains("exo")) {
                const auto e = parse_exo_policy(iv.at("exo").get<std::string>());
                if (!e) fail(ErrorCode::InvalidArgument, "config: unknown intervention.exo " + iv.at("exo").dump());
                c.intervention.exo = *e;
            }
            take(iv, "freeze", c.intervention.freeze);
            take(iv, "lag", c.intervention.lag);
            if (iv.contains("controls")) c.intervention.controls = iv.at("controls").get<std::vector<std::string>>();
            take(iv, "save_models", c.intervention.save_models);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            reject_unknown(t,
                           {"hidden", "epochs", "learning_rate", "batch_size", "validation_fraction", "patience",
                            "clip_norm"},
                           "train");
            take(t, "hidden", c.train.hidden);
            take(t, "epochs", c.train.epochs);
            take(t, "learning_rate", c.train.learning_rate);
            take(t, "batch_size", c.train.batch_size);
            take(t, "validation_fraction", c.train.validation_fraction);
            take(t, "patience", c.train.patience);
            take(t, "clip_norm", c.train.clip_norm);
        }
        if (j.contains("prophet")) {
            const auto& p = j.at("prophet");
            reject_unknown(p,
                           {"changepoints", "changepoint_range", "yearly_order", "weekly_order", "lambda_trend",
                            "lambda_reg"},
                           "prophet");
            take(p, "changepoints", c.prophet.changepoints);
            take(p, "changepoint_range", c.prophet.changepoint_range);
            take(p, "yearly_order", c.prophet.yearly_order);
            take(p, "weekly_order", c.prophet.weekly_order);
            take(p, "lambda_trend", c.prophet.lambda_trend);
            take(p, "lambda_reg", c.prophet.lambda_reg);
        }
        if (j.contains("synth")) {
            json s = j.at("synth");
            if (!s.contains("seed")) s["seed"] = c.seed;
            c.synth = GeneratorSpec::from_json(s.dump());
        } else {
            c.synth.seed = c.seed;
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string RunConfig::to_json() const {
    json j{{"dataset", dataset},
           {"schema", schema},
           {"output_dir", output_dir},
           {"seed", seed},
           {"jobs", jobs},
           {"base_model", ce::to_string(base_model)},
           {"targets", targets},
           {"factors", factors},
           {"mi", {{"k", mi.k}, {"quantile", mi.quantile}, {"forced", mi.forced}, {"rule", rule_name(mi.rule)}}},
           {"granger",
            {{"lag", granger.lag},
             {"test_fraction", granger.test_fraction},
             {"seeds", granger.seeds},
             {"candidates", granger.candidates}}},
           {"intervention",
            {{"anchor", intervention.anchor},
             {"horizon_end", intervention.horizon_end},
             {"exo", ce::to_string(intervention.exo)},
             {"freeze", intervention.freeze},
             {"lag", intervention.lag},
             {"save_models", intervention.save_models}}},
           {"train",
            {{"hidden", train.hidden},
             {"epochs", train.epochs},
             {"learning_rate", train.learning_rate},
             {"batch_size", train.batch_size},
             {"validation_fraction", train.validation_fraction},
             {"patience", train.patience},
             {"clip_norm", train.clip_norm}}},
           {"prophet",
            {{"changepoints", prophet.changepoints},
             {"changepoint_range", prophet.changepoint_range},
             {"yearly_order", prophet.yearly_order},
             {"weekly_order", prophet.weekly_order},
             {"lambda_trend", prophet.lambda_trend},
             {"lambda_reg", prophet.lambda_reg}}},
           {"synth", generator_json(synth)}};
    if (granger.controls) j["granger"]["controls"] = *granger.controls;
    if (intervention.controls) j["intervention"]["controls"] = *intervention.controls;
    return j.dump();
}

void RunConfig::validate() const {
    if (jobs == 0) fail(ErrorCode::InvalidArgument, "config: jobs must be >= 1");
    if (mi.k < 1) fail(ErrorCode::InvalidArgument, "config: mi.k must be >= 1");
    if (!(mi.quantile > 0.0 && mi.quantile <= 1.0)) {
        fail(ErrorCode::InvalidArgument, "config: mi.quantile must lie in (0, 1]");
    }
    if (output_dir.empty()) fail(ErrorCode::InvalidArgument, "config: output_dir is empty");
    required_date(intervention.anchor, "intervention.anchor");
    if (!intervention.horizon_end.empty()) required_date(intervention.horizon_end, "intervention.horizon_end");
}

Dataset load_dataset(const RunConfig& config) {
    if (config.dataset.empty()) fail(ErrorCode::Io, "no dataset path given");
    Dataset ds;
    ds.schema = config.schema.empty() ? DatasetSchema::energy_default() : DatasetSchema::load(config.schema);
    auto loaded = load_csv(config.dataset, ds.schema);
    std::vector<FeatureSpec> missing;
    for (const auto& spec : ds.schema.features) {
        const auto names = output_names(spec);
        if (std::none_of(names.begin(), names.end(), [&](const std::string& n) { return loaded.frame.has(n); })) {
            missing.push_back(spec);
        }
    }
    ds.frame = build_features(loaded.frame, missing);
    ds.sha256 = std::move(loaded.sha256);
    ds.gap_rows = loaded.gap_rows;
    ds.parse_failures = std::move(loaded.parse_failures);
    return ds;
}

std::vector<std::string> model_features(const SeriesFrame& frame, const std::vector<std::string>& factors) {
    std::vector<std::string> out;
    auto add = [&](const std::string& n) {
        if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    };
    for (const auto& f : factors) {
        if (f == "Month" && frame.has("Month_sin") && frame.has("Month_cos")) {
            add("Month_sin");
            add("Month_cos");
        } else {
            add(f);
        }
    }
    return out;
}

StageResult run_ingest(const RunConfig& config) {
    config.validate();
    const auto ds = load_dataset(config);
    Writer w(config, "ingest");
    std::ostringstream csv;
    write_csv(ds.frame, csv);
    w.write("ingest.csv", csv.str());
    json failures = json::object();
    for (const auto& [col, n] : ds.parse_failures) failures[col] = n;
    const json summary{{"rows", ds.frame.rows()},
                       {"columns", ds.frame.column_names()},
                       {"first_date", ds.frame.rows() ? format_date(ds.frame.index().front()) : ""},
                       {"last_date", ds.frame.rows() ? format_date(ds.frame.index().back()) : ""},
                       {"gap_rows", ds.gap_rows},
                       {"parse_failures", failures}};
    return w.finish(config, ds.sha256, summary);
}

StageResult run_mi(const RunConfig& config) {
    config.validate();
    const auto ds = load_dataset(config);
    const auto targets = resolve_targets(config, ds);
    const auto factors = resolve_factors(config, ds, targets);
    const auto mi = compute_mi(config, ds, targets, factors);
    Writer w(config, "mi");
    for (const auto& f : mi.failures) w.failure(f);
    w.write("mi.csv", mi_csv(mi.cells, mi.selections));
    json sel = json::object();
    for (const auto& [t, s] : mi.selections) {
        w.write("mi_" + safe_name(t) + ".svg",
                svg_mi_bars("Mutual information with " + t + " (nats)", s, stamp(config, ds.sha256)));
        sel[t] = {{"selected", s.selected}, {"coverage", s.coverage}, {"fell_back", s.fell_back}};
    }
    return w.finish(config, ds.sha256, {{"selection", sel}});
}

StageResult run_granger(const RunConfig& config) {
    config.validate();
    const auto ds = load_dataset(config);
    const auto targets = resolve_targets(config, ds);
    const bool need_mi = config.granger.candidates.empty() || !config.granger.controls;
    MiOutcome mi;
    if (need_mi) mi = compute_mi(config, ds, targets, resolve_factors(config, ds, targets));

    std::map<std::string, std::vector<std::string>> candidates, controls;
    for (const auto& t : targets) {
        auto& cand = candidates[t];
        for (const auto& c : config.granger.candidates.empty() ? selected_list(mi, t) : config.granger.candidates) {
            if (c != t) cand.push_back(c);
        }
        controls[t] = model_features(ds.frame, config.granger.controls ? *config.granger.controls : selected_list(mi, t));
    }
    const auto results = granger_matrix(ds.frame, targets, candidates, controls, granger_config(config), config.jobs);

    Writer w(config, "granger");
    for (const auto& f : mi.failures) w.failure(f);
    std::size_t ok = 0;
    for (const auto& r : results) {
        if (r.ok()) ++ok;
        else w.failure("granger " + r.target + "/" + r.candidate + ": " + r.status);
    }
    if (ok == 0) {
        w.failure("granger: no cell succeeded");
        w.write("granger.csv", granger_csv({}));
    } else {
        w.write("granger.csv", granger_csv(results));
    }
    w.write("granger.svg", svg_pvalue_table("Granger test p-values (" + std::string(to_string(config.base_model)) +
                                                " base, lag " + std::to_string(config.granger.lag) + ")",
                                            results, stamp(config, ds.sha256)));
    return w.finish(config, ds.sha256, {{"cells", results.size()}, {"ok", ok}});
}

StageResult run_counterfactual(const RunConfig& config) {
    config.validate();
    const auto ds = load_dataset(config);
    const auto targets = resolve_targets(config, ds);
    const auto ic = intervention_config(config);
    MiOutcome mi;
    if (!config.intervention.controls) mi = compute_mi(config, ds, targets, resolve_factors(config, ds, targets));

    Writer w(config, "counterfactual");
    for (const auto& f : mi.failures) w.failure(f);
    const std::string st = stamp(config, ds.sha256);
    std::vector<json> sector_summary(targets.size());
    parallel_for(targets.size(), config.jobs, [&](std::size_t i) {
        const auto& sector = targets[i];
        const auto controls = model_features(
            ds.frame, config.intervention.controls ? *config.intervention.controls : selected_list(mi, sector));
        try {
            std::map<std::string, std::string> saved;
            std::mutex saved_mutex;
            auto capture = [&](const char* stage) -> ForecasterFactory {
                auto base = default_factory(ic, stage);
                if (!config.intervention.save_models) return base;
                return [&, base, stage](const SupervisedSet& set) {
                    auto model = base(set);
                    std::lock_guard lock(saved_mutex);
                    saved[stage] = model_json(*model);
                    return model;
                };
            };
            const auto actual = actual_series(ds.frame, sector, ic);
            const auto factual = factual_forecast(ds.frame, sector, controls, ic, capture("factual"));
            const auto cf = counterfactual_forecast(ds.frame, sector, controls, ic, capture("counterfactual"));
            const auto report = monthly_deltas(sector, actual, factual, cf);
            const std::string base = "counterfactual_" + safe_name(sector);
            w.write(base + ".csv", counterfactual_csv(report));
            w.write(base + ".svg",
                    svg_counterfactual(sector + ": anchor " + config.intervention.anchor + ", exo " +
                                           to_string(config.intervention.exo) + ", " +
                                           to_string(config.base_model) + " base",
                                       actual, factual, cf, report, st));
            for (const auto& [stage, text] : saved) w.write("model_" + safe_name(sector) + "_" + stage + ".json", text);
            std::vector<std::string> omitted;
            for (const auto& m : report.omitted) omitted.push_back(format_month(m));
            sector_summary[i] = {{"sector", sector}, {"months", report.rows.size()}, {"omitted", omitted}};
        } catch (const Error& e) {
            w.failure("counterfactual " + sector + ": " + to_string(e.code()) + ": " + e.what());
            sector_summary[i] = {{"sector", sector}, {"error", e.what()}};
        }
    });
    return w.finish(config, ds.sha256, {{"anchor", config.intervention.anchor}, {"sectors", sector_summary}});
}

StageResult run_synth(const RunConfig& config) {
    config.validate();
    const auto syn = generate(config.synth);
    std::ostringstream csv;
    write_csv(syn.frame, csv);
    const std::string text = csv.str();
    Writer w(config, "synth");
    w.write("synth.csv", text);
    w.write("synth_meta.json", syn.metadata_json + "\n");
    return w.finish(config, sha256_hex(text), {{"rows", syn.frame.rows()}, {"kind", to_string(config.synth.kind)}});
}

StageResult run_stage(std::string_view stage, const RunConfig& config) {
    if (stage == "ingest") return run_ingest(config);
    if (stage == "mi") return run_mi(config);
    if (stage == "granger") return run_granger(config);
    if (stage == "counterfactual") return run_counterfactual(config);
    if (stage == "synth") return run_synth(config);
    fail(ErrorCode::InvalidArgument, "unknown stage '" + std::string(stage) + "'");
}

}  // namespace ce
