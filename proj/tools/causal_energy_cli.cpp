// causal_energy command-line front end. Talks to the library only through
// the C interface.

#include "causal_energy/causal_energy.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::json;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> dataset, schema, output, base, anchor, horizon_end, exo, kind;
    std::optional<unsigned long long> seed;
    std::optional<unsigned> jobs;
    std::optional<double> quantile;
    std::optional<int> lag, seeds, epochs, hidden;
    std::optional<unsigned long long> n;
    std::vector<std::string> targets, factors, candidates, controls, freeze;
    bool save_models = false;
};

std::vector<std::string> split_commas(const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (!part.empty()) out.push_back(part);
        }
    }
    return out;
}

json build_config(const std::string& stage, const Overrides& o) {
    json j = json::object();
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw std::runtime_error("cannot open config '" + o.config + "'");
        j = json::parse(in);
    }
    if (o.dataset) j["dataset"] = *o.dataset;
    if (o.schema) j["schema"] = *o.schema;
    if (o.output) j["output_dir"] = *o.output;
    if (o.seed) j["seed"] = *o.seed;
    if (o.jobs) j["jobs"] = *o.jobs;
    if (o.base) j["base_model"] = *o.base;
    if (!o.targets.empty()) j["targets"] = split_commas(o.targets);
    if (!o.factors.empty()) j["factors"] = split_commas(o.factors);
    if (o.quantile) j["mi"]["quantile"] = *o.quantile;
    if (stage == "granger") {
        if (o.lag) j["granger"]["lag"] = *o.lag;
        if (o.seeds) j["granger"]["seeds"] = *o.seeds;
        if (!o.candidates.empty()) j["granger"]["candidates"] = split_commas(o.candidates);
        if (!o.controls.empty()) j["granger"]["controls"] = split_commas(o.controls);
    }
    if (stage == "counterfactual") {
        if (o.lag) j["intervention"]["lag"] = *o.lag;
        if (o.anchor) j["intervention"]["anchor"] = *o.anchor;
        if (o.horizon_end) j["intervention"]["horizon_end"] = *o.horizon_end;
        if (o.exo) j["intervention"]["exo"] = *o.exo;
        if (!o.freeze.empty()) j["intervention"]["freeze"] = split_commas(o.freeze);
        if (!o.controls.empty()) j["intervention"]["controls"] = split_commas(o.controls);
        if (o.save_models) j["intervention"]["save_models"] = true;
    }
    if (o.epochs) j["train"]["epochs"] = *o.epochs;
    if (o.hidden) j["train"]["hidden"] = *o.hidden;
    if (stage == "synth") {
        if (o.kind) j["synth"]["kind"] = *o.kind;
        if (o.n) j["synth"]["n"] = *o.n;
        if (j.contains("synth") && !j["synth"].contains("kind")) j["synth"]["kind"] = "ar1";
    }
    return j;
}

int run(const std::string& stage, const Overrides& o) {
    json config;
    try {
        config = build_config(stage, o);
    } catch (const std::exception& e) {
        std::cerr << "causal_energy " << stage << ": " << e.what() << "\n";
        return 2;
    }
    ce_result* result = nullptr;
    const ce_status status = ce_run_stage(stage.c_str(), config.dump().c_str(), &result);
    if (status != CE_OK && status != CE_PARTIAL) {
        std::cerr << "causal_energy " << stage << ": " << ce_status_name(status) << ": " << ce_last_error() << "\n";
        return 2;
    }
    for (size_t i = 0; i < ce_result_file_count(result); ++i) std::cout << ce_result_file(result, i) << "\n";
    int code = 0;
    if (status == CE_PARTIAL) {
        const json summary = json::parse(ce_result_summary(result));
        for (const auto& f : summary.value("failures", json::array())) {
            std::cerr << "causal_energy " << stage << ": " << f.get<std::string>() << "\n";
        }
        code = 1;
    }
    ce_result_free(result);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal analysis of gas demand time series"};
    app.set_version_flag("--version", std::string(ce_version()));
    app.require_subcommand(1);

    Overrides o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON run configuration");
        sub->add_option("--output", o.output, "Output directory");
        sub->add_option("--seed", o.seed, "Run seed");
    };
    auto data = [&](CLI::App* sub) {
        sub->add_option("--dataset", o.dataset, "Daily CSV");
        sub->add_option("--schema", o.schema, "Schema JSON (default: gas-demand layout)");
    };
    auto analysis = [&](CLI::App* sub) {
        sub->add_option("--jobs", o.jobs, "Worker threads");
        sub->add_option("--targets", o.targets, "Comma-separated target columns");
        sub->add_option("--factors", o.factors, "Comma-separated factor columns");
        sub->add_option("--quantile", o.quantile, "MI selection quantile");
    };
    auto models = [&](CLI::App* sub) {
        sub->add_option("--base", o.base, "Base model: lstm or prophet");
        sub->add_option("--lag", o.lag, "Window length in days");
        sub->add_option("--controls", o.controls, "Comma-separated control columns (default: MI selection)");
        sub->add_option("--epochs", o.epochs, "LSTM epoch cap");
        sub->add_option("--hidden", o.hidden, "LSTM hidden units");
    };

    auto* ingest = app.add_subcommand("ingest", "Load, gap-fill and derive features; writes ingest.csv");
    common(ingest);
    data(ingest);

    auto* mi = app.add_subcommand("mi", "Mutual information matrix and factor selection");
    common(mi);
    data(mi);
    analysis(mi);

    auto* granger = app.add_subcommand("granger", "Neural Granger causality tests");
    common(granger);
    data(granger);
    analysis(granger);
    models(granger);
    granger->add_option("--candidates", o.candidates, "Comma-separated candidate causes (default: MI selection)");
    granger->add_option("--seeds", o.seeds, "Training seeds per cell; the median p is reported");

    auto* cf = app.add_subcommand("counterfactual", "With-war and without-war forecasts per sector");
    common(cf);
    data(cf);
    analysis(cf);
    models(cf);
    cf->add_option("--anchor", o.anchor, "Intervention date YYYY-MM-DD");
    cf->add_option("--horizon-end", o.horizon_end, "Last forecast date");
    cf->add_option("--exo", o.exo, "Covariates during rollout: observed or frozen");
    cf->add_option("--freeze", o.freeze, "Comma-separated columns held at pre-anchor values");
    cf->add_flag("--save-models", o.save_models, "Write fitted model JSON");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic series with known ground truth");
    common(synth);
    synth->add_option("--kind", o.kind, "gaussian-pair, ar1, tanh-coupled or step-intervention");
    synth->add_option("--n", o.n, "Length");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    for (auto* sub : app.get_subcommands()) return run(sub->get_name(), o);
    return 2;
}
