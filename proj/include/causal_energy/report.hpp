#pragma once

#include "causal_energy/counterfactual.hpp"
#include "causal_energy/granger.hpp"
#include "causal_energy/mutual_info.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ce {

/// `target,factor,mi_nats,n,k,selected`; unavailable cells leave mi_nats/n empty.
std::string mi_csv(const std::vector<MICell>& cells, const std::map<std::string, SelectionResult>& selections);

/// `target,candidate,base_model,n_pairs,W,p_value,mae_restricted,mae_augmented,seed,status`
std::string granger_csv(const std::vector<GrangerResult>& results);

/// `sector,month,actual_mcm,forecast_war_mcm,forecast_nowar_mcm,delta_war_mcm,delta_nowar_mcm,delta_war_pct,delta_nowar_pct`
std::string counterfactual_csv(const CounterfactualReport& report);

inline constexpr const char* kMiCsvHeader = "target,factor,mi_nats,n,k,selected";
inline constexpr const char* kGrangerCsvHeader =
    "target,candidate,base_model,n_pairs,W,p_value,mae_restricted,mae_augmented,seed,status";
inline constexpr const char* kCounterfactualCsvHeader =
    "sector,month,actual_mcm,forecast_war_mcm,forecast_nowar_mcm,delta_war_mcm,delta_nowar_mcm,delta_war_pct,"
    "delta_nowar_pct";

// Minimal hand-written SVG documents. `stamp` goes into a leading comment.

std::string svg_mi_bars(const std::string& title, const SelectionResult& selection, const std::string& stamp);

std::string svg_pvalue_table(const std::string& title, const std::vector<GrangerResult>& results,
                             const std::string& stamp);

std::string svg_counterfactual(const std::string& title, const DatedSeries& actual, const DatedSeries& factual,
                               const DatedSeries& counterfactual, const CounterfactualReport& report,
                               const std::string& stamp);

std::string xml_escape(const std::string& text);

}  // namespace ce
