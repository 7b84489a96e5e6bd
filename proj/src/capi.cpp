#include "causal_energy/causal_energy.h"

#include "causal_energy/error.hpp"
#include "causal_energy/granger.hpp"
#include "causal_energy/ingest.hpp"
#include "causal_energy/mutual_info.hpp"
#include "causal_energy/pipeline.hpp"
#include "causal_energy/synth.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <new>
#include <string>

struct ce_frame {
    ce::SeriesFrame frame;
    std::vector<std::string> names;
};

struct ce_result {
    ce::StageResult result;
};

namespace {

thread_local std::string last_error;

ce_status code_of(ce::ErrorCode code) { return static_cast<ce_status>(9 + static_cast<int>(code)); }

ce_status set_error(ce_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

template <class Fn>
ce_status guard(Fn&& fn) {
    try {
        return fn();
    } catch (const ce::Error& e) {
        return set_error(code_of(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(CE_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(CE_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(CE_ERR_INTERNAL, "unknown exception");
    }
}

ce_status null_arg(const char* what) { return set_error(CE_ERR_INVALID_ARGUMENT, std::string(what) + " is NULL"); }

ce_frame* wrap(ce::SeriesFrame frame) {
    auto* f = new ce_frame{std::move(frame), {}};
    f->names = f->frame.column_names();
    return f;
}

}  // namespace

extern "C" {

const char* ce_version(void) { return ce::kToolVersion; }

const char* ce_last_error(void) { return last_error.c_str(); }

const char* ce_status_name(ce_status status) {
    switch (status) {
    case CE_OK: return "ok";
    case CE_PARTIAL: return "partial";
    case CE_ERR_INTERNAL: return "internal-error";
    default: break;
    }
    const int c = static_cast<int>(status) - 9;
    if (c >= static_cast<int>(ce::ErrorCode::InvalidArgument) && c <= static_cast<int>(ce::ErrorCode::Io)) {
        return ce::to_string(static_cast<ce::ErrorCode>(c));
    }
    return "unknown";
}

ce_status ce_frame_load(const char* csv_path, const char* schema_json, ce_frame** out) {
    if (!csv_path) return null_arg("csv_path");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guard([&] {
        auto schema = schema_json ? ce::DatasetSchema::from_json(schema_json) : ce::DatasetSchema::energy_default();
        auto loaded = ce::load_csv(csv_path, schema);
        std::vector<ce::FeatureSpec> specs;
        for (const auto& s : schema.features) {
            bool present = false;
            for (const auto& n : ce::output_names(s)) present = present || loaded.frame.has(n);
            if (!present) specs.push_back(s);
        }
        *out = wrap(ce::build_features(loaded.frame, specs));
        return CE_OK;
    });
}

size_t ce_frame_rows(const ce_frame* frame) { return frame ? frame->frame.rows() : 0; }

size_t ce_frame_cols(const ce_frame* frame) { return frame ? frame->frame.cols() : 0; }

const char* ce_frame_column_name(const ce_frame* frame, size_t col) {
    if (!frame || col >= frame->names.size()) return nullptr;
    return frame->names[col].c_str();
}

ce_status ce_frame_column_values(const ce_frame* frame, size_t col, double* out, size_t len) {
    if (!frame) return null_arg("frame");
    if (!out) return null_arg("out");
    if (col >= frame->frame.cols()) return set_error(CE_ERR_INVALID_ARGUMENT, "column index out of range");
    if (len != frame->frame.rows()) return set_error(CE_ERR_INVALID_ARGUMENT, "len must equal the row count");
    const auto& c = frame->frame.column_at(col).second;
    for (size_t i = 0; i < len; ++i) out[i] = c[i] ? *c[i] : std::numeric_limits<double>::quiet_NaN();
    return CE_OK;
}

ce_status ce_frame_date(const ce_frame* frame, size_t row, char* buf, size_t len) {
    if (!frame) return null_arg("frame");
    if (!buf) return null_arg("buf");
    if (row >= frame->frame.rows()) return set_error(CE_ERR_INVALID_ARGUMENT, "row index out of range");
    const auto s = ce::format_date(frame->frame.index()[row]);
    if (len < s.size() + 1) return set_error(CE_ERR_INVALID_ARGUMENT, "buffer too small");
    std::memcpy(buf, s.c_str(), s.size() + 1);
    return CE_OK;
}

ce_status ce_frame_save_csv(const ce_frame* frame, const char* path) {
    if (!frame) return null_arg("frame");
    if (!path) return null_arg("path");
    return guard([&] {
        std::ofstream out(path, std::ios::binary);
        if (!out) ce::fail(ce::ErrorCode::Io, std::string("cannot open '") + path + "' for writing");
        ce::write_csv(frame->frame, out);
        out.close();
        if (!out) ce::fail(ce::ErrorCode::Io, std::string("cannot write '") + path + "'");
        return CE_OK;
    });
}

void ce_frame_free(ce_frame* frame) { delete frame; }

ce_status ce_digamma(double x, double* out) {
    if (!out) return null_arg("out");
    return guard([&] {
        *out = ce::digamma(x);
        return CE_OK;
    });
}

ce_status ce_ksg_mi(const double* x, const double* y, size_t n, int k, uint64_t seed, double* out) {
    if (!x || !y) return null_arg("input");
    if (!out) return null_arg("out");
    return guard([&] {
        ce::KsgOptions opts;
        opts.k = k;
        opts.seed = seed;
        *out = ce::ksg_mi({x, n}, {y, n}, opts);
        return CE_OK;
    });
}

ce_status ce_wilcoxon_signed_rank(const double* a, const double* b, size_t n, ce_alternative alternative,
                                  double* statistic, double* p_value) {
    if (!a || !b) return null_arg("input");
    if (!p_value) return null_arg("p_value");
    ce::Alternative alt;
    switch (alternative) {
    case CE_ALT_LESS: alt = ce::Alternative::Less; break;
    case CE_ALT_GREATER: alt = ce::Alternative::Greater; break;
    case CE_ALT_TWO_SIDED: alt = ce::Alternative::TwoSided; break;
    default: return set_error(CE_ERR_INVALID_ARGUMENT, "unknown alternative");
    }
    return guard([&] {
        const auto r = ce::wilcoxon_signed_rank({a, n}, {b, n}, alt);
        if (statistic) *statistic = r.statistic;
        *p_value = r.p_value;
        return CE_OK;
    });
}

ce_status ce_run_stage(const char* stage, const char* config_json, ce_result** out) {
    if (!stage) return null_arg("stage");
    if (!config_json) return null_arg("config_json");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guard([&] {
        const auto config = ce::RunConfig::from_json(config_json);
        auto result = ce::run_stage(stage, config);
        const ce_status status = result.status == 0 ? CE_OK : CE_PARTIAL;
        if (status == CE_PARTIAL) {
            std::string msg = result.failures.empty() ? std::string("partial failure") : result.failures.front();
            if (result.failures.size() > 1) msg += " (+" + std::to_string(result.failures.size() - 1) + " more)";
            last_error = msg;
        }
        *out = new ce_result{std::move(result)};
        return status;
    });
}

const char* ce_result_summary(const ce_result* result) { return result ? result->result.summary_json.c_str() : ""; }

size_t ce_result_file_count(const ce_result* result) { return result ? result->result.files.size() : 0; }

const char* ce_result_file(const ce_result* result, size_t i) {
    if (!result || i >= result->result.files.size()) return nullptr;
    return result->result.files[i].c_str();
}

void ce_result_free(ce_result* result) { delete result; }

ce_status ce_synth(const char* spec_json, ce_frame** out, char** metadata_json) {
    if (!spec_json) return null_arg("spec_json");
    if (!out) return null_arg("out");
    *out = nullptr;
    if (metadata_json) *metadata_json = nullptr;
    return guard([&] {
        auto syn = ce::generate(ce::GeneratorSpec::from_json(spec_json));
        if (metadata_json) {
            *metadata_json = static_cast<char*>(std::malloc(syn.metadata_json.size() + 1));
            if (!*metadata_json) throw std::bad_alloc();
            std::memcpy(*metadata_json, syn.metadata_json.c_str(), syn.metadata_json.size() + 1);
        }
        *out = wrap(std::move(syn.frame));
        return CE_OK;
    });
}

void ce_string_free(char* s) { std::free(s); }

}  // extern "C"
