#include "causal_energy/ingest.hpp"

#include "causal_energy/error.hpp"
#include "causal_energy/format.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace ce {

namespace {

using json = nlohmann::ordered_json;

const char* kind_name(ColumnKind kind) {
    switch (kind) {
    case ColumnKind::Target: return "target";
    case ColumnKind::Predictor: return "predictor";
    case ColumnKind::Auxiliary: return "auxiliary";
    }
    return "?";
}

ColumnKind parse_kind(const std::string& s) {
    if (s == "target") return ColumnKind::Target;
    if (s == "predictor") return ColumnKind::Predictor;
    if (s == "auxiliary") return ColumnKind::Auxiliary;
    fail(ErrorCode::Schema, "unknown column kind '" + s + "'");
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

// RFC-4180-ish split of one record; quotes may wrap fields, "" escapes a quote.
std::vector<std::string> split_record(std::string_view line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back(trim(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.emplace_back(trim(field));
    return fields;
}

std::optional<double> parse_number(std::string_view s) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

FeatureSpec feature_from_json(const json& j) {
    FeatureSpec spec;
    const auto transform = parse_transform(j.at("transform").get<std::string>());
    if (!transform) fail(ErrorCode::Schema, "unknown transform " + j.at("transform").dump());
    spec.transform = *transform;
    spec.source = j.value("source", "");
    spec.lag = j.value("k", 1);
    spec.hdd_base = j.value("base", 15.5);
    spec.output = j.value("name", "");
    if (j.contains("anchor")) {
        const auto anchor = parse_date(j.at("anchor").get<std::string>());
        if (!anchor) fail(ErrorCode::Schema, "bad anchor date " + j.at("anchor").dump());
        spec.anchor = *anchor;
    }
    return spec;
}

json feature_to_json(const FeatureSpec& spec) {
    json j{{"transform", to_string(spec.transform)}};
    if (!spec.source.empty()) j["source"] = spec.source;
    if (spec.transform == Transform::Lag) j["k"] = spec.lag;
    if (spec.transform == Transform::WarDummy) j["anchor"] = format_date(spec.anchor);
    if (spec.transform == Transform::HddFromTemperature) j["base"] = spec.hdd_base;
    if (!spec.output.empty()) j["name"] = spec.output;
    return j;
}

}  // namespace

DatasetSchema DatasetSchema::energy_default() {
    DatasetSchema s;
    s.date_column = "Date";
    s.require_sectors = true;
    for (const char* t : kSectors) s.columns.push_back({t, "mcm/day", ColumnKind::Target});
    s.columns.push_back({"HDD", "degree-days", ColumnKind::Predictor});
    s.columns.push_back({"Rus", "mcm/day", ColumnKind::Predictor});
    s.columns.push_back({"THE Price", "EUR/MWh", ColumnKind::Predictor});
    s.columns.push_back({"DE wind", "GWh/day", ColumnKind::Predictor});
    s.columns.push_back({"DE solar", "GWh/day", ColumnKind::Predictor});
    s.columns.push_back({"French nuclear", "GWh/day", ColumnKind::Predictor});
    s.columns.push_back({"UK NL Production", "mcm/day", ColumnKind::Predictor});
    s.columns.push_back({"EU storage", "TWh", ColumnKind::Predictor});
    s.columns.push_back({"EU LNG", "mcm/day", ColumnKind::Predictor});
    s.columns.push_back({"DE index", "index points", ColumnKind::Predictor});
    s.columns.push_back({"Workday", "0/1", ColumnKind::Predictor});
    auto feature = [](std::string source, Transform t) {
        FeatureSpec f;
        f.source = std::move(source);
        f.transform = t;
        return f;
    };
    s.features.push_back(feature("HDD", Transform::Lag));
    s.features.push_back(feature("", Transform::WarDummy));
    s.features.push_back(feature("", Transform::MonthNumber));
    s.features.push_back(feature("", Transform::CyclicalMonth));
    return s;
}

DatasetSchema DatasetSchema::from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::Schema, std::string("schema is not valid JSON: ") + e.what());
    }
    DatasetSchema s;
    try {
        s.date_column = j.value("date_column", s.date_column);
        s.date_format = j.value("date_format", s.date_format);
        s.require_sectors = j.value("require_sectors", false);
        const json columns = j.value("columns", json::object());
        for (const auto& [name, spec] : columns.items()) {
            s.columns.push_back({name, spec.value("unit", ""),
                                 parse_kind(spec.value("kind", "predictor"))});
        }
        const json features = j.value("features", json::array());
        for (const auto& f : features) s.features.push_back(feature_from_json(f));
    } catch (const json::exception& e) {
        fail(ErrorCode::Schema, std::string("malformed schema: ") + e.what());
    }
    s.validate();
    return s;
}

DatasetSchema DatasetSchema::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open schema file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string DatasetSchema::to_json() const {
    json j{{"date_column", date_column}, {"date_format", date_format},
           {"require_sectors", require_sectors}};
    json cols = json::object();
    for (const auto& c : columns) cols[c.name] = {{"unit", c.unit}, {"kind", kind_name(c.kind)}};
    j["columns"] = cols;
    json feats = json::array();
    for (const auto& f : features) feats.push_back(feature_to_json(f));
    j["features"] = feats;
    return j.dump(2);
}

std::vector<std::string> DatasetSchema::targets() const {
    std::vector<std::string> out;
    for (const auto& c : columns) {
        if (c.kind == ColumnKind::Target) out.push_back(c.name);
    }
    return out;
}

std::vector<std::string> DatasetSchema::predictors() const {
    std::vector<std::string> out;
    for (const auto& c : columns) {
        if (c.kind == ColumnKind::Predictor) out.push_back(c.name);
    }
    for (const auto& f : features) {
        // The cyclic pair is a model encoding of Month, not a separate factor.
        if (f.transform == Transform::CyclicalMonth || f.transform == Transform::Raw) continue;
        for (auto& n : output_names(f)) out.push_back(std::move(n));
    }
    return out;
}

void DatasetSchema::validate() const {
    if (date_format != "%Y-%m-%d") {
        fail(ErrorCode::Schema, "only ISO-8601 dates (%Y-%m-%d) are supported, got '" +
                                    date_format + "'");
    }
    if (date_column.empty()) fail(ErrorCode::Schema, "empty date column name");
    std::set<std::string> seen;
    for (const auto& c : columns) {
        if (c.name.empty() || !seen.insert(c.name).second) {
            fail(ErrorCode::Schema, "duplicate or empty column '" + c.name + "'");
        }
    }
    if (require_sectors) {
        for (const char* t : kSectors) {
            auto it = std::find_if(columns.begin(), columns.end(),
                                   [&](const ColumnSchema& c) { return c.name == t; });
            if (it == columns.end() || it->kind != ColumnKind::Target) {
                fail(ErrorCode::Schema, std::string("sector '") + t + "' must be a target column");
            }
        }
    }
    std::set<std::string> available = seen;
    for (const auto& f : features) {
        const bool needs_source = f.transform == Transform::Raw || f.transform == Transform::Lag ||
                                  f.transform == Transform::HddFromTemperature;
        if (needs_source && !available.count(f.source)) {
            fail(ErrorCode::Schema, "feature source '" + f.source + "' is not a schema column");
        }
        for (auto& n : output_names(f)) available.insert(std::move(n));
    }
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        fail(ErrorCode::Io, "sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

LoadResult load_csv(const std::string& path, const DatasetSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open dataset '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), schema, path);
}

LoadResult parse_csv(std::string_view bytes, const DatasetSchema& schema, std::string_view source) {
    schema.validate();
    const std::string where(source);
    if (bytes.size() >= 3 && bytes.substr(0, 3) == "\xEF\xBB\xBF") bytes.remove_prefix(3);

    std::vector<std::pair<std::size_t, std::string_view>> lines;
    {
        std::size_t line_no = 0, start = 0;
        while (start <= bytes.size()) {
            std::size_t end = bytes.find('\n', start);
            if (end == std::string_view::npos) end = bytes.size();
            ++line_no;
            const auto line = bytes.substr(start, end - start);
            if (!trim(line).empty()) lines.emplace_back(line_no, line);
            start = end + 1;
        }
    }
    if (lines.empty()) fail(ErrorCode::Schema, where + ": empty file");

    const auto header = split_record(lines.front().second);
    auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    };
    const auto date_col = find_col(schema.date_column);
    if (!date_col) fail(ErrorCode::Schema, where + ": missing date column '" + schema.date_column + "'");
    for (const auto& c : schema.columns) {
        if (!find_col(c.name)) fail(ErrorCode::Schema, where + ": missing required column '" + c.name + "'");
    }

    // Every non-date header column is kept; schema order first, then the rest.
    std::vector<std::pair<std::string, std::size_t>> kept;
    std::set<std::string> names;
    for (const auto& c : schema.columns) {
        kept.emplace_back(c.name, *find_col(c.name));
        names.insert(c.name);
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i == *date_col || header[i].empty()) continue;
        if (names.insert(header[i]).second) kept.emplace_back(header[i], i);
    }

    LoadResult result;
    std::vector<Date> raw_dates;
    std::vector<std::vector<Value>> raw(kept.size());
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto [line_no, line] = lines[r];
        const auto fields = split_record(line);
        const auto date = *date_col < fields.size() ? parse_date(fields[*date_col]) : std::nullopt;
        if (!date) {
            fail(ErrorCode::Parse, where + ":" + std::to_string(line_no) + ": unparseable date '" +
                                       (*date_col < fields.size() ? fields[*date_col] : "") + "'");
        }
        if (!raw_dates.empty() && *date <= raw_dates.back()) {
            fail(ErrorCode::Parse, where + ":" + std::to_string(line_no) + ": date " +
                                       format_date(*date) + " is not after the previous row");
        }
        raw_dates.push_back(*date);
        for (std::size_t c = 0; c < kept.size(); ++c) {
            const std::size_t at = kept[c].second;
            const std::string_view cell = at < fields.size() ? std::string_view(fields[at]) : "";
            if (cell.empty()) {
                raw[c].emplace_back();
                continue;
            }
            auto v = parse_number(cell);
            if (!v) ++result.parse_failures[kept[c].first];
            raw[c].push_back(v);
        }
    }
    if (raw_dates.empty()) fail(ErrorCode::Schema, where + ": no data rows");

    // Fill date gaps with missing rows so the index is contiguous.
    const auto span = static_cast<std::size_t>((raw_dates.back() - raw_dates.front()).count()) + 1;
    result.gap_rows = span - raw_dates.size();
    std::vector<std::pair<std::string, Column>> columns;
    columns.reserve(kept.size());
    for (std::size_t c = 0; c < kept.size(); ++c) {
        Column col(span);
        for (std::size_t r = 0; r < raw_dates.size(); ++r) {
            col[static_cast<std::size_t>((raw_dates[r] - raw_dates.front()).count())] = raw[c][r];
        }
        columns.emplace_back(kept[c].first, std::move(col));
    }
    result.frame = SeriesFrame(TimeIndex::daily(raw_dates.front(), span), std::move(columns));
    result.sha256 = sha256_hex(bytes);
    return result;
}

void write_csv(const SeriesFrame& frame, std::ostream& out, std::string_view date_column) {
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + '"';
    };
    out << date_column;
    for (std::size_t c = 0; c < frame.cols(); ++c) out << ',' << quote(frame.column_at(c).first);
    out << '\n';
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        out << format_date(frame.index()[r]);
        for (std::size_t c = 0; c < frame.cols(); ++c) {
            out << ',';
            if (const auto& v = frame.column_at(c).second[r]) out << format_double(*v);
        }
        out << '\n';
    }
}

SeriesFrame build_features(const SeriesFrame& frame, const std::vector<FeatureSpec>& specs) {
    SeriesFrame out = frame;
    const auto& index = frame.index();
    for (const auto& spec : specs) {
        const auto names = output_names(spec);
        for (const auto& n : names) {
            if (out.has(n)) fail(ErrorCode::InvalidArgument, "feature '" + n + "' collides with an existing column");
        }
        Column a(index.size()), b;
        switch (spec.transform) {
        case Transform::Raw:
            a = out.column(spec.source);
            break;
        case Transform::Lag:
            a = lag(out.column(spec.source), spec.lag);
            break;
        case Transform::HddFromTemperature: {
            const auto& temp = out.column(spec.source);
            for (std::size_t i = 0; i < temp.size(); ++i) {
                if (temp[i]) a[i] = hdd_from_temperature(*temp[i], spec.hdd_base);
            }
            break;
        }
        case Transform::WarDummy:
            for (std::size_t i = 0; i < index.size(); ++i) a[i] = war_dummy(index[i], spec.anchor);
            break;
        case Transform::MonthNumber:
            for (std::size_t i = 0; i < index.size(); ++i) a[i] = month_of(index[i]);
            break;
        case Transform::WorkdayFlag:
            // Monday..Friday; no holiday calendar.
            for (std::size_t i = 0; i < index.size(); ++i) {
                const std::chrono::weekday wd{index[i]};
                a[i] = (wd != std::chrono::Saturday && wd != std::chrono::Sunday) ? 1.0 : 0.0;
            }
            break;
        case Transform::CyclicalMonth:
            b.resize(index.size());
            for (std::size_t i = 0; i < index.size(); ++i) {
                const auto [s, c] = cyclical_month(index[i]);
                a[i] = s;
                b[i] = c;
            }
            break;
        }
        out = out.with_column(names[0], std::move(a));
        if (names.size() > 1) out = out.with_column(names[1], std::move(b));
    }
    return out;
}

std::vector<Date> SupervisedSet::dates() const {
    std::vector<Date> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.date);
    return out;
}

SupervisedSet SupervisedSet::subset(std::size_t begin, std::size_t end) const {
    if (begin > end || end > samples.size()) fail(ErrorCode::InvalidArgument, "subset out of range");
    SupervisedSet out{target, feature_names, lag, {}};
    out.samples.assign(samples.begin() + begin, samples.begin() + end);
    return out;
}

SupervisedSet SupervisedSet::filter(const std::function<bool(Date)>& keep) const {
    SupervisedSet out{target, feature_names, lag, {}};
    for (const auto& s : samples) {
        if (keep(s.date)) out.samples.push_back(s);
    }
    return out;
}

std::vector<std::string> window_columns(std::string_view target,
                                        const std::vector<std::string>& features) {
    std::vector<std::string> cols{std::string(target)};
    for (const auto& f : features) {
        if (std::find(cols.begin(), cols.end(), f) == cols.end()) cols.push_back(f);
    }
    return cols;
}

SupervisedSet make_windows(const SeriesFrame& frame, std::string_view target,
                           const std::vector<std::string>& features, int lag) {
    if (lag < 1) fail(ErrorCode::InvalidArgument, "lag must be >= 1");
    const auto names = window_columns(target, features);
    std::vector<const Column*> cols;
    cols.reserve(names.size());
    for (const auto& n : names) cols.push_back(&frame.column(n));
    const Column& y = frame.column(target);
    const auto tau = static_cast<std::size_t>(lag);
    const std::size_t dims = names.size();

    // Row t is usable iff every window column is present there; a window
    // [t - tau, t - 1] is complete iff the run of usable rows ending at t - 1 is >= tau.
    SupervisedSet out{std::string(target), names, lag, {}};
    std::size_t run = 0;
    for (std::size_t t = 0; t < frame.rows(); ++t) {
        if (t >= tau && run >= tau && y[t]) {
            Sample s{frame.index()[t], std::vector<double>(tau * dims), *y[t]};
            for (std::size_t r = 0; r < tau; ++r) {
                for (std::size_t d = 0; d < dims; ++d) s.window[r * dims + d] = *(*cols[d])[t - tau + r];
            }
            out.samples.push_back(std::move(s));
        }
        const bool usable = std::all_of(cols.begin(), cols.end(), [&](const Column* c) { return (*c)[t].has_value(); });
        run = usable ? run + 1 : 0;
    }
    if (out.samples.empty()) {
        fail(ErrorCode::EmptyDataset, "no complete windows for target '" + std::string(target) + "'");
    }
    return out;
}

}  // namespace ce
