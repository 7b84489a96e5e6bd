#include "causal_energy/report.hpp"

#include "causal_energy/format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace ce {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

// Fixed short precision for drawing coordinates.
std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string header(const std::string& stamp, int width, int height) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!-- " << xml_escape(stamp) << " -->\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return out.str();
}

std::string text(double x, double y, const std::string& s, const char* anchor = "start", int size = 11) {
    return "<text x=\"" + px(x) + "\" y=\"" + px(y) + "\" text-anchor=\"" + anchor + "\" font-size=\"" +
           std::to_string(size) + "\">" + xml_escape(s) + "</text>\n";
}

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '-':
            // "--" is illegal inside XML comments
            out += (!out.empty() && out.back() == '-') ? "&#45;" : "-";
            break;
        default: out += c;
        }
    }
    return out;
}

std::string mi_csv(const std::vector<MICell>& cells, const std::map<std::string, SelectionResult>& selections) {
    std::ostringstream out;
    out << kMiCsvHeader << '\n';
    for (const auto& c : cells) {
        bool selected = false;
        if (auto it = selections.find(c.target); it != selections.end()) selected = it->second.selected.count(c.factor) > 0;
        out << csv_field(c.target) << ',' << csv_field(c.factor) << ',';
        if (c.score) out << format_double(c.score->value) << ',' << c.score->n << ',' << c.score->k;
        else out << ",,";
        out << ',' << (selected ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string granger_csv(const std::vector<GrangerResult>& results) {
    std::ostringstream out;
    out << kGrangerCsvHeader << '\n';
    for (const auto& r : results) {
        out << csv_field(r.target) << ',' << csv_field(r.candidate) << ',' << r.base_model << ',';
        if (r.ok()) {
            out << r.n_pairs << ',' << format_double(r.statistic) << ',' << format_double(r.p_value) << ','
                << format_double(r.mae_restricted) << ',' << format_double(r.mae_augmented);
        } else {
            out << ",,,,";
        }
        out << ',' << r.seed << ',' << csv_field(r.status) << '\n';
    }
    return out.str();
}

std::string counterfactual_csv(const CounterfactualReport& report) {
    std::ostringstream out;
    out << kCounterfactualCsvHeader << '\n';
    for (const auto& r : report.rows) {
        out << csv_field(report.sector) << ',' << format_month(r.month) << ',' << format_double(r.actual) << ','
            << format_double(r.factual) << ',' << format_double(r.counterfactual) << ','
            << format_double(r.delta_war) << ',' << format_double(r.delta_nowar) << ',' << opt(r.delta_war_pct)
            << ',' << opt(r.delta_nowar_pct) << '\n';
    }
    return out.str();
}

std::string svg_mi_bars(const std::string& title, const SelectionResult& selection, const std::string& stamp) {
    const int row_h = 18, left = 150, bar_w = 360;
    const int height = 60 + row_h * static_cast<int>(selection.ranked.size());
    std::string svg = header(stamp, left + bar_w + 80, height);
    svg += text(10, 20, title, "start", 14);
    double vmax = 0.0;
    for (const auto& s : selection.ranked) vmax = std::max(vmax, s.value);
    if (!(vmax > 0.0)) vmax = 1.0;
    int y = 40;
    for (const auto& s : selection.ranked) {
        const bool sel = selection.selected.count(s.factor) > 0;
        const double w = std::max(0.0, s.value) / vmax * bar_w;
        svg += text(left - 6, y + 12, s.factor + (sel ? " \xC3\x97" : ""), "end");
        svg += "<rect x=\"" + std::to_string(left) + "\" y=\"" + std::to_string(y + 2) + "\" width=\"" + px(w) +
               "\" height=\"" + std::to_string(row_h - 4) + "\" fill=\"" + (sel ? "#c0392b" : "#95a5a6") + "\"/>\n";
        svg += text(left + w + 4, y + 12, short_num(s.value));
        y += row_h;
    }
    svg += text(10, height - 8, "coverage " + short_num(selection.coverage) + " (\xC3\x97 = selected)");
    svg += "</svg>\n";
    return svg;
}

std::string svg_pvalue_table(const std::string& title, const std::vector<GrangerResult>& results,
                             const std::string& stamp) {
    std::vector<std::string> rows, cols;
    for (const auto& r : results) {
        if (std::find(rows.begin(), rows.end(), r.target) == rows.end()) rows.push_back(r.target);
    }
    std::set<std::string> cand;
    for (const auto& r : results) cand.insert(r.candidate);
    cols.assign(cand.begin(), cand.end());
    const int cell_w = 70, cell_h = 24, left = 80, top = 110;
    const int width = left + cell_w * static_cast<int>(cols.size()) + 20;
    const int height = top + cell_h * static_cast<int>(rows.size()) + 30;
    std::string svg = header(stamp, std::max(width, 300), height);
    svg += text(10, 20, title, "start", 14);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const double x = left + cell_w * static_cast<double>(c) + cell_w / 2.0;
        svg += "<text transform=\"translate(" + px(x) + "," + std::to_string(top - 6) +
               ") rotate(-45)\" font-size=\"10\">" + xml_escape(cols[c]) + "</text>\n";
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const int y = top + cell_h * static_cast<int>(r);
        svg += text(left - 6, y + 16, rows[r], "end");
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const int x = left + cell_w * static_cast<int>(c);
            auto it = std::find_if(results.begin(), results.end(),
                                   [&](const GrangerResult& g) { return g.target == rows[r] && g.candidate == cols[c]; });
            std::string fill = "#eeeeee", label = "";
            if (it != results.end()) {
                if (it->ok()) {
                    // Light for large p, dark red for small p.
                    const double p = std::clamp(it->p_value, 0.0, 1.0);
                    const int shade = static_cast<int>(std::lround(255 * p));
                    char buf[16];
                    std::snprintf(buf, sizeof buf, "#ff%02x%02x", shade, shade);
                    fill = buf;
                    label = short_num(it->p_value);
                } else {
                    label = "failed";
                }
            }
            svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
                   std::to_string(cell_w) + "\" height=\"" + std::to_string(cell_h) + "\" fill=\"" + fill +
                   "\" stroke=\"#555\"/>\n";
            svg += text(x + cell_w / 2.0, y + 16, label, "middle", 10);
        }
    }
    svg += "</svg>\n";
    return svg;
}

std::string svg_counterfactual(const std::string& title, const DatedSeries& actual, const DatedSeries& factual,
                               const DatedSeries& counterfactual, const CounterfactualReport& report,
                               const std::string& stamp) {
    const int width = 760, plot_h = 220, bar_h = 160, left = 60, right = 20;
    const int top1 = 40, top2 = top1 + plot_h + 50;
    const int height = top2 + bar_h + 50;
    std::string svg = header(stamp, width, height);
    svg += text(10, 22, title, "start", 14);

    // Line panel.
    Date d0{}, d1{};
    double lo = INFINITY, hi = -INFINITY;
    bool any = false;
    for (const auto* s : {&actual, &factual, &counterfactual}) {
        for (std::size_t i = 0; i < s->size(); ++i) {
            if (!any || s->dates[i] < d0) d0 = s->dates[i];
            if (!any || s->dates[i] > d1) d1 = s->dates[i];
            any = true;
            lo = std::min(lo, s->values[i]);
            hi = std::max(hi, s->values[i]);
        }
    }
    if (any) {
        if (!(hi > lo)) hi = lo + 1.0;
        const double span = std::max(1.0, static_cast<double>((d1 - d0).count()));
        const double pw = width - left - right;
        auto line = [&](const DatedSeries& s, const char* colour) {
            std::string pts;
            for (std::size_t i = 0; i < s.size(); ++i) {
                const double x = left + pw * static_cast<double>((s.dates[i] - d0).count()) / span;
                const double y = top1 + plot_h * (1.0 - (s.values[i] - lo) / (hi - lo));
                pts += px(x) + "," + px(y) + " ";
            }
            return "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1\" points=\"" +
                   pts + "\"/>\n";
        };
        svg += "<rect x=\"" + std::to_string(left) + "\" y=\"" + std::to_string(top1) + "\" width=\"" +
               px(pw) + "\" height=\"" + std::to_string(plot_h) + "\" fill=\"none\" stroke=\"#999\"/>\n";
        svg += line(actual, "#000000") + line(factual, "#c0392b") + line(counterfactual, "#27ae60");
        svg += text(left - 4, top1 + 10, short_num(hi), "end", 10);
        svg += text(left - 4, top1 + plot_h, short_num(lo), "end", 10);
        svg += text(left, top1 + plot_h + 14, format_date(d0), "start", 10);
        svg += text(width - right, top1 + plot_h + 14, format_date(d1), "end", 10);
        svg += text(left + 10, top1 + plot_h + 30, "black: actual, red: with war, green: without war", "start", 10);
    }

    // Monthly delta bars (mcm/day).
    double dmax = 0.0;
    for (const auto& r : report.rows) dmax = std::max({dmax, std::abs(r.delta_war), std::abs(r.delta_nowar)});
    if (!(dmax > 0.0)) dmax = 1.0;
    const double zero_y = top2 + bar_h / 2.0;
    svg += text(10, top2 - 10, "Monthly difference (forecast - actual)", "start", 12);
    svg += "<line x1=\"" + std::to_string(left) + "\" x2=\"" + std::to_string(width - right) + "\" y1=\"" +
           px(zero_y) + "\" y2=\"" + px(zero_y) + "\" stroke=\"#555\"/>\n";
    if (!report.rows.empty()) {
        const double slot = (width - left - right) / static_cast<double>(report.rows.size());
        for (std::size_t i = 0; i < report.rows.size(); ++i) {
            const auto& r = report.rows[i];
            const double x = left + slot * static_cast<double>(i);
            auto bar = [&](double v, double offset, const char* colour) {
                const double h = std::abs(v) / dmax * (bar_h / 2.0);
                const double y = v >= 0 ? zero_y - h : zero_y;
                return "<rect x=\"" + px(x + offset) + "\" y=\"" + px(y) + "\" width=\"" + px(slot * 0.4) +
                       "\" height=\"" + px(h) + "\" fill=\"" + colour + "\"/>\n";
            };
            svg += bar(r.delta_war, slot * 0.1, "#c0392b") + bar(r.delta_nowar, slot * 0.5, "#27ae60");
            if (report.rows.size() <= 24 || i % 3 == 0) {
                svg += "<text transform=\"translate(" + px(x + slot / 2) + "," + px(top2 + bar_h + 12) +
                       ") rotate(45)\" font-size=\"9\">" + format_month(r.month) + "</text>\n";
            }
        }
    }
    svg += text(left - 4, top2 + 8, "+" + short_num(dmax), "end", 10);
    svg += text(left - 4, top2 + bar_h, "-" + short_num(dmax), "end", 10);
    svg += "</svg>\n";
    return svg;
}

}  // namespace ce
