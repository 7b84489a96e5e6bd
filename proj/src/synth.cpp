#include "causal_energy/synth.hpp"

#include "causal_energy/error.hpp"
#include "causal_energy/rng.hpp"

#include <json.hpp>

#include <cmath>

namespace ce {

namespace {

constexpr std::pair<GeneratorKind, const char*> kKinds[] = {
    {GeneratorKind::GaussianPair, "gaussian-pair"},
    {GeneratorKind::Ar1, "ar1"},
    {GeneratorKind::TanhCoupled, "tanh-coupled"},
    {GeneratorKind::StepIntervention, "step-intervention"},
};

struct Raw {
    std::vector<double> x;  // empty for ar1
    std::vector<double> y;
};

Raw draw(const GeneratorSpec& s, GeneratorKind kind, Rng& rng) {
    Raw r;
    switch (kind) {
    case GeneratorKind::GaussianPair: {
        const double c = std::sqrt(1.0 - s.rho * s.rho);
        for (std::size_t i = 0; i < s.n; ++i) {
            const double z1 = rng.normal(), z2 = rng.normal();
            r.x.push_back(z1);
            r.y.push_back(s.rho * z1 + c * z2);
        }
        break;
    }
    case GeneratorKind::Ar1: {
        double y = rng.normal() * s.sigma / std::sqrt(1.0 - s.phi * s.phi);
        for (std::size_t i = 0; i < s.n; ++i) {
            if (i > 0) y = s.phi * y + s.sigma * rng.normal();
            r.y.push_back(y);
        }
        break;
    }
    case GeneratorKind::TanhCoupled: {
        const std::size_t total = s.n + s.burn_in;
        const auto lag = static_cast<std::size_t>(s.lag);
        std::vector<double> x(total), y(total, 0.0);
        x[0] = rng.normal() * s.sigma_x / std::sqrt(1.0 - s.phi_x * s.phi_x);
        for (std::size_t t = 1; t < total; ++t) x[t] = s.phi_x * x[t - 1] + s.sigma_x * rng.normal();
        for (std::size_t t = 1; t < total; ++t) {
            const double drive = t >= lag ? s.coupling * std::tanh(2.0 * x[t - lag]) : 0.0;
            y[t] = s.phi_y * y[t - 1] + drive + s.sigma * rng.normal();
        }
        r.x.assign(x.begin() + static_cast<std::ptrdiff_t>(s.burn_in), x.end());
        r.y.assign(y.begin() + static_cast<std::ptrdiff_t>(s.burn_in), y.end());
        break;
    }
    case GeneratorKind::StepIntervention:
        fail(ErrorCode::InvalidArgument, "step-intervention cannot be its own base");
    }
    return r;
}

Column to_column(const std::vector<double>& v) {
    Column c(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) c[i] = v[i];
    return c;
}

}  // namespace

std::optional<GeneratorKind> parse_generator_kind(std::string_view name) {
    for (const auto& [k, n] : kKinds) {
        if (name == n) return k;
    }
    return std::nullopt;
}

const char* to_string(GeneratorKind kind) noexcept {
    for (const auto& [k, n] : kKinds) {
        if (k == kind) return n;
    }
    return "?";
}

void GeneratorSpec::validate() const {
    auto bad = [](const std::string& what) { fail(ErrorCode::InvalidArgument, "generator spec: " + what); };
    if (n < 10) bad("n must be >= 10");
    if (!(std::abs(rho) < 1.0)) bad("|rho| must be < 1");
    if (!(std::abs(phi) < 1.0) || !(std::abs(phi_x) < 1.0) || !(std::abs(phi_y) < 1.0)) bad("|phi| must be < 1");
    if (!(sigma > 0.0) || !(sigma_x > 0.0)) bad("sigma must be > 0");
    if (lag < 1) bad("lag must be >= 1");
    if (kind == GeneratorKind::StepIntervention) {
        if (base == GeneratorKind::StepIntervention) bad("base generator cannot be step-intervention");
        if (anchor_index == 0 || anchor_index >= n) bad("anchor index must lie in (0, n)");
    }
}

GeneratorSpec GeneratorSpec::from_json(std::string_view text) {
    using json = nlohmann::json;
    GeneratorSpec s;
    try {
        const json j = json::parse(text);
        auto kind_of = [](const json& v) {
            const auto k = parse_generator_kind(v.get<std::string>());
            if (!k) fail(ErrorCode::InvalidArgument, "unknown generator kind " + v.dump());
            return *k;
        };
        s.kind = kind_of(j.at("kind"));
        if (j.contains("base")) s.base = kind_of(j.at("base"));
        s.rho = j.value("rho", s.rho);
        s.phi = j.value("phi", s.phi);
        s.sigma = j.value("sigma", s.sigma);
        s.phi_x = j.value("phi_x", s.phi_x);
        s.sigma_x = j.value("sigma_x", s.sigma_x);
        s.phi_y = j.value("phi_y", s.phi_y);
        s.coupling = j.value("coupling", s.coupling);
        s.lag = j.value("lag", s.lag);
        s.anchor_index = j.value("anchor_index", s.anchor_index);
        s.effect = j.value("effect", s.effect);
        s.n = j.value("n", s.n);
        s.seed = j.value("seed", s.seed);
        s.burn_in = j.value("burn_in", s.burn_in);
        if (j.contains("start")) {
            const auto d = parse_date(j.at("start").get<std::string>());
            if (!d) fail(ErrorCode::InvalidArgument, "bad start date " + j.at("start").dump());
            s.start = *d;
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("malformed generator spec: ") + e.what());
    }
    s.validate();
    return s;
}

Synthetic generate(const GeneratorSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const bool step = spec.kind == GeneratorKind::StepIntervention;
    const GeneratorKind kind = step ? spec.base : spec.kind;
    Raw raw = draw(spec, kind, rng);

    using json = nlohmann::json;
    json meta{{"kind", to_string(spec.kind)},
              {"n", spec.n},
              {"seed", spec.seed},
              {"start", format_date(spec.start)},
              {"rng", "xoshiro256** seeded by splitmix64; Box-Muller normals"}};
    switch (kind) {
    case GeneratorKind::GaussianPair:
        meta["rho"] = spec.rho;
        meta["true_mi_nats"] = analytic_mi_gaussian(spec.rho);
        break;
    case GeneratorKind::Ar1:
        meta["phi"] = spec.phi;
        meta["sigma"] = spec.sigma;
        break;
    case GeneratorKind::TanhCoupled:
        meta["phi_x"] = spec.phi_x;
        meta["sigma_x"] = spec.sigma_x;
        meta["phi_y"] = spec.phi_y;
        meta["coupling"] = spec.coupling;
        meta["lag"] = spec.lag;
        meta["sigma"] = spec.sigma;
        meta["burn_in"] = spec.burn_in;
        meta["causal_edges"] = json::array({{{"cause", "x"}, {"effect", "y"}, {"lag", spec.lag}}});
        break;
    case GeneratorKind::StepIntervention: break;
    }

    const TimeIndex index = TimeIndex::daily(spec.start, spec.n);
    std::vector<std::pair<std::string, Column>> cols;
    if (!raw.x.empty()) cols.emplace_back("x", to_column(raw.x));
    if (step) {
        for (std::size_t t = spec.anchor_index; t < spec.n; ++t) raw.y[t] += spec.effect;
        meta["base"] = to_string(spec.base);
        meta["anchor_index"] = spec.anchor_index;
        meta["anchor_date"] = format_date(index[spec.anchor_index]);
        meta["effect"] = spec.effect;
    }
    cols.emplace_back("y", to_column(raw.y));
    if (step) {
        Column war(spec.n);
        for (std::size_t t = 0; t < spec.n; ++t) war[t] = t >= spec.anchor_index ? 1.0 : 0.0;
        cols.emplace_back("War", std::move(war));
    }
    json names = json::array();
    for (const auto& c : cols) names.push_back(c.first);
    meta["columns"] = names;
    return {SeriesFrame(index, std::move(cols)), meta.dump(2)};
}

double brute_wilcoxon(std::span<const double> a, std::span<const double> b, Alternative alternative) {
    if (a.size() != b.size()) fail(ErrorCode::InvalidArgument, "brute_wilcoxon: length mismatch");
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
    }
    const std::size_t n = d.size();
    if (n > 15) fail(ErrorCode::InvalidArgument, "brute_wilcoxon: refusing n > 15");
    if (n == 0) return 1.0;
    // Midrank by direct counting.
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t below = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(d[j]) < std::abs(d[i])) ++below;
            else if (std::abs(d[j]) == std::abs(d[i])) ++equal;
        }
        rank[i] = static_cast<double>(below) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
    double observed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] > 0) observed += rank[i];
    }
    const std::uint32_t patterns = 1u << n;
    std::uint32_t le = 0, ge = 0;
    for (std::uint32_t mask = 0; mask < patterns; ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (1u << i)) w += rank[i];
        }
        if (w <= observed) ++le;
        if (w >= observed) ++ge;
    }
    const double total = static_cast<double>(patterns);
    const double p_less = le / total, p_greater = ge / total;
    switch (alternative) {
    case Alternative::Less: return p_less;
    case Alternative::Greater: return p_greater;
    case Alternative::TwoSided: return std::min(1.0, 2.0 * std::min(p_less, p_greater));
    }
    return 1.0;
}

double analytic_mi_gaussian(double rho) {
    if (!(std::abs(rho) < 1.0)) fail(ErrorCode::InvalidArgument, "analytic MI needs |rho| < 1");
    return -0.5 * std::log1p(-rho * rho);
}

}  // namespace ce
