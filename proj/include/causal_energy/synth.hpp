#pragma once

#include "causal_energy/granger.hpp"
#include "causal_energy/timeseries.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace ce {

enum class GeneratorKind { GaussianPair, Ar1, TanhCoupled, StepIntervention };

std::optional<GeneratorKind> parse_generator_kind(std::string_view name);
const char* to_string(GeneratorKind kind) noexcept;

/// Synthetic series with known ground truth.
///   gaussian-pair: x ~ N(0,1), y = rho x + sqrt(1 - rho^2) e            -> columns x, y
///   ar1:           y_t = phi y_{t-1} + sigma e_t, stationary start        -> column y
///   tanh-coupled:  x_t = phi_x x_{t-1} + sigma_x u_t,
///                  y_t = phi_y y_{t-1} + coupling tanh(2 x_{t-lag}) + sigma e_t -> x, y
///   step-intervention: `base` generator, then y += effect from anchor_index on;
///                  adds a 0/1 `War` column switching at the anchor.
struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::Ar1;
    GeneratorKind base = GeneratorKind::Ar1;  // step-intervention only
    double rho = 0.0;
    double phi = 0.5;
    double sigma = 1.0;
    double phi_x = 0.5;
    double sigma_x = 1.0;
    double phi_y = 0.6;
    double coupling = 1.0;
    int lag = 2;
    std::size_t anchor_index = 0;
    double effect = 0.0;
    std::size_t n = 1000;
    std::uint64_t seed = 42;
    Date start = make_date(2010, 4, 1);
    std::size_t burn_in = 200;

    void validate() const;
    static GeneratorSpec from_json(std::string_view text);
};

struct Synthetic {
    SeriesFrame frame;
    std::string metadata_json;  // every ground-truth parameter plus derived facts
};

Synthetic generate(const GeneratorSpec& spec);

/// Exact tail probability by enumerating all 2^n sign patterns (n <= 15 after
/// dropping zero differences). Independent of wilcoxon_signed_rank.
double brute_wilcoxon(std::span<const double> a, std::span<const double> b,
                      Alternative alternative = Alternative::Less);

/// -1/2 ln(1 - rho^2).
double analytic_mi_gaussian(double rho);

}  // namespace ce
