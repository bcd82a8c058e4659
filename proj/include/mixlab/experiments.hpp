#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mixlab/core.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/stationary.hpp"

namespace mixlab {

// Regime thresholds on gamma_hat = alpha * T_ent.
inline constexpr double kGammaZeroBelow = 0.2;
inline constexpr double kGammaInfAbove = 5.0;
// Grid points this close to a discontinuity of the theory curve are flagged.
inline constexpr double kDiscontinuityBand = 0.1;
// Exhaustive max over start vertices up to this n; sampled above it.
inline constexpr std::size_t kExhaustiveStartLimit = 2000;
inline constexpr std::size_t kDefaultStartSample = 32;
inline constexpr double kDefaultOpBudget = 5e10;

enum class TimeScale { Alpha, Entropic };

struct StartVertices {
    enum class Mode { Auto, All, Sample, Explicit };
    Mode mode = Mode::Auto;
    std::size_t sample_size = kDefaultStartSample;
    std::vector<Vertex> vertices;

    static StartVertices all() { return {Mode::All, 0, {}}; }
    static StartVertices sample(std::size_t k) { return {Mode::Sample, k, {}}; }
    static StartVertices list(std::vector<Vertex> v) { return {Mode::Explicit, 0, std::move(v)}; }
};

/// Resolves the start set for one replicate; sampled sets are drawn from rng
/// without replacement and sorted.
std::vector<Vertex> resolve_starts(const StartVertices& spec, std::size_t n, RngStream rng);
std::string_view start_mode_name(const StartVertices& spec, std::size_t n);

struct ExperimentConfig {
    DegreeSequence seq;
    double alpha = 0.01;
    std::vector<double> beta_grid;
    std::vector<std::size_t> s_grid;
    /// Independent primary environments sigma.
    std::size_t replicates = 10;
    /// Fresh environments eta averaged per replicate.
    std::size_t env_samples = 30;
    StartVertices start_vertices;
    std::uint64_t root_seed = 0;
    TimeScale time_scale = TimeScale::Alpha;
    /// Half-width of the excluded window around T_ent in the double-cutoff sweep.
    double epsilon = 0.25;
    std::size_t q_replicates = 20;
    double tol = kDefaultStationaryTol;
    /// 0 selects default_max_iters(seq).
    std::size_t max_iters = 0;
    double op_budget = kDefaultOpBudget;
    unsigned threads = 1;
};

/// Throws BadValue unless alpha is in (0,1) and the grids are sorted.
void validate_config(const ExperimentConfig& cfg);

struct ReportRow {
    double abscissa = 0.0;
    double estimate = 0.0;
    double std_err = 0.0;
    double theory = 0.0;
    std::size_t n_effective = 0;
    /// Near a theory discontinuity; excluded from scoring.
    bool flagged = false;
    std::vector<double> extra;
};

struct ExperimentReport {
    std::string experiment;
    std::vector<std::string> extra_columns;
    std::vector<ReportRow> rows;
    nlohmann::json metadata = nlohmann::json::object();

    /// max |estimate - theory| over unflagged rows.
    [[nodiscard]] double max_deviation() const;
};

enum class Curve {
    JointGamma0,
    JointGammaInf,
    JointGeneral,
    MarginalGamma0,
    MarginalGammaInf,
    MarginalGeneral,
    StaticPhi,
};

Curve parse_curve(std::string_view name);
std::string_view to_string(Curve curve) noexcept;

/// Closed-form limit curves. At the excluded point beta == gamma (beta == 1
/// for StaticPhi) the upper branch is returned.
double theory_curve(Curve curve, double beta, double gamma, double q);
double theory_curves(std::string_view curve, double beta, double gamma, double q);
/// Abscissa at which the curve jumps, if any.
std::optional<double> discontinuity(Curve curve, double gamma);

Curve joint_curve_for(double gamma_hat);
Curve marginal_curve_for(double gamma_hat);

ExperimentReport static_cutoff_profile(const ExperimentConfig& cfg);
ExperimentReport double_cutoff_sweep(const ExperimentConfig& cfg, double beta);
ExperimentReport joint_trichotomy_curve(const ExperimentConfig& cfg);
ExperimentReport marginal_trichotomy_curve(const ExperimentConfig& cfg);

struct CrosscheckResult {
    double estimate = 0.0;
    double std_err = 0.0;
    std::size_t n_effective = 0;
};

/// Direct estimate of ||P_{sigma,x}(X_t = .) - mu_in||_TV from sampled
/// regeneration schedules, averaged over the same (sigma, x) replicates as
/// marginal_trichotomy_curve.
CrosscheckResult marginal_mc_crosscheck(const ExperimentConfig& cfg, std::size_t t,
                                        std::size_t schedule_samples);
/// Crosscheck at t = floor(beta / alpha) for every beta in the grid; the
/// theory column holds marginal_trichotomy_curve's estimate.
ExperimentReport marginal_crosscheck_report(const ExperimentConfig& cfg, std::size_t schedule_samples);

/// ||mean_eta P_eta^t(x, .) - mu_in||_TV, maximised over start vertices.
/// std_err is the Monte-Carlo noise level (1/2) sum_y sd_y / sqrt(env_samples)
/// at the maximising vertex.
ExperimentReport annealed_check(const DegreeSequence& seq, const std::vector<std::size_t>& t_grid,
                                std::size_t env_samples, const StartVertices& starts, RngStream rng,
                                unsigned threads = 1);

struct WeightLln {
    double frac_in_window = 0.0;
    double frac_std_err = 0.0;
    double mean_rate = 0.0;
    double entropy = 0.0;
    std::size_t samples = 0;
};

/// Samples (sigma, eta) and trajectories from uniform start vertices; reports
/// the fraction with -log w / (H t) in [1 - eps, 1 + eps] and the mean of
/// -log w / t.
WeightLln path_weight_lln(const DegreeSequence& seq, std::size_t s, std::size_t t,
                          std::size_t traj_samples, RngStream rng, double eps, unsigned threads = 1);

/// One row per replicate: (replicate, seed, iterations, residual, l2_stat,
/// max_stat, tv_to_mu_in).
struct DiagnosticsReport {
    QEstimate q;
    nlohmann::json metadata = nlohmann::json::object();
};
DiagnosticsReport widespread_diagnostics(const ExperimentConfig& cfg);

}  // namespace mixlab
