#include "mixlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "mixlab/parallel.hpp"
#include "mixlab/sampler.hpp"
#include "mixlab/walk.hpp"

namespace mixlab {

namespace {

// Stream tags under a root seed. Each purpose gets its own child family so
// that, e.g., replicate i of the static profile and the eta of pair i in the
// double-cutoff sweep are the same configuration.
enum StreamTag : std::uint64_t {
    kEnvTag = 1,
    kStartTag = 2,
    kSigmaPairTag = 3,
    kEtaTag = 4,
    kQTag = 5,
    kScheduleTag = 6,
};

RngStream tagged(std::uint64_t root_seed, StreamTag tag) { return RngStream(root_seed, tag); }

struct MeanSe {
    double mean = 0.0;
    double std_err = 0.0;
};

MeanSe mean_se(const std::vector<double>& values) {
    MeanSe out;
    if (values.empty()) return out;
    const auto n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.std_err = std::sqrt(ss / (n - 1.0) / n);
    }
    return out;
}

std::size_t resolved_max_iters(const ExperimentConfig& cfg) {
    return cfg.max_iters == 0 ? default_max_iters(cfg.seq) : cfg.max_iters;
}

std::size_t floor_steps(double value) {
    if (!(value >= 0.0) || !std::isfinite(value)) throw Error(ErrorCode::BadRange, "negative or non-finite time");
    return static_cast<std::size_t>(std::floor(value + 1e-12));
}

void check_budget(double ops, double budget, std::string_view what) {
    if (ops > budget) {
        throw Error(ErrorCode::BudgetExceeded, std::string(what) + " needs ~" + std::to_string(ops) +
                                                   " multiply-adds, budget " + std::to_string(budget));
    }
}

// Start vertices per replicate, for budget estimates made before sampling.
std::size_t expected_starts(const StartVertices& spec, std::size_t n) {
    switch (spec.mode) {
        case StartVertices::Mode::Explicit: return spec.vertices.size();
        case StartVertices::Mode::Sample: return std::min(spec.sample_size, n);
        case StartVertices::Mode::All: return n;
        case StartVertices::Mode::Auto: break;
    }
    return n <= kExhaustiveStartLimit ? n : kDefaultStartSample;
}

bool near(double a, std::optional<double> b) {
    return b.has_value() && std::abs(a - *b) < kDiscontinuityBand;
}

struct Environment {
    Digraph graph;
    TransitionKernel kernel;
};

Environment make_environment(const std::shared_ptr<const DegreeSequence>& seq, RngStream rng) {
    auto g = sample_digraph(seq, rng);
    auto k = kernel_from_digraph(g);
    return {std::move(g), std::move(k)};
}

nlohmann::json base_metadata(const ExperimentConfig& cfg, std::string_view experiment) {
    const auto scale = entropic_scale(cfg.seq);
    nlohmann::json meta;
    meta["experiment"] = experiment;
    meta["model"] = std::string(to_string(cfg.seq.model()));
    meta["n"] = cfg.seq.n();
    meta["m"] = cfg.seq.m();
    meta["delta"] = cfg.seq.delta();
    meta["eulerian"] = cfg.seq.eulerian();
    meta["entropy"] = scale.entropy;
    meta["t_ent"] = scale.entropic_time;
    meta["alpha"] = cfg.alpha;
    meta["gamma_hat"] = cfg.alpha * scale.entropic_time;
    meta["root_seed"] = cfg.root_seed;
    meta["replicates"] = cfg.replicates;
    meta["env_samples"] = cfg.env_samples;
    meta["start_mode"] = start_mode_name(cfg.start_vertices, cfg.seq.n());
    meta["tol"] = cfg.tol;
    meta["max_iters"] = resolved_max_iters(cfg);
    return meta;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::vector<Vertex> resolve_starts(const StartVertices& spec, std::size_t n, RngStream rng) {
    auto mode = spec.mode;
    std::size_t k = spec.sample_size;
    if (mode == StartVertices::Mode::Auto) {
        if (n <= kExhaustiveStartLimit) {
            mode = StartVertices::Mode::All;
        } else {
            mode = StartVertices::Mode::Sample;
            k = kDefaultStartSample;
        }
    }
    std::vector<Vertex> out;
    switch (mode) {
        case StartVertices::Mode::Explicit:
            for (Vertex x : spec.vertices) {
                if (x >= n) throw Error(ErrorCode::BadRange, "start vertex " + std::to_string(x) + " >= n");
            }
            return spec.vertices;
        case StartVertices::Mode::Sample:
            if (k == 0) throw Error(ErrorCode::BadValue, "start-vertex sample size must be positive");
            if (k < n) {
                // Partial Fisher-Yates over an index array.
                std::vector<Vertex> pool(n);
                std::iota(pool.begin(), pool.end(), Vertex{0});
                for (std::size_t i = 0; i < k; ++i) {
                    std::swap(pool[i], pool[i + rng.below(n - i)]);
                }
                out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
                std::sort(out.begin(), out.end());
                return out;
            }
            [[fallthrough]];
        default:
            out.resize(n);
            std::iota(out.begin(), out.end(), Vertex{0});
            return out;
    }
}

std::string_view start_mode_name(const StartVertices& spec, std::size_t n) {
    switch (spec.mode) {
        case StartVertices::Mode::All: return "all";
        case StartVertices::Mode::Sample: return "sample";
        case StartVertices::Mode::Explicit: return "explicit";
        case StartVertices::Mode::Auto: break;
    }
    return n <= kExhaustiveStartLimit ? "all" : "sample";
}

void validate_config(const ExperimentConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw Error(ErrorCode::BadValue, "alpha must lie in (0,1), got " + std::to_string(cfg.alpha));
    }
    if (!std::is_sorted(cfg.beta_grid.begin(), cfg.beta_grid.end())) {
        throw Error(ErrorCode::BadValue, "beta grid must be sorted");
    }
    for (double b : cfg.beta_grid) {
        if (!(b >= 0.0) || !std::isfinite(b)) throw Error(ErrorCode::BadValue, "beta must be nonnegative");
    }
    if (!std::is_sorted(cfg.s_grid.begin(), cfg.s_grid.end())) {
        throw Error(ErrorCode::BadValue, "s grid must be sorted");
    }
    if (cfg.replicates == 0) throw Error(ErrorCode::BadValue, "replicates must be positive");
    if (cfg.env_samples == 0) throw Error(ErrorCode::BadValue, "env_samples must be positive");
    if (!(cfg.tol > 0.0)) throw Error(ErrorCode::BadValue, "tol must be positive");
}

double ExperimentReport::max_deviation() const {
    double worst = 0.0;
    for (const auto& row : rows) {
        if (!row.flagged) worst = std::max(worst, std::abs(row.estimate - row.theory));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Theory curves

Curve parse_curve(std::string_view name) {
    if (name == "joint_gamma0") return Curve::JointGamma0;
    if (name == "joint_gammainf") return Curve::JointGammaInf;
    if (name == "joint_general") return Curve::JointGeneral;
    if (name == "marginal_gamma0") return Curve::MarginalGamma0;
    if (name == "marginal_gammainf") return Curve::MarginalGammaInf;
    if (name == "marginal_general") return Curve::MarginalGeneral;
    if (name == "static_phi") return Curve::StaticPhi;
    throw Error(ErrorCode::BadCurveName, std::string(name));
}

std::string_view to_string(Curve curve) noexcept {
    switch (curve) {
        case Curve::JointGamma0: return "joint_gamma0";
        case Curve::JointGammaInf: return "joint_gammainf";
        case Curve::JointGeneral: return "joint_general";
        case Curve::MarginalGamma0: return "marginal_gamma0";
        case Curve::MarginalGammaInf: return "marginal_gammainf";
        case Curve::MarginalGeneral: return "marginal_general";
        case Curve::StaticPhi: return "static_phi";
    }
    return "unknown";
}

namespace {

// phi(b) = 1 for b < 1, q for b >= 1.
double phi(double b, double q) { return b < 1.0 ? 1.0 : q; }

}  // namespace

double theory_curve(Curve curve, double beta, double gamma, double q) {
    if (!(beta > 0.0)) throw Error(ErrorCode::BadValue, "theory curves need beta > 0");
    const double decay = std::exp(-beta);
    switch (curve) {
        case Curve::JointGamma0: return decay;
        case Curve::JointGammaInf: return (1.0 + beta) * decay;
        case Curve::JointGeneral: return beta < gamma ? (1.0 + beta) * decay : decay;
        case Curve::MarginalGamma0: return q * decay;
        case Curve::MarginalGammaInf: return decay;
        case Curve::MarginalGeneral: return phi(beta / gamma, q) * decay;
        case Curve::StaticPhi: return phi(beta, q);
    }
    throw Error(ErrorCode::BadCurveName, "unknown curve");
}

double theory_curves(std::string_view curve, double beta, double gamma, double q) {
    return theory_curve(parse_curve(curve), beta, gamma, q);
}

std::optional<double> discontinuity(Curve curve, double gamma) {
    switch (curve) {
        case Curve::JointGeneral:
        case Curve::MarginalGeneral: return gamma;
        case Curve::StaticPhi: return 1.0;
        default: return std::nullopt;
    }
}

Curve joint_curve_for(double gamma_hat) {
    if (gamma_hat < kGammaZeroBelow) return Curve::JointGamma0;
    if (gamma_hat > kGammaInfAbove) return Curve::JointGammaInf;
    return Curve::JointGeneral;
}

Curve marginal_curve_for(double gamma_hat) {
    if (gamma_hat < kGammaZeroBelow) return Curve::MarginalGamma0;
    if (gamma_hat > kGammaInfAbove) return Curve::MarginalGammaInf;
    return Curve::MarginalGeneral;
}

// ---------------------------------------------------------------------------
// Static cutoff

ExperimentReport static_cutoff_profile(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const auto started = std::chrono::steady_clock::now();
    const auto seq = std::make_shared<const DegreeSequence>(cfg.seq);
    const double t_ent = entropic_scale(cfg.seq).entropic_time;
    const std::size_t max_iters = resolved_max_iters(cfg);
    std::vector<std::size_t> times;
    for (double b : cfg.beta_grid) times.push_back(floor_steps(b * t_ent));

    const double per_step = static_cast<double>(seq->m() + seq->n());
    check_budget(static_cast<double>(times.empty() ? 0 : times.back()) * per_step *
                     static_cast<double>(cfg.replicates * expected_starts(cfg.start_vertices, seq->n())),
                 cfg.op_budget, "static profile");

    const auto env_root = tagged(cfg.root_seed, kEnvTag);
    const auto start_root = tagged(cfg.root_seed, kStartTag);
    struct Replicate {
        std::vector<double> max_tv;
        std::vector<double> min_tv;
        std::size_t starts = 0;
        std::size_t iterations = 0;
    };
    const auto reps = parallel_map(cfg.replicates, cfg.threads, [&](std::size_t i) {
        const auto env = make_environment(seq, env_root.child(i));
        const auto st = stationary_for(env.graph, env.kernel, cfg.tol, max_iters);
        const auto starts = resolve_starts(cfg.start_vertices, seq->n(), start_root.child(i));
        Replicate rep;
        rep.max_tv.assign(times.size(), 0.0);
        rep.min_tv.assign(times.size(), 1.0);
        rep.starts = starts.size();
        rep.iterations = st.iterations;
        std::vector<double> cur(seq->n()), scratch(seq->n());
        for (Vertex x : starts) {
            std::fill(cur.begin(), cur.end(), 0.0);
            cur[x] = 1.0;
            std::size_t at = 0;
            for (std::size_t b = 0; b < times.size(); ++b) {
                propagate_in_place(cur, scratch, env.kernel, times[b] - at);
                at = times[b];
                const double tv = tv_distance(cur, st.pi.probs());
                rep.max_tv[b] = std::max(rep.max_tv[b], tv);
                rep.min_tv[b] = std::min(rep.min_tv[b], tv);
            }
        }
        return rep;
    });

    ExperimentReport report;
    report.experiment = "static-cutoff";
    report.extra_columns = {"t", "min_tv", "max_tv"};
    for (std::size_t b = 0; b < times.size(); ++b) {
        std::vector<double> values;
        double lo = 1.0, hi = 0.0;
        for (const auto& rep : reps) {
            values.push_back(rep.max_tv[b]);
            lo = std::min(lo, rep.min_tv[b]);
            hi = std::max(hi, rep.max_tv[b]);
        }
        const auto stats = mean_se(values);
        ReportRow row;
        row.abscissa = cfg.beta_grid[b];
        row.estimate = stats.mean;
        row.std_err = stats.std_err;
        row.theory = cfg.beta_grid[b] < 1.0 ? 1.0 : 0.0;
        row.n_effective = reps.size();
        row.flagged = near(cfg.beta_grid[b], 1.0);
        row.extra = {static_cast<double>(times[b]), lo, hi};
        report.rows.push_back(std::move(row));
    }
    report.metadata = base_metadata(cfg, report.experiment);
    report.metadata["starts_per_replicate"] = reps.empty() ? 0 : reps.front().starts;
    report.metadata["runtime_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

// ---------------------------------------------------------------------------
// Double cutoff

ExperimentReport double_cutoff_sweep(const ExperimentConfig& cfg, double beta) {
    validate_config(cfg);
    const auto started = std::chrono::steady_clock::now();
    const auto seq = std::make_shared<const DegreeSequence>(cfg.seq);
    const double t_ent = entropic_scale(cfg.seq).entropic_time;
    const std::size_t t = floor_steps(beta * t_ent);
    if (cfg.s_grid.empty()) throw Error(ErrorCode::BadValue, "double cutoff needs an s grid");
    if (cfg.s_grid.back() > t) {
        throw Error(ErrorCode::BadRange, "s grid exceeds t = " + std::to_string(t));
    }
    const std::size_t max_iters = resolved_max_iters(cfg);
    check_budget(static_cast<double>(t * cfg.s_grid.size() * cfg.replicates *
                                     expected_starts(cfg.start_vertices, seq->n())) *
                     static_cast<double>(seq->m() + seq->n()),
                 cfg.op_budget, "double cutoff");

    // eta of pair i is replicate i of the static profile, so s = 0 rows match it.
    const auto eta_root = tagged(cfg.root_seed, kEnvTag);
    const auto sigma_root = tagged(cfg.root_seed, kSigmaPairTag);
    const auto start_root = tagged(cfg.root_seed, kStartTag);
    struct Pair {
        std::vector<double> max_tv, min_tv;
    };
    const auto pairs = parallel_map(cfg.replicates, cfg.threads, [&](std::size_t i) {
        const auto eta = make_environment(seq, eta_root.child(i));
        const auto sigma = make_environment(seq, sigma_root.child(i));
        const auto st = stationary_for(eta.graph, eta.kernel, cfg.tol, max_iters);
        const auto starts = resolve_starts(cfg.start_vertices, seq->n(), start_root.child(i));
        Pair out;
        out.max_tv.assign(cfg.s_grid.size(), 0.0);
        out.min_tv.assign(cfg.s_grid.size(), 1.0);
        const std::size_t n = seq->n();
        std::vector<double> head(n), tail(n), scratch(n);
        for (Vertex x : starts) {
            std::fill(head.begin(), head.end(), 0.0);
            head[x] = 1.0;
            std::size_t at = 0;
            for (std::size_t j = 0; j < cfg.s_grid.size(); ++j) {
                const std::size_t s = cfg.s_grid[j];
                propagate_in_place(head, scratch, sigma.kernel, s - at);
                at = s;
                tail = head;
                propagate_in_place(tail, scratch, eta.kernel, t - s);
                const double tv = tv_distance(tail, st.pi.probs());
                out.max_tv[j] = std::max(out.max_tv[j], tv);
                out.min_tv[j] = std::min(out.min_tv[j], tv);
            }
        }
        return out;
    });

    ExperimentReport report;
    report.experiment = "double-cutoff";
    report.extra_columns = {"t", "min_tv", "max_tv"};
    const double lo_window = (1.0 - cfg.epsilon) * t_ent;
    const double hi_window = (1.0 + cfg.epsilon) * t_ent;
    const double upper_end = (beta - cfg.epsilon) * t_ent;
    for (std::size_t j = 0; j < cfg.s_grid.size(); ++j) {
        std::vector<double> values;
        double lo = 1.0, hi = 0.0;
        for (const auto& p : pairs) {
            values.push_back(p.max_tv[j]);
            lo = std::min(lo, p.min_tv[j]);
            hi = std::max(hi, p.max_tv[j]);
        }
        const auto stats = mean_se(values);
        const auto s = static_cast<double>(cfg.s_grid[j]);
        ReportRow row;
        row.abscissa = s;
        row.estimate = stats.mean;
        row.std_err = stats.std_err;
        row.theory = beta < 1.0 ? 1.0 : 0.0;
        row.n_effective = pairs.size();
        // Above the cutoff the limit is only known on I(eps, beta).
        const bool outside_interval = beta > 1.0 && ((s > lo_window && s < hi_window) || s > upper_end);
        row.flagged = near(beta, 1.0) || outside_interval;
        row.extra = {static_cast<double>(t), lo, hi};
        report.rows.push_back(std::move(row));
    }
    report.metadata = base_metadata(cfg, report.experiment);
    report.metadata["beta"] = beta;
    report.metadata["t"] = t;
    report.metadata["epsilon"] = cfg.epsilon;
    report.metadata["runtime_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

// ---------------------------------------------------------------------------
// Joint chain

ExperimentReport joint_trichotomy_curve(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const auto started = std::chrono::steady_clock::now();
    const auto seq = std::make_shared<const DegreeSequence>(cfg.seq);
    const double t_ent = entropic_scale(cfg.seq).entropic_time;
    const double gamma_hat = cfg.alpha * t_ent;
    const std::size_t max_iters = resolved_max_iters(cfg);
    const double alpha = cfg.alpha;

    std::vector<std::size_t> times;
    for (double b : cfg.beta_grid) times.push_back(floor_steps(b / alpha));

    const auto env_root = tagged(cfg.root_seed, kEnvTag);
    const auto start_root = tagged(cfg.root_seed, kStartTag);
    const auto eta_root = tagged(cfg.root_seed, kEtaTag);

    std::vector<Environment> sigmas;
    std::vector<std::vector<Vertex>> starts;
    std::size_t start_total = 0;
    for (std::size_t i = 0; i < cfg.replicates; ++i) {
        sigmas.push_back(make_environment(seq, env_root.child(i)));
        starts.push_back(resolve_starts(cfg.start_vertices, seq->n(), start_root.child(i)));
        start_total += starts.back().size();
    }
    const double per_step = static_cast<double>(seq->m() + seq->n());
    const double step_sum = std::accumulate(times.begin(), times.end(), 0.0);
    check_budget(2.0 * step_sum * per_step * static_cast<double>(start_total * cfg.env_samples) +
                     static_cast<double>(cfg.replicates * cfg.env_samples * max_iters) * per_step,
                 cfg.op_budget, "joint curve");

    // psi[i][j][x][b] = sum_y |c_B Bhat(y) - c_pi pi_eta(y)|
    const std::size_t items = cfg.replicates * cfg.env_samples;
    const auto psi = parallel_map(items, cfg.threads, [&](std::size_t item) {
        const std::size_t i = item / cfg.env_samples;
        const std::size_t j = item % cfg.env_samples;
        const auto eta = make_environment(seq, eta_root.child(i).child(j));
        const auto st = stationary_for(eta.graph, eta.kernel, cfg.tol, max_iters);
        const auto pi = st.pi.probs();
        std::vector<std::vector<double>> out(starts[i].size(), std::vector<double>(times.size()));
        for (std::size_t xi = 0; xi < starts[i].size(); ++xi) {
            for (std::size_t b = 0; b < times.size(); ++b) {
                const std::size_t t = times[b];
                if (t == 0) {
                    out[xi][b] = 1.0;
                    continue;
                }
                const auto td = static_cast<double>(t);
                const double c_b = alpha * td * std::pow(1.0 - alpha, td - 1.0);
                const double c_pi = std::pow(1.0 - alpha, td) + c_b;
                const auto bhat = bhat_row(starts[i][xi], t, sigmas[i].kernel, eta.kernel);
                double sum = 0.0;
                for (std::size_t y = 0; y < pi.size(); ++y) sum += std::abs(c_b * bhat[y] - c_pi * pi[y]);
                out[xi][b] = sum;
            }
        }
        return out;
    });

    const Curve curve = joint_curve_for(gamma_hat);
    ExperimentReport report;
    report.experiment = "joint";
    report.extra_columns = {"t", "max_estimate"};
    for (std::size_t b = 0; b < times.size(); ++b) {
        const double td = static_cast<double>(times[b]);
        const double no_regen = std::pow(1.0 - alpha, td);
        std::vector<double> values;
        double worst = 0.0;
        for (std::size_t i = 0; i < cfg.replicates; ++i) {
            for (std::size_t xi = 0; xi < starts[i].size(); ++xi) {
                double per_start = 0.0;
                for (std::size_t j = 0; j < cfg.env_samples; ++j) {
                    const double v = psi[i * cfg.env_samples + j][xi][b];
                    values.push_back(v);
                    per_start += v;
                }
                per_start /= static_cast<double>(cfg.env_samples);
                worst = std::max(worst, 0.5 * (no_regen + per_start));
            }
        }
        const auto stats = mean_se(values);
        ReportRow row;
        row.abscissa = cfg.beta_grid[b];
        row.estimate = std::clamp(0.5 * (no_regen + stats.mean), 0.0, 1.0);
        row.std_err = 0.5 * stats.std_err;
        row.theory = cfg.beta_grid[b] > 0.0 ? theory_curve(curve, cfg.beta_grid[b], gamma_hat, 0.0) : 1.0;
        row.n_effective = values.size();
        row.flagged = near(cfg.beta_grid[b], discontinuity(curve, gamma_hat));
        row.extra = {td, std::min(1.0, worst)};
        report.rows.push_back(std::move(row));
    }
    report.metadata = base_metadata(cfg, report.experiment);
    report.metadata["curve"] = std::string(to_string(curve));
    report.metadata["runtime_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

// ---------------------------------------------------------------------------
// Marginal walk

ExperimentReport marginal_trichotomy_curve(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const auto started = std::chrono::steady_clock::now();
    const auto seq = std::make_shared<const DegreeSequence>(cfg.seq);
    const double t_ent = entropic_scale(cfg.seq).entropic_time;
    const double gamma_hat = cfg.alpha * t_ent;
    const double alpha = cfg.alpha;
    const auto mu = mu_in(cfg.seq);

    std::vector<std::size_t> times;
    for (double b : cfg.beta_grid) {
        times.push_back(floor_steps(cfg.time_scale == TimeScale::Alpha ? b / alpha : b * t_ent));
    }
    const double per_step = static_cast<double>(seq->m() + seq->n());
    const double max_t = times.empty() ? 0.0 : static_cast<double>(times.back());
    const std::size_t start_guess = expected_starts(cfg.start_vertices, seq->n());
    check_budget(max_t * per_step * static_cast<double>(cfg.replicates * start_guess), cfg.op_budget,
                 "marginal curve");

    const auto env_root = tagged(cfg.root_seed, kEnvTag);
    const auto start_root = tagged(cfg.root_seed, kStartTag);
    // values[i][xi][b]
    const auto values = parallel_map(cfg.replicates, cfg.threads, [&](std::size_t i) {
        const auto env = make_environment(seq, env_root.child(i));
        const auto starts = resolve_starts(cfg.start_vertices, seq->n(), start_root.child(i));
        std::vector<std::vector<double>> out(starts.size(), std::vector<double>(times.size()));
        std::vector<double> cur(seq->n()), scratch(seq->n());
        for (std::size_t xi = 0; xi < starts.size(); ++xi) {
            std::fill(cur.begin(), cur.end(), 0.0);
            cur[starts[xi]] = 1.0;
            std::size_t at = 0;
            for (std::size_t b = 0; b < times.size(); ++b) {
                propagate_in_place(cur, scratch, env.kernel, times[b] - at);
                at = times[b];
                out[xi][b] = std::pow(1.0 - alpha, static_cast<double>(at)) * tv_distance(cur, mu.probs());
            }
        }
        return out;
    });

    Curve curve = cfg.time_scale == TimeScale::Entropic ? Curve::StaticPhi : marginal_curve_for(gamma_hat);
    const double curve_gamma = curve == Curve::StaticPhi ? 1.0 : gamma_hat;
    double q_hat = 0.0, q_err = 0.0;
    const bool needs_q = curve != Curve::MarginalGammaInf;
    if (needs_q) {
        const auto q = estimate_q(cfg.seq, std::max<std::size_t>(2, cfg.q_replicates), tagged(cfg.root_seed, kQTag),
                                  cfg.tol, resolved_max_iters(cfg), cfg.threads);
        q_hat = q.q_hat;
        q_err = q.std_err;
    }

    ExperimentReport report;
    report.experiment = "marginal";
    report.extra_columns = {"t", "max_estimate"};
    for (std::size_t b = 0; b < times.size(); ++b) {
        std::vector<double> column;
        double worst = 0.0;
        for (const auto& rep : values) {
            for (const auto& per_start : rep) {
                column.push_back(per_start[b]);
                worst = std::max(worst, per_start[b]);
            }
        }
        const auto stats = mean_se(column);
        const double beta = cfg.beta_grid[b];
        ReportRow row;
        row.abscissa = beta;
        row.estimate = stats.mean;
        row.std_err = stats.std_err;
        row.theory = beta > 0.0 ? theory_curve(curve, beta, curve_gamma, q_hat) : 1.0;
        row.n_effective = column.size();
        row.flagged = near(beta, discontinuity(curve, curve_gamma));
        row.extra = {static_cast<double>(times[b]), worst};
        report.rows.push_back(std::move(row));
    }
    report.metadata = base_metadata(cfg, report.experiment);
    report.metadata["curve"] = std::string(to_string(curve));
    report.metadata["time_scale"] = cfg.time_scale == TimeScale::Alpha ? "alpha" : "entropic";
    if (needs_q) {
        report.metadata["q_hat"] = q_hat;
        report.metadata["q_std_err"] = q_err;
    }
    report.metadata["runtime_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

CrosscheckResult marginal_mc_crosscheck(const ExperimentConfig& cfg, std::size_t t,
                                        std::size_t schedule_samples) {
    validate_config(cfg);
    if (t == 0) throw Error(ErrorCode::BadRange, "crosscheck needs t >= 1");
    if (schedule_samples == 0) throw Error(ErrorCode::BadValue, "schedule_samples must be positive");
    const auto seq = std::make_shared<const DegreeSequence>(cfg.seq);
    const std::size_t n = seq->n();
    const double alpha = cfg.alpha;
    const auto mu = mu_in(cfg.seq);
    const double per_step = static_cast<double>(seq->m() + seq->n());

    const auto env_root = tagged(cfg.root_seed, kEnvTag);
    const auto start_root = tagged(cfg.root_seed, kStartTag);
    const auto schedule_root = tagged(cfg.root_seed, kScheduleTag);

    std::vector<Environment> sigmas;
    std::vector<std::pair<std::size_t, Vertex>> items;
    for (std::size_t i = 0; i < cfg.replicates; ++i) {
        sigmas.push_back(make_environment(seq, env_root.child(i)));
        for (Vertex x : resolve_starts(cfg.start_vertices, n, start_root.child(i))) items.emplace_back(i, x);
    }
    // Each schedule costs at most t steps plus ~alpha t fresh environments.
    check_budget(static_cast<double>(items.size() * schedule_samples) * (static_cast<double>(t) + alpha * static_cast<double>(t)) *
                     per_step,
                 cfg.op_budget, "marginal crosscheck");

    const double log_keep = std::log1p(-alpha);
    const double no_regen = std::exp(static_cast<double>(t) * log_keep);
    const auto values = parallel_map(items.size(), cfg.threads, [&](std::size_t item) {
        const auto [i, x] = items[item];
        const auto& sigma = sigmas[i].kernel;
        // prefix[k] = delta_x P_sigma^k for k = 0..t
        std::vector<std::vector<double>> prefix(t + 1, std::vector<double>(n, 0.0));
        prefix[0][x] = 1.0;
        std::vector<double> scratch(n);
        for (std::size_t k = 1; k <= t; ++k) {
            prefix[k] = prefix[k - 1];
            propagate_in_place(prefix[k], scratch, sigma, 1);
        }

        // Schedules are drawn conditionally on at least one regeneration; the
        // regeneration-free part contributes (1-alpha)^t delta_x P_sigma^t exactly.
        std::vector<double> avg(n, 0.0), law(n);
        auto rng_root = schedule_root.child(i).child(x);
        for (std::size_t sample = 0; sample < schedule_samples; ++sample) {
            auto rng = rng_root.child(sample);
            const double u = rng.uniform();
            // first regeneration r1 in [1, t] from the truncated geometric law
            auto r1 = static_cast<std::size_t>(std::ceil(std::log1p(-u * (1.0 - no_regen)) / log_keep));
            r1 = std::clamp<std::size_t>(r1, 1, t);
            law = prefix[r1 - 1];
            std::uint64_t fresh = 0;
            auto env = make_environment(seq, rng.child(fresh++));
            // steps taken in the current environment, including the regeneration step
            std::size_t run = 1;
            for (std::size_t step = r1 + 1; step <= t; ++step) {
                if (rng.bernoulli(alpha)) {
                    propagate_in_place(law, scratch, env.kernel, run);
                    run = 1;
                    env = make_environment(seq, rng.child(fresh++));
                } else {
                    ++run;
                }
            }
            propagate_in_place(law, scratch, env.kernel, run);
            for (std::size_t y = 0; y < n; ++y) avg[y] += law[y];
        }
        const double w = (1.0 - no_regen) / static_cast<double>(schedule_samples);
        for (std::size_t y = 0; y < n; ++y) avg[y] = no_regen * prefix[t][y] + w * avg[y];
        return tv_distance(avg, mu.probs());
    });
    const auto stats = mean_se(values);
    return {stats.mean, stats.std_err, values.size()};
}

ExperimentReport marginal_crosscheck_report(const ExperimentConfig& cfg, std::size_t schedule_samples) {
    const auto started = std::chrono::steady_clock::now();
    ExperimentConfig alpha_cfg = cfg;
    alpha_cfg.time_scale = TimeScale::Alpha;
    const auto curve = marginal_trichotomy_curve(alpha_cfg);
    ExperimentReport report;
    report.experiment = "marginal-crosscheck";
    report.extra_columns = {"t", "curve_std_err", "combined_std_err"};
    for (std::size_t b = 0; b < cfg.beta_grid.size(); ++b) {
        const auto t = static_cast<std::size_t>(curve.rows[b].extra[0]);
        const auto cross = marginal_mc_crosscheck(alpha_cfg, t, schedule_samples);
        ReportRow row;
        row.abscissa = cfg.beta_grid[b];
        row.estimate = cross.estimate;
        row.std_err = cross.std_err;
        row.theory = curve.rows[b].estimate;
        row.n_effective = cross.n_effective;
        row.extra = {static_cast<double>(t), curve.rows[b].std_err,
                     std::hypot(cross.std_err, curve.rows[b].std_err)};
        report.rows.push_back(std::move(row));
    }
    report.metadata = base_metadata(cfg, report.experiment);
    report.metadata["schedule_samples"] = schedule_samples;
    report.metadata["runtime_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

// ---------------------------------------------------------------------------
// Annealed law

ExperimentReport annealed_check(const DegreeSequence& seq_in, const std::vector<std::size_t>& t_grid,
                                std::size_t env_samples, const StartVertices& start_spec, RngStream rng,
                                unsigned threads) {
    const auto started = std::chrono::steady_clock::now();
    if (t_grid.empty()) throw Error(ErrorCode::BadValue, "annealed check needs a t grid");
    if (!std::is_sorted(t_grid.begin(), t_grid.end())) throw Error(ErrorCode::BadValue, "t grid must be sorted");
    if (t_grid.front() < 1) throw Error(ErrorCode::BadRange, "annealed check needs t >= 1");
    if (env_samples == 0) throw Error(ErrorCode::BadValue, "env_samples must be positive");
    const auto seq = std::make_shared<const DegreeSequence>(seq_in);
    const std::size_t n = seq->n();
    const auto mu = mu_in(seq_in);
    const auto starts = resolve_starts(start_spec, n, rng.child(kStartTag));
    const auto env_root = rng.child(kEnvTag);
    const std::size_t cells = t_grid.size() * starts.size();

    // Fixed block partition of the eta samples; blocks are reduced in index
    // order so the sums do not depend on the thread count.
    constexpr std::size_t kBlocks = 16;
    const std::size_t blocks = std::min(kBlocks, env_samples);
    struct Sums {
        std::vector<double> sum, sumsq;
    };
    Sums total{std::vector<double>(cells * n, 0.0), std::vector<double>(cells * n, 0.0)};
    const unsigned wave = std::max(1u, threads);
    for (std::size_t first = 0; first < blocks; first += wave) {
        const std::size_t count = std::min<std::size_t>(wave, blocks - first);
        const auto partial = parallel_map(count, threads, [&](std::size_t k) {
            const std::size_t block = first + k;
            const std::size_t lo = block * env_samples / blocks;
            const std::size_t hi = (block + 1) * env_samples / blocks;
            Sums s{std::vector<double>(cells * n, 0.0), std::vector<double>(cells * n, 0.0)};
            std::vector<double> cur(n), scratch(n);
            for (std::size_t j = lo; j < hi; ++j) {
                const auto env = make_environment(seq, env_root.child(j));
                for (std::size_t xi = 0; xi < starts.size(); ++xi) {
                    std::fill(cur.begin(), cur.end(), 0.0);
                    cur[starts[xi]] = 1.0;
                    std::size_t at = 0;
                    for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
                        propagate_in_place(cur, scratch, env.kernel, t_grid[ti] - at);
                        at = t_grid[ti];
                        const std::size_t base = (ti * starts.size() + xi) * n;
                        for (std::size_t y = 0; y < n; ++y) {
                            if (cur[y] == 0.0) continue;
                            s.sum[base + y] += cur[y];
                            s.sumsq[base + y] += cur[y] * cur[y];
                        }
                    }
                }
            }
            return s;
        });
        for (const auto& s : partial) {
            for (std::size_t c = 0; c < total.sum.size(); ++c) {
                total.sum[c] += s.sum[c];
                total.sumsq[c] += s.sumsq[c];
            }
        }
    }

    const auto e = static_cast<double>(env_samples);
    ExperimentReport report;
    report.experiment = "annealed";
    report.extra_columns = {"mean_tv", "mean_mc_error"};
    std::vector<double> mean(n);
    for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
        double worst = -1.0, worst_err = 0.0, tv_sum = 0.0, err_sum = 0.0;
        for (std::size_t xi = 0; xi < starts.size(); ++xi) {
            const std::size_t base = (ti * starts.size() + xi) * n;
            double err = 0.0;
            for (std::size_t y = 0; y < n; ++y) {
                mean[y] = total.sum[base + y] / e;
                if (env_samples > 1) {
                    const double var = std::max(0.0, (total.sumsq[base + y] - e * mean[y] * mean[y]) / (e - 1.0));
                    err += std::sqrt(var / e);
                }
            }
            err *= 0.5;
            const double tv = tv_distance(mean, mu.probs());
            tv_sum += tv;
            err_sum += err;
            if (tv > worst) {
                worst = tv;
                worst_err = err;
            }
        }
        ReportRow row;
        row.abscissa = static_cast<double>(t_grid[ti]);
        row.estimate = worst;
        row.std_err = worst_err;
        row.theory = 0.0;
        row.n_effective = env_samples;
        const auto k = static_cast<double>(starts.size());
        row.extra = {tv_sum / k, err_sum / k};
        report.rows.push_back(std::move(row));
    }
    const auto scale = entropic_scale(seq_in);
    report.metadata["experiment"] = report.experiment;
    report.metadata["model"] = std::string(to_string(seq_in.model()));
    report.metadata["n"] = n;
    report.metadata["t_ent"] = scale.entropic_time;
    report.metadata["root_seed"] = rng.root_seed();
    report.metadata["env_samples"] = env_samples;
    report.metadata["start_mode"] = start_mode_name(start_spec, n);
    report.metadata["starts"] = starts.size();
    report.metadata["runtime_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

// ---------------------------------------------------------------------------
// Path weights

WeightLln path_weight_lln(const DegreeSequence& seq_in, std::size_t s, std::size_t t,
                          std::size_t traj_samples, RngStream rng, double eps, unsigned threads) {
    if (s > t) throw Error(ErrorCode::BadRange, "path_weight_lln requires s <= t");
    if (t == 0) throw Error(ErrorCode::BadRange, "path_weight_lln requires t >= 1");
    if (traj_samples == 0) throw Error(ErrorCode::BadValue, "traj_samples must be positive");
    const auto seq = std::make_shared<const DegreeSequence>(seq_in);
    const auto sigma = make_environment(seq, rng.child(1));
    const auto eta = make_environment(seq, rng.child(2));
    const auto traj_root = rng.child(3);
    const double h = entropic_scale(seq_in).entropy;
    const auto td = static_cast<double>(t);

    const auto rates = parallel_map(traj_samples, threads, [&](std::size_t k) {
        auto stream = traj_root.child(k);
        const auto x = static_cast<Vertex>(stream.below(seq->n()));
        const auto traj = sample_trajectory(x, s, t, sigma.graph, eta.graph, stream);
        return -path_log_weight(traj, sigma.kernel, eta.kernel) / td;
    });

    WeightLln out;
    out.entropy = h;
    out.samples = traj_samples;
    std::size_t inside = 0;
    double total = 0.0;
    for (double r : rates) {
        total += r;
        const double ratio = r / h;
        if (ratio >= 1.0 - eps && ratio <= 1.0 + eps) ++inside;
    }
    const auto count = static_cast<double>(traj_samples);
    out.frac_in_window = static_cast<double>(inside) / count;
    out.frac_std_err = std::sqrt(out.frac_in_window * (1.0 - out.frac_in_window) / count);
    out.mean_rate = total / count;
    return out;
}

// ---------------------------------------------------------------------------
// Widespread diagnostics

DiagnosticsReport widespread_diagnostics(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const auto started = std::chrono::steady_clock::now();
    DiagnosticsReport report;
    report.q = estimate_q(cfg.seq, std::max<std::size_t>(2, cfg.replicates), tagged(cfg.root_seed, kEnvTag),
                          cfg.tol, resolved_max_iters(cfg), cfg.threads);
    report.metadata = base_metadata(cfg, "diagnostics");
    const double log_n = std::log(static_cast<double>(cfg.seq.n()));
    report.metadata["q_hat"] = report.q.q_hat;
    report.metadata["q_std_err"] = report.q.std_err;
    report.metadata["failed"] = report.q.failed;
    report.metadata["log4_n"] = std::pow(log_n, 4);
    report.metadata["log8_n"] = std::pow(log_n, 8);
    report.metadata["runtime_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace mixlab
