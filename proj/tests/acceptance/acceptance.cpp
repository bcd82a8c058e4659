// Acceptance suite: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "mixlab/cli.hpp"
#include "mixlab/experiments.hpp"
#include "mixlab/sampler.hpp"
#include "mixlab/stationary.hpp"
#include "mixlab/walk.hpp"

using namespace mixlab;

namespace {

// Tolerances.
constexpr double kStaticHigh = 0.90;
constexpr double kStaticLow = 0.10;
constexpr double kStaticSeconds = 120.0;
constexpr double kDoubleSeconds = 600.0;
constexpr double kJointTol = 0.10;
constexpr double kJointSeconds = 1800.0;
constexpr double kMarginalZeroTol = 0.05;
constexpr double kMarginalInfTol = 0.05;
constexpr double kMarginalGeneralTol = 0.10;
constexpr double kQStdTol = 0.02;
constexpr double kCrossSlack = 0.02;
constexpr double kAnnealedLongTol = 0.05;
constexpr double kL2Max = 20.0;
constexpr double kLlnFrac = 0.95;
constexpr double kLlnRateTol = 0.02;
constexpr double kOracleTol = 1e-9;
constexpr double kRowTol = 1e-12;
constexpr double kChiSquareP = 0.001;

constexpr unsigned kThreads = 1;
constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ExperimentConfig base(const std::string& degrees, std::size_t n) {
    ExperimentConfig cfg;
    cfg.seq = generate_degrees(degrees, ModelKind::DCM, n, kSeed);
    cfg.root_seed = kSeed;
    cfg.threads = kThreads;
    return cfg;
}

double alpha_for(const DegreeSequence& seq, double gamma) {
    return gamma / entropic_scale(seq).entropic_time;
}

Outcome static_cutoff() {
    const auto start = std::chrono::steady_clock::now();
    auto cfg = base("regular:3", 10000);
    cfg.beta_grid = {0.7, 1.5};
    cfg.replicates = 10;
    cfg.start_vertices = StartVertices::sample(32);
    const auto rep = static_cutoff_profile(cfg);
    const double secs = seconds_since(start);
    const double hi = rep.rows[0].estimate, lo = rep.rows[1].estimate;
    return {hi >= kStaticHigh && lo <= kStaticLow && secs <= kStaticSeconds,
            "beta=0.7 mean " + fmt(hi) + " (>= 0.90), beta=1.5 mean " + fmt(lo) + " (<= 0.10), " + fmt(secs) + " s"};
}

Outcome double_cutoff() {
    const auto start = std::chrono::steady_clock::now();
    auto cfg = base("regular:3", 10000);
    cfg.replicates = 10;
    cfg.start_vertices = StartVertices::sample(32);

    const double t_ent = entropic_scale(cfg.seq).entropic_time;
    const auto t_low = static_cast<std::size_t>(std::floor(0.7 * t_ent));
    cfg.beta_grid = {0.7};
    cfg.s_grid = {0, t_low / 4, t_low / 2, 3 * t_low / 4, t_low};
    const auto low = double_cutoff_sweep(cfg, 0.7);
    double min_tv = 1.0;
    for (const auto& row : low.rows) min_tv = std::min(min_tv, row.extra[1]);

    // Six switch times in [0, 0.75 T_ent].
    cfg.beta_grid = {1.5};
    cfg.s_grid.clear();
    for (std::size_t s = 0; s < 6; ++s) {
        if (static_cast<double>(s) <= 0.75 * t_ent) cfg.s_grid.push_back(s);
    }
    const auto high = double_cutoff_sweep(cfg, 1.5);
    double max_tv = 0.0;
    for (const auto& row : high.rows) max_tv = std::max(max_tv, row.extra[2]);
    const double secs = seconds_since(start);
    return {min_tv >= kStaticHigh && max_tv <= kStaticLow && cfg.s_grid.size() == 6 && secs <= kDoubleSeconds,
            "beta=0.7 min " + fmt(min_tv) + " (>= 0.90), beta=1.5 max " + fmt(max_tv) + " (<= 0.10), " +
                fmt(secs) + " s"};
}

Outcome joint_trichotomy() {
    Outcome out;
    for (const double gamma : {5.0 + 1e-6, 0.1}) {
        const auto start = std::chrono::steady_clock::now();
        auto cfg = base("mix:2x5000,3x5000", 10000);
        cfg.alpha = alpha_for(cfg.seq, gamma);
        cfg.beta_grid = {0.5, 1.0, 2.0};
        cfg.env_samples = 30;
        cfg.replicates = 2;
        cfg.start_vertices = StartVertices::sample(4);
        const auto rep = joint_trichotomy_curve(cfg);
        const double dev = rep.max_deviation();
        const double secs = seconds_since(start);
        const bool ok = dev <= kJointTol && secs <= kJointSeconds;
        out.pass = out.pass && ok;
        out.detail += "gamma_hat=" + fmt(gamma) + " max dev " + fmt(dev) + " (" + fmt(secs) + " s); ";
    }
    out.detail += "tol 0.10";
    return out;
}

Outcome marginal_trichotomy() {
    Outcome out;
    {
        auto cfg = base("eulerian:3x10000", 10000);
        cfg.time_scale = TimeScale::Entropic;
        cfg.alpha = alpha_for(cfg.seq, 0.1);
        cfg.beta_grid = {0.5, 1.5, 2.0, 3.0};
        cfg.q_replicates = 4;
        cfg.start_vertices = StartVertices::sample(32);
        const auto rep = marginal_trichotomy_curve(cfg);
        double worst = 0.0;
        for (const auto& row : rep.rows) {
            if (row.abscissa > 1.0) worst = std::max(worst, row.estimate);
        }
        out.pass = out.pass && worst <= kMarginalZeroTol;
        out.detail += "eulerian max(beta>1) " + fmt(worst) + "; ";
    }
    {
        auto cfg = base("mix:2x3800000,3x200000", 4000000);
        cfg.alpha = 0.24;
        cfg.beta_grid = {0.5, 1.0, 2.0};
        cfg.replicates = 2;
        cfg.start_vertices = StartVertices::sample(8);
        const auto rep = marginal_trichotomy_curve(cfg);
        const double gamma = cfg.alpha * entropic_scale(cfg.seq).entropic_time;
        double dev = 0.0;
        for (const auto& row : rep.rows) dev = std::max(dev, std::abs(row.estimate - std::exp(-row.abscissa)));
        out.pass = out.pass && gamma >= kGammaInfAbove && dev <= kMarginalInfTol;
        out.detail += "gamma_hat=" + fmt(gamma) + " (n=4e6) dev " + fmt(dev) + "; ";
    }
    {
        auto cfg = base("mix:2x5000,3x5000", 10000);
        cfg.alpha = alpha_for(cfg.seq, 1.0);
        cfg.beta_grid = {0.3, 0.5, 0.8, 1.5, 2.0, 3.0};
        cfg.start_vertices = StartVertices::sample(32);
        const auto rep = marginal_trichotomy_curve(cfg);
        const double dev = rep.max_deviation();
        out.pass = out.pass && dev <= kMarginalGeneralTol;
        out.detail += "gamma_hat=1 dev " + fmt(dev) + "; ";
    }
    {
        const auto seq = generate_degrees("mix:2x5000,3x5000", ModelKind::DCM, 10000, kSeed);
        std::vector<double> q;
        for (std::uint64_t run = 0; run < 5; ++run) {
            q.push_back(estimate_q(seq, 20, RngStream(kSeed + run, 5), kDefaultStationaryTol,
                                   default_max_iters(seq), kThreads)
                            .q_hat);
        }
        double mean = 0.0;
        for (double v : q) mean += v / 5.0;
        double var = 0.0;
        for (double v : q) var += (v - mean) * (v - mean) / 4.0;
        const double sd = std::sqrt(var);
        out.pass = out.pass && sd <= kQStdTol;
        out.detail += "q_hat " + fmt(mean) + " sd " + fmt(sd);
    }
    return out;
}

Outcome crosscheck() {
    auto cfg = base("mix:2x1000,3x1000", 2000);
    cfg.alpha = 0.12;
    cfg.beta_grid = {0.5, 1.5, 2.0};
    cfg.replicates = 4;
    cfg.start_vertices = StartVertices::sample(4);
    const auto rep = marginal_crosscheck_report(cfg, 1000);
    Outcome out;
    for (const auto& row : rep.rows) {
        const double gap = std::abs(row.estimate - row.theory);
        const double allowed = 2.0 * (row.extra[2] + kCrossSlack);
        out.pass = out.pass && gap <= allowed;
        out.detail += "beta=" + fmt(row.abscissa) + " gap " + fmt(gap) + "/" + fmt(allowed) + "; ";
    }
    return out;
}

Outcome annealed() {
    const auto seq = generate_degrees("mix:2x5000,3x5000", ModelKind::DCM, 10000, kSeed);
    const auto t_long = static_cast<std::size_t>(std::floor(2.0 * entropic_scale(seq).entropic_time));
    const auto one = annealed_check(seq, {1}, 20000, StartVertices::sample(8), RngStream(kSeed, 6), kThreads);
    const auto two = annealed_check(seq, {t_long}, 200, StartVertices::sample(8), RngStream(kSeed, 7), kThreads);
    const auto& r1 = one.rows[0];
    const auto& r2 = two.rows[0];
    return {r1.estimate <= r1.std_err && r2.estimate <= kAnnealedLongTol,
            "t=1 " + fmt(r1.estimate) + " vs MC error " + fmt(r1.std_err) + ", t=" + std::to_string(t_long) + " " +
                fmt(r2.estimate) + " (<= 0.05)"};
}

Outcome diagnostics() {
    auto cfg = base("mix:2x5000,3x5000", 10000);
    cfg.replicates = 20;
    const auto rep = widespread_diagnostics(cfg);
    const double log_n = std::log(10000.0);
    double l2 = 0.0, mx = 0.0;
    std::size_t between = 0;
    for (const auto& r : rep.q.replicates) {
        l2 = std::max(l2, r.stats.l2_stat);
        mx = std::max(mx, r.stats.max_stat);
        if (r.stats.max_stat > std::pow(log_n, 4)) ++between;
    }
    std::string detail = "max l2 " + fmt(l2) + " (<= 20), max max_stat " + fmt(mx) + " (<= log^4 n = " +
                         fmt(std::pow(log_n, 4)) + ")";
    if (between > 0) detail += ", flagged " + std::to_string(between) + " above log^4 n";
    return {rep.q.replicates.size() == 20 && rep.q.failed == 0 && l2 <= kL2Max && mx <= std::pow(log_n, 8), detail};
}

Outcome weight_lln() {
    const auto seq = generate_degrees("mix:2x9000,3x1000", ModelKind::DCM, 10000, kSeed);
    const auto scale = entropic_scale(seq);
    const auto t = static_cast<std::size_t>(std::floor(scale.entropic_time));
    const auto r = path_weight_lln(seq, 0, t, 10000, RngStream(kSeed, 8), 0.1, kThreads);
    const double dev = std::abs(r.mean_rate - r.entropy);
    return {r.frac_in_window >= kLlnFrac && dev <= kLlnRateTol,
            "t=" + std::to_string(t) + " frac " + fmt(r.frac_in_window) + " (>= 0.95), |rate - H| " + fmt(dev) +
                " (<= 0.02)"};
}

Outcome oracles() {
    Outcome out;
    const auto dcm6 = std::make_shared<const DegreeSequence>(
        validate_degrees(ModelKind::DCM, {2, 3, 2, 3, 2, 3}, std::vector<std::uint32_t>{3, 3, 2, 2, 3, 2}));
    const auto ocm6 = std::make_shared<const DegreeSequence>(validate_degrees(ModelKind::OCM, {2, 3, 2, 4, 3, 2}));

    double stat_err = 0.0;
    std::size_t solved = 0;
    for (std::uint64_t s = 0; s < 40; ++s) {
        for (const auto& seq : {dcm6, ocm6}) {
            const auto g = sample_digraph(seq, RngStream(kSeed + s, 1));
            if (!strongly_connected(g)) continue;
            const auto st = stationary_distribution(kernel_from_digraph(g), 1e-13, 100000);
            stat_err = std::max(stat_err, oracle::max_abs(oracle::stationary(oracle::dense(g)), st.pi.probs()));
            ++solved;
        }
    }
    out.pass = solved > 0 && stat_err <= kOracleTol;
    out.detail += "stationary " + fmt(stat_err) + "; ";

    const auto gs = sample_dcm(dcm6, RngStream(kSeed, 2));
    const auto ge = sample_dcm(dcm6, RngStream(kSeed, 3));
    const auto ks = kernel_from_digraph(gs);
    const auto ke = kernel_from_digraph(ge);
    const auto ps = oracle::dense(gs);
    const auto pe = oracle::dense(ge);
    double bhat_err = 0.0, double_err = 0.0;
    for (Vertex x = 0; x < 6; ++x) {
        bhat_err = std::max(bhat_err, oracle::max_abs(oracle::naive_bhat(ps, pe, x, 7), bhat_row(x, 7, ks, ke).probs()));
        for (std::size_t s = 0; s <= 7; ++s) {
            const oracle::Row exact = oracle::point(6, x) * oracle::power(ps, s) * oracle::power(pe, 7 - s);
            double_err = std::max(double_err, oracle::max_abs(exact, double_row(x, s, 7, ks, ke).probs()));
        }
    }
    out.pass = out.pass && bhat_err <= kRowTol && double_err <= kRowTol;
    out.detail += "bhat " + fmt(bhat_err) + "; double_row " + fmt(double_err) + "; ";

    const auto exact = double_row(0, 1, 3, ks, ke);
    const std::size_t samples = 100000;
    std::vector<double> counts(6, 0.0);
    RngStream rng(kSeed, 4);
    for (std::size_t i = 0; i < samples; ++i) counts[sample_trajectory(0, 1, 3, gs, ge, rng).states.back()] += 1.0;
    double worst_sigmas = 0.0;
    for (Vertex y = 0; y < 6; ++y) {
        const double p = exact[y];
        const double sd = std::sqrt(p * (1 - p) / samples);
        const double gap = std::abs(counts[y] / samples - p);
        if (gap > 1e-12) worst_sigmas = std::max(worst_sigmas, sd > 0 ? gap / sd : 1e9);
    }
    out.pass = out.pass && worst_sigmas <= 3.0;
    out.detail += "trajectory law " + fmt(worst_sigmas) + " sd; ";

    const auto seq3 = validate_degrees(ModelKind::DCM, {2, 2, 2}, std::vector<std::uint32_t>{2, 2, 2});
    const auto law = oracle::dcm_law(seq3);
    std::map<std::vector<Vertex>, std::size_t> index;
    std::vector<double> probs;
    for (const auto& [key, p] : law) {
        index.emplace(key, probs.size());
        probs.push_back(p);
    }
    std::vector<double> observed(probs.size(), 0.0);
    const auto shared3 = std::make_shared<const DegreeSequence>(seq3);
    const RngStream root(kSeed, 5);
    bool known = true;
    for (std::uint64_t s = 0; s < 100000; ++s) {
        const auto it = index.find(oracle::sorted_heads(sample_dcm(shared3, root.child(s))));
        if (it == index.end()) {
            known = false;
            break;
        }
        observed[it->second] += 1.0;
    }
    const double p = known ? oracle::chi_square_p(observed, probs) : 0.0;
    out.pass = out.pass && p > kChiSquareP;
    out.detail += "dcm chi-square p " + fmt(p);
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const std::vector<std::vector<std::string>> runs = {
        {"static-cutoff", "--beta", "0.5,1.5"},
        {"double-cutoff", "--beta", "1.5"},
        {"joint", "--alpha", "0.1", "--beta", "0.5,2"},
        {"marginal", "--alpha", "0.1", "--beta", "0.5,2", "--q-replicates", "4"},
        {"marginal-crosscheck", "--alpha", "0.1", "--beta", "0.5,2", "--q-replicates", "4", "--schedule-samples", "50"},
        {"annealed", "--t-grid", "1,8"},
        {"weight-lln", "--traj-samples", "1000"},
        {"diagnostics"},
        {"q-estimate", "--q-replicates", "6"},
    };
    const auto root = std::filesystem::temp_directory_path() / "mixlab_acceptance_determinism";
    Outcome out;
    std::size_t identical = 0;
    for (const auto& r : runs) {
        std::string reference;
        bool same = true;
        for (const char* threads : {"1", "4", "8"}) {
            const auto dir = root / (r[0] + "_" + threads);
            std::filesystem::remove_all(dir);
            std::vector<std::string> args = {"--experiment"};
            args.insert(args.end(), r.begin(), r.end());
            args.insert(args.end(), {"--n", "2000", "--degrees", "mix:2x1000,3x1000", "--replicates", "4",
                                     "--env-samples", "4", "--start-vertices", "8", "--seed", "11", "--threads",
                                     threads, "--output-dir", dir.string()});
            const auto res = run(parse_run_spec(args));
            const auto csv = res.exit_code == 0 ? slurp(res.csv_path) : std::string();
            if (csv.empty()) same = false;
            if (reference.empty()) reference = csv;
            same = same && csv == reference;
        }
        if (same) {
            ++identical;
        } else {
            out.detail += r[0] + " differs; ";
        }
    }
    std::filesystem::remove_all(root);
    out.pass = identical == runs.size();
    out.detail += std::to_string(identical) + "/" + std::to_string(runs.size()) + " experiments byte-identical";
    return out;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"static cutoff", static_cutoff},
        {"double cutoff", double_cutoff},
        {"joint trichotomy", joint_trichotomy},
        {"marginal trichotomy", marginal_trichotomy},
        {"crosscheck consistency", crosscheck},
        {"annealed law", annealed},
        {"widespread diagnostics", diagnostics},
        {"path-weight LLN", weight_lln},
        {"exact oracles", oracles},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
