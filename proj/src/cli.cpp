#include "mixlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "mixlab/parallel.hpp"
#include "mixlab/report.hpp"
#include "mixlab/walk.hpp"

namespace mixlab {

namespace {

constexpr std::uint64_t kDegreeShuffleTag = 99;

struct FlagInfo {
    const char* key;
    const char* flags;
    const char* help;
};

// snake_case config keys and their kebab-case flags.
constexpr FlagInfo kFlags[] = {
    {"experiment", "--experiment", "experiment name"},
    {"n", "--n", "vertex count"},
    {"degrees", "--degrees", "degree generator: regular:d | mix:d1xk1,... | eulerian:... | d1,d2,..."},
    {"in_degrees", "--in-degrees", "explicit in-degrees d1,d2,... (DCM with an explicit out list)"},
    {"degrees_file", "--degrees-file", "JSON {model, out_degrees, in_degrees?}"},
    {"model", "--model", "dcm | ocm"},
    {"alpha", "--alpha", "regeneration probability in (0,1)"},
    {"beta_grid", "--beta-grid,--beta", "comma-separated beta values"},
    {"s_grid", "--s-grid", "comma-separated switch times (double-cutoff)"},
    {"replicates", "--replicates", "number of primary environments"},
    {"env_samples", "--env-samples", "fresh environments per replicate"},
    {"start_vertices", "--start-vertices", "all | <sample size> | list:v1,v2,..."},
    {"root_seed", "--root-seed,--seed", "64-bit root seed"},
    {"output_dir", "--output-dir", "directory for the CSV and JSON outputs"},
    {"threads", "--threads", "worker count or auto"},
    {"time_scale", "--time-scale", "alpha | entropic (marginal)"},
    {"epsilon", "--epsilon", "excluded half-window around T_ent (double-cutoff)"},
    {"q_replicates", "--q-replicates", "replicates for the q estimate"},
    {"tol", "--tol", "stationary tolerance in TV"},
    {"max_iters", "--max-iters", "power-iteration cap (0 = 200*ceil(T_ent))"},
    {"op_budget", "--op-budget", "multiply-add budget per run"},
    {"t_grid", "--t-grid", "comma-separated times (annealed)"},
    {"traj_samples", "--traj-samples", "trajectories (weight-lln)"},
    {"schedule_samples", "--schedule-samples", "regeneration schedules (marginal-crosscheck)"},
    {"switch_time", "--switch-time", "environment switch step s (weight-lln)"},
    {"walk_length", "--walk-length", "trajectory length t (weight-lln, 0 = floor(T_ent))"},
    {"lln_epsilon", "--lln-epsilon", "window half-width (weight-lln)"},
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, sep)) {
        if (!part.empty()) parts.push_back(part);
    }
    return parts;
}

std::uint64_t to_u64(const std::string& text, ErrorCode code, const std::string& what) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(text, &used);
        if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error(code, "bad " + what + " '" + text + "'");
    }
}

double to_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const auto v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::BadValue, "bad " + what + " '" + text + "'");
    }
}

std::vector<std::uint32_t> parse_degree_list(const std::string& text) {
    std::vector<std::uint32_t> out;
    for (const auto& p : split(text, ',')) {
        out.push_back(static_cast<std::uint32_t>(to_u64(p, ErrorCode::BadGeneratorSyntax, "degree")));
    }
    if (out.empty()) throw Error(ErrorCode::BadGeneratorSyntax, "empty degree list");
    return out;
}

// "d1xk1,d2xk2" -> out-degree multiset in block order.
std::vector<std::uint32_t> parse_blocks(const std::string& body) {
    std::vector<std::uint32_t> out;
    for (const auto& block : split(body, ',')) {
        const auto x = block.find('x');
        if (x == std::string::npos) throw Error(ErrorCode::BadGeneratorSyntax, "expected dxk in '" + block + "'");
        const auto d = to_u64(block.substr(0, x), ErrorCode::BadGeneratorSyntax, "degree");
        const auto k = to_u64(block.substr(x + 1), ErrorCode::BadGeneratorSyntax, "count");
        out.insert(out.end(), k, static_cast<std::uint32_t>(d));
    }
    if (out.empty()) throw Error(ErrorCode::BadGeneratorSyntax, "empty generator '" + body + "'");
    return out;
}

// Config values may be JSON numbers/arrays (file) or strings (flags).
std::string as_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string out;
        for (const auto& e : v) {
            if (!out.empty()) out += ",";
            out += as_text(e);
        }
        return out;
    }
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) {
        std::ostringstream os;
        os.precision(17);
        os << v.get<double>();
        return os.str();
    }
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    throw Error(ErrorCode::BadValue, "unsupported config value " + v.dump());
}

std::vector<double> as_doubles(const nlohmann::json& v, const std::string& what) {
    std::vector<double> out;
    for (const auto& p : split(as_text(v), ',')) out.push_back(to_double(p, what));
    return out;
}

std::vector<std::size_t> as_sizes(const nlohmann::json& v, const std::string& what) {
    std::vector<std::size_t> out;
    for (const auto& p : split(as_text(v), ',')) out.push_back(to_u64(p, ErrorCode::BadValue, what));
    return out;
}

StartVertices parse_starts(const std::string& text) {
    if (text == "all") return StartVertices::all();
    if (text == "auto") return {};
    if (text.rfind("list:", 0) == 0) {
        std::vector<Vertex> v;
        for (const auto& p : split(text.substr(5), ',')) {
            v.push_back(static_cast<Vertex>(to_u64(p, ErrorCode::BadValue, "start vertex")));
        }
        return StartVertices::list(std::move(v));
    }
    return StartVertices::sample(to_u64(text, ErrorCode::BadValue, "start-vertex sample size"));
}

std::string starts_text(const StartVertices& s) {
    switch (s.mode) {
        case StartVertices::Mode::All: return "all";
        case StartVertices::Mode::Sample: return std::to_string(s.sample_size);
        case StartVertices::Mode::Explicit: {
            std::string out = "list:";
            for (std::size_t i = 0; i < s.vertices.size(); ++i) {
                out += (i ? "," : "") + std::to_string(s.vertices[i]);
            }
            return out;
        }
        case StartVertices::Mode::Auto: break;
    }
    return "auto";
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    }
}

std::string output_stem(const RunSpec& spec) {
    return spec.experiment + "_n" + std::to_string(spec.config.seq.n()) + "_a" +
           format_number(spec.config.alpha) + "_s" + std::to_string(spec.config.root_seed);
}

}  // namespace

DegreeSequence generate_degrees(const std::string& text, ModelKind model, std::optional<std::size_t> n,
                                std::uint64_t seed, const std::optional<std::string>& in_degrees) {
    const auto colon = text.find(':');
    const std::string kind = colon == std::string::npos ? "" : text.substr(0, colon);
    const std::string body = colon == std::string::npos ? text : text.substr(colon + 1);

    std::vector<std::uint32_t> out;
    std::optional<std::vector<std::uint32_t>> in;
    if (kind == "regular") {
        if (!n) throw Error(ErrorCode::MissingRequired, "regular:d needs --n");
        const auto d = static_cast<std::uint32_t>(to_u64(body, ErrorCode::BadGeneratorSyntax, "degree"));
        out.assign(*n, d);
        if (model == ModelKind::DCM) in = out;
    } else if (kind == "mix" || kind == "eulerian") {
        out = parse_blocks(body);
        if (model == ModelKind::DCM) {
            in = out;
            if (kind == "mix") {
                RngStream rng(seed, kDegreeShuffleTag);
                for (std::size_t i = in->size(); i > 1; --i) std::swap((*in)[i - 1], (*in)[rng.below(i)]);
            }
        }
    } else if (kind.empty()) {
        out = parse_degree_list(body);
        if (model == ModelKind::DCM) {
            if (!in_degrees) throw Error(ErrorCode::MissingRequired, "explicit DCM out-degrees need --in-degrees");
            in = parse_degree_list(*in_degrees);
        }
    } else {
        throw Error(ErrorCode::BadGeneratorSyntax, "unknown generator '" + kind + "'");
    }
    if (n && *n != out.size()) {
        throw Error(ErrorCode::BadGeneratorSyntax, "generator yields " + std::to_string(out.size()) +
                                                       " vertices but n = " + std::to_string(*n));
    }
    return validate_degrees(model, std::move(out), std::move(in));
}

DegreeSequence load_degrees_file(const std::filesystem::path& path) {
    const auto doc = load_json_file(path);
    try {
        const auto model = parse_model(doc.at("model").get<std::string>());
        auto out = doc.at("out_degrees").get<std::vector<std::uint32_t>>();
        std::optional<std::vector<std::uint32_t>> in;
        if (doc.contains("in_degrees") && !doc["in_degrees"].is_null()) {
            in = doc["in_degrees"].get<std::vector<std::uint32_t>>();
        }
        return validate_degrees(model, std::move(out), std::move(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    }
}

RunSpec parse_run_spec(const std::vector<std::string>& args,
                       const std::optional<std::filesystem::path>& config_file) {
    CLI::App app{"mixlab"};
    app.allow_extras(false);
    app.set_help_flag();
    std::map<std::string, std::string> flag_values;
    for (const auto& f : kFlags) app.add_option(f.flags, flag_values[f.key], f.help);
    std::string config_flag;
    app.add_option("--config", config_flag, "JSON config file");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ExtrasError& e) {
        throw Error(ErrorCode::UnknownFlag, e.what());
    } catch (const CLI::ParseError& e) {
        throw Error(ErrorCode::UnknownFlag, e.what());
    }

    nlohmann::json merged = nlohmann::json::object();
    std::optional<std::filesystem::path> file = config_file;
    if (!config_flag.empty()) file = config_flag;
    if (file) {
        const auto doc = load_json_file(*file);
        if (!doc.is_object()) throw Error(ErrorCode::Parse, "config must be a JSON object");
        for (const auto& [key, value] : doc.items()) {
            const bool known = std::any_of(std::begin(kFlags), std::end(kFlags),
                                           [&](const FlagInfo& f) { return key == f.key; });
            if (!known) throw Error(ErrorCode::UnknownFlag, "config key '" + key + "'");
            merged[key] = value;
        }
    }
    for (const auto& f : kFlags) {
        auto* opt = app.get_option(std::string(f.flags).substr(0, std::string(f.flags).find(',')));
        if (opt->count() > 0) merged[f.key] = flag_values[f.key];
    }

    RunSpec spec;
    auto has = [&](const char* key) { return merged.contains(key) && !merged[key].is_null(); };
    auto text = [&](const char* key) { return as_text(merged[key]); };

    if (!has("experiment")) throw Error(ErrorCode::MissingRequired, "experiment");
    spec.experiment = text("experiment");
    if (std::find(std::begin(kExperimentNames), std::end(kExperimentNames), spec.experiment) ==
        std::end(kExperimentNames)) {
        throw Error(ErrorCode::BadValue, "unknown experiment '" + spec.experiment + "'");
    }

    auto& cfg = spec.config;
    if (has("root_seed")) cfg.root_seed = to_u64(text("root_seed"), ErrorCode::BadValue, "seed");
    const ModelKind model = has("model") ? parse_model(text("model")) : ModelKind::DCM;
    std::optional<std::size_t> n;
    if (has("n")) n = to_u64(text("n"), ErrorCode::BadValue, "n");
    if (has("degrees_file")) {
        cfg.seq = load_degrees_file(text("degrees_file"));
        if (n && *n != cfg.seq.n()) throw Error(ErrorCode::BadValue, "n disagrees with the degrees file");
    } else {
        const std::string gen = has("degrees") ? text("degrees") : "regular:3";
        if (!n && gen.rfind("regular:", 0) == 0) throw Error(ErrorCode::MissingRequired, "n");
        std::optional<std::string> in;
        if (has("in_degrees")) in = text("in_degrees");
        cfg.seq = generate_degrees(gen, model, n, cfg.root_seed, in);
    }

    if (has("alpha")) cfg.alpha = to_double(text("alpha"), "alpha");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw Error(ErrorCode::BadValue, "alpha must lie in (0,1), got " + text("alpha"));
    }
    cfg.beta_grid = has("beta_grid") ? as_doubles(merged["beta_grid"], "beta") : std::vector<double>{0.5, 1.0, 2.0};
    if (has("s_grid")) cfg.s_grid = as_sizes(merged["s_grid"], "s");
    if (has("replicates")) cfg.replicates = to_u64(text("replicates"), ErrorCode::BadValue, "replicates");
    if (has("env_samples")) cfg.env_samples = to_u64(text("env_samples"), ErrorCode::BadValue, "env_samples");
    if (has("start_vertices")) cfg.start_vertices = parse_starts(text("start_vertices"));
    if (has("time_scale")) {
        const auto ts = text("time_scale");
        if (ts == "alpha") {
            cfg.time_scale = TimeScale::Alpha;
        } else if (ts == "entropic") {
            cfg.time_scale = TimeScale::Entropic;
        } else {
            throw Error(ErrorCode::BadValue, "time_scale must be alpha or entropic");
        }
    }
    if (has("epsilon")) cfg.epsilon = to_double(text("epsilon"), "epsilon");
    if (has("q_replicates")) cfg.q_replicates = to_u64(text("q_replicates"), ErrorCode::BadValue, "q_replicates");
    if (has("tol")) cfg.tol = to_double(text("tol"), "tol");
    if (has("max_iters")) cfg.max_iters = to_u64(text("max_iters"), ErrorCode::BadValue, "max_iters");
    if (has("op_budget")) cfg.op_budget = to_double(text("op_budget"), "op_budget");
    if (has("output_dir")) spec.output_dir = text("output_dir");
    if (has("threads")) {
        const auto t = text("threads");
        spec.threads = t == "auto" ? 0 : static_cast<unsigned>(to_u64(t, ErrorCode::BadValue, "threads"));
        if (t != "auto" && spec.threads == 0) throw Error(ErrorCode::BadValue, "threads must be positive or auto");
    }
    cfg.threads = resolve_threads(spec.threads);
    if (has("t_grid")) spec.t_grid = as_sizes(merged["t_grid"], "t");
    if (has("traj_samples")) spec.traj_samples = to_u64(text("traj_samples"), ErrorCode::BadValue, "traj_samples");
    if (has("schedule_samples")) {
        spec.schedule_samples = to_u64(text("schedule_samples"), ErrorCode::BadValue, "schedule_samples");
    }
    if (has("switch_time")) spec.switch_time = to_u64(text("switch_time"), ErrorCode::BadValue, "switch_time");
    if (has("walk_length")) spec.walk_length = to_u64(text("walk_length"), ErrorCode::BadValue, "walk_length");
    if (has("lln_epsilon")) spec.lln_epsilon = to_double(text("lln_epsilon"), "lln_epsilon");
    validate_config(cfg);

    const auto scale = entropic_scale(cfg.seq);
    auto& r = spec.resolved;
    r["experiment"] = spec.experiment;
    r["model"] = std::string(to_string(cfg.seq.model()));
    r["n"] = cfg.seq.n();
    r["m"] = cfg.seq.m();
    r["delta"] = cfg.seq.delta();
    if (has("degrees_file")) {
        r["degrees_file"] = text("degrees_file");
    } else {
        r["degrees"] = has("degrees") ? text("degrees") : "regular:3";
    }
    r["entropy"] = scale.entropy;
    r["t_ent"] = scale.entropic_time;
    r["alpha"] = cfg.alpha;
    r["gamma_hat"] = cfg.alpha * scale.entropic_time;
    r["beta_grid"] = cfg.beta_grid;
    r["s_grid"] = cfg.s_grid;
    r["replicates"] = cfg.replicates;
    r["env_samples"] = cfg.env_samples;
    r["start_vertices"] = starts_text(cfg.start_vertices);
    r["root_seed"] = cfg.root_seed;
    r["output_dir"] = spec.output_dir.string();
    r["threads"] = spec.threads == 0 ? nlohmann::json("auto") : nlohmann::json(spec.threads);
    r["time_scale"] = cfg.time_scale == TimeScale::Alpha ? "alpha" : "entropic";
    r["epsilon"] = cfg.epsilon;
    r["q_replicates"] = cfg.q_replicates;
    r["tol"] = cfg.tol;
    r["max_iters"] = cfg.max_iters;
    r["op_budget"] = cfg.op_budget;
    r["t_grid"] = spec.t_grid;
    r["traj_samples"] = spec.traj_samples;
    r["schedule_samples"] = spec.schedule_samples;
    r["switch_time"] = spec.switch_time;
    r["walk_length"] = spec.walk_length;
    r["lln_epsilon"] = spec.lln_epsilon;
    return spec;
}

RunOutcome run(const RunSpec& spec) {
    RunOutcome outcome;
    const auto& cfg = spec.config;
    try {
        if (cfg.seq.delta() > 50) {
            std::cerr << "warning: maximum degree " << cfg.seq.delta() << " exceeds 50\n";
        }
        const double t_ent = entropic_scale(cfg.seq).entropic_time;
        const auto renorm_before = renormalization_events();
        std::string csv;
        nlohmann::json meta;
        std::optional<double> deviation;
        std::size_t failed = 0;
        std::size_t solves = 0;

        auto take_report = [&](ExperimentReport report) {
            csv = format_csv(report);
            deviation = report.max_deviation();
            meta = std::move(report.metadata);
            nlohmann::json flagged = nlohmann::json::array();
            for (const auto& row : report.rows) {
                if (row.flagged) flagged.push_back(row.abscissa);
            }
            meta["flagged_abscissae"] = flagged;
        };

        const std::string& name = spec.experiment;
        if (name == "static-cutoff") {
            take_report(static_cutoff_profile(cfg));
        } else if (name == "double-cutoff") {
            if (cfg.beta_grid.empty()) throw Error(ErrorCode::MissingRequired, "beta");
            const double beta = cfg.beta_grid.front();
            ExperimentConfig c = cfg;
            if (c.s_grid.empty()) {
                const std::size_t t = static_cast<std::size_t>(std::floor(beta * t_ent + 1e-12));
                c.s_grid = {0, t / 4, t / 2, 3 * t / 4, t};
            }
            take_report(double_cutoff_sweep(c, beta));
        } else if (name == "joint") {
            take_report(joint_trichotomy_curve(cfg));
        } else if (name == "marginal") {
            take_report(marginal_trichotomy_curve(cfg));
        } else if (name == "marginal-crosscheck") {
            take_report(marginal_crosscheck_report(cfg, spec.schedule_samples));
        } else if (name == "annealed") {
            auto grid = spec.t_grid;
            if (grid.empty()) grid = {1, static_cast<std::size_t>(std::floor(2.0 * t_ent))};
            take_report(annealed_check(cfg.seq, grid, cfg.env_samples, cfg.start_vertices,
                                       RngStream(cfg.root_seed, 0), cfg.threads));
        } else if (name == "weight-lln") {
            const std::size_t t =
                spec.walk_length ? spec.walk_length : static_cast<std::size_t>(std::floor(t_ent));
            const auto lln = path_weight_lln(cfg.seq, spec.switch_time, t, spec.traj_samples,
                                             RngStream(cfg.root_seed, 0), spec.lln_epsilon, cfg.threads);
            ExperimentReport report;
            report.experiment = name;
            report.extra_columns = {"mean_rate", "entropy", "epsilon"};
            report.rows.push_back({static_cast<double>(t), lln.frac_in_window, lln.frac_std_err, 1.0,
                                   lln.samples, false, {lln.mean_rate, lln.entropy, spec.lln_epsilon}});
            report.metadata["experiment"] = name;
            report.metadata["n"] = cfg.seq.n();
            report.metadata["t"] = t;
            report.metadata["switch_time"] = spec.switch_time;
            take_report(std::move(report));
        } else if (name == "diagnostics" || name == "q-estimate") {
            DiagnosticsReport diag;
            if (name == "diagnostics") {
                diag = widespread_diagnostics(cfg);
            } else {
                ExperimentConfig c = cfg;
                c.replicates = cfg.q_replicates;
                diag = widespread_diagnostics(c);
                diag.metadata["experiment"] = name;
            }
            csv = format_diagnostics_csv(diag.q);
            failed = diag.q.failed;
            solves = diag.q.replicates.size();
            meta = std::move(diag.metadata);
        }

        meta["spec"] = spec.resolved;
        meta["renormalization_events"] = renormalization_events() - renorm_before;
        if (deviation) meta["max_abs_deviation"] = *deviation;

        std::filesystem::create_directories(spec.output_dir);
        const auto stem = output_stem(spec);
        outcome.csv_path = spec.output_dir / (stem + ".csv");
        outcome.json_path = spec.output_dir / (stem + ".json");
        write_atomic(outcome.csv_path, csv);
        write_atomic(outcome.json_path, meta.dump(2) + "\n");

        outcome.summary = name + ": ";
        if (deviation) {
            outcome.summary += "max |estimate - theory| over unflagged points = " + format_number(*deviation);
        } else {
            outcome.summary += "q_hat = " + format_number(meta.value("q_hat", 0.0)) + ", failed solves " +
                               std::to_string(failed) + "/" + std::to_string(solves);
        }
        outcome.summary += " -> " + outcome.csv_path.string();
        outcome.exit_code = (solves > 0 && 2 * failed > solves) ? 2 : 0;
    } catch (const NotConverged& e) {
        outcome.summary = std::string("error: ") + e.what();
        outcome.exit_code = 2;
    } catch (const Error& e) {
        outcome.summary = std::string("error: ") + e.what();
        outcome.exit_code = 1;
    } catch (const std::filesystem::filesystem_error& e) {
        outcome.summary = std::string("error: Io: ") + e.what();
        outcome.exit_code = 1;
    }
    return outcome;
}

}  // namespace mixlab
