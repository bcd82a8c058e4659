#include "mixlab/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

namespace mixlab {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::MismatchedSums: return "MismatchedSums";
        case ErrorCode::DegreeTooSmall: return "DegreeTooSmall";
        case ErrorCode::DegreeTooLarge: return "DegreeTooLarge";
        case ErrorCode::ModelMismatch: return "ModelMismatch";
        case ErrorCode::BadRange: return "BadRange";
        case ErrorCode::ImpossibleStep: return "ImpossibleStep";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::AllReplicatesFailed: return "AllReplicatesFailed";
        case ErrorCode::BadCurveName: return "BadCurveName";
        case ErrorCode::BadValue: return "BadValue";
        case ErrorCode::BudgetExceeded: return "BudgetExceeded";
        case ErrorCode::UnknownFlag: return "UnknownFlag";
        case ErrorCode::BadGeneratorSyntax: return "BadGeneratorSyntax";
        case ErrorCode::MissingRequired: return "MissingRequired";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Parse: return "Parse";
    }
    return "Unknown";
}

std::string_view to_string(ModelKind kind) noexcept {
    return kind == ModelKind::DCM ? "dcm" : "ocm";
}

ModelKind parse_model(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "dcm") return ModelKind::DCM;
    if (lower == "ocm") return ModelKind::OCM;
    throw Error(ErrorCode::BadValue, "unknown model '" + std::string(name) + "'");
}

bool DegreeSequence::eulerian() const noexcept {
    return model_ == ModelKind::DCM && out_ == in_;
}

DegreeSequence validate_degrees(ModelKind model, std::vector<std::uint32_t> out_degrees,
                                std::optional<std::vector<std::uint32_t>> in_degrees) {
    if (out_degrees.empty()) throw Error(ErrorCode::LengthMismatch, "empty degree sequence");
    if ((model == ModelKind::DCM) != in_degrees.has_value()) {
        throw Error(ErrorCode::LengthMismatch,
                    model == ModelKind::DCM ? "DCM requires in-degrees"
                                            : "OCM takes no in-degrees");
    }
    const std::size_t n = out_degrees.size();
    if (in_degrees && in_degrees->size() != n) {
        throw Error(ErrorCode::LengthMismatch, "out- and in-degree arrays differ in length");
    }

    DegreeSequence seq;
    seq.model_ = model;
    std::uint32_t delta = 0;
    std::uint64_t out_sum = 0;
    for (std::size_t x = 0; x < n; ++x) {
        const auto d = out_degrees[x];
        if (d < 2) {
            throw Error(ErrorCode::DegreeTooSmall,
                        "out-degree of vertex " + std::to_string(x) + " is " + std::to_string(d));
        }
        if (model == ModelKind::OCM && d > n) {
            throw Error(ErrorCode::DegreeTooLarge, "out-degree of vertex " + std::to_string(x) +
                                                       " exceeds n = " + std::to_string(n));
        }
        out_sum += d;
        delta = std::max(delta, d);
    }
    if (in_degrees) {
        std::uint64_t in_sum = 0;
        for (std::size_t x = 0; x < n; ++x) {
            const auto d = (*in_degrees)[x];
            if (d < 2) {
                throw Error(ErrorCode::DegreeTooSmall,
                            "in-degree of vertex " + std::to_string(x) + " is " + std::to_string(d));
            }
            in_sum += d;
            delta = std::max(delta, d);
        }
        if (in_sum != out_sum) {
            throw Error(ErrorCode::MismatchedSums, "sum of out-degrees " + std::to_string(out_sum) +
                                                       " != sum of in-degrees " + std::to_string(in_sum));
        }
        seq.in_ = std::move(*in_degrees);
    }
    seq.out_ = std::move(out_degrees);
    seq.m_ = out_sum;
    seq.delta_ = delta;
    return seq;
}

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0)) throw Error(ErrorCode::BadValue, "negative or NaN probability");
        total += p;
    }
    if (std::abs(total - 1.0) > kMassTolerance) {
        throw Error(ErrorCode::BadValue, "probabilities sum to " + std::to_string(total));
    }
}

Distribution Distribution::point_mass(std::size_t n, Vertex x) {
    if (x >= n) throw Error(ErrorCode::BadRange, "vertex out of range");
    std::vector<double> probs(n, 0.0);
    probs[x] = 1.0;
    return Distribution(std::move(probs));
}

Distribution Distribution::uniform(std::size_t n) {
    if (n == 0) throw Error(ErrorCode::LengthMismatch, "empty distribution");
    return Distribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Distribution mu_in(const DegreeSequence& seq) {
    const std::size_t n = seq.n();
    if (seq.model() == ModelKind::OCM) return Distribution::uniform(n);
    std::vector<double> probs(n);
    const double m = static_cast<double>(seq.m());
    const auto in = seq.in_degrees();
    for (std::size_t x = 0; x < n; ++x) probs[x] = static_cast<double>(in[x]) / m;
    return Distribution(std::move(probs));
}

EntropicScale entropic_scale(const DegreeSequence& seq) {
    const auto mu = mu_in(seq);
    const auto out = seq.out_degrees();
    double h = 0.0;
    for (std::size_t x = 0; x < seq.n(); ++x) h += mu[x] * std::log(static_cast<double>(out[x]));
    return {h, std::log(static_cast<double>(seq.n())) / h};
}

double tv_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "tv_distance length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return std::min(1.0, 0.5 * sum);
}

double tv_distance(const Distribution& a, const Distribution& b) {
    return tv_distance(a.probs(), b.probs());
}

}  // namespace mixlab
