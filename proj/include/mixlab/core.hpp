#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mixlab/errors.hpp"

namespace mixlab {

using Vertex = std::uint32_t;

/// Absolute tolerance on the total mass of a probability vector.
inline constexpr double kMassTolerance = 1e-9;

enum class ModelKind { DCM, OCM };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model(std::string_view name);

/// Validated degree data for one of the two random digraph ensembles.
///
/// For the directed configuration model both out- and in-degrees are stored and
/// their sums agree. For the out-configuration model only out-degrees exist and
/// `in_degrees()` is empty.
class DegreeSequence {
public:
    [[nodiscard]] ModelKind model() const noexcept { return model_; }
    [[nodiscard]] std::size_t n() const noexcept { return out_.size(); }
    [[nodiscard]] std::span<const std::uint32_t> out_degrees() const noexcept { return out_; }
    [[nodiscard]] std::span<const std::uint32_t> in_degrees() const noexcept { return in_; }
    [[nodiscard]] std::uint32_t out_degree(Vertex x) const { return out_[x]; }
    /// Total number of edges (sum of out-degrees).
    [[nodiscard]] std::uint64_t m() const noexcept { return m_; }
    /// Maximum over every stored degree.
    [[nodiscard]] std::uint32_t delta() const noexcept { return delta_; }
    /// True when d_x^+ = d_x^- for every vertex (DCM only).
    [[nodiscard]] bool eulerian() const noexcept;

    friend bool operator==(const DegreeSequence&, const DegreeSequence&) = default;

private:
    friend DegreeSequence validate_degrees(ModelKind, std::vector<std::uint32_t>,
                                           std::optional<std::vector<std::uint32_t>>);

    ModelKind model_ = ModelKind::DCM;
    std::vector<std::uint32_t> out_;
    std::vector<std::uint32_t> in_;
    std::uint64_t m_ = 0;
    std::uint32_t delta_ = 0;
};

/// Checks the degree assumptions and builds a DegreeSequence.
///
/// Throws LengthMismatch, MismatchedSums, DegreeTooSmall or DegreeTooLarge.
DegreeSequence validate_degrees(ModelKind model, std::vector<std::uint32_t> out_degrees,
                                std::optional<std::vector<std::uint32_t>> in_degrees = std::nullopt);

/// A dense probability vector over [n].
class Distribution {
public:
    Distribution() = default;
    /// Validates nonnegativity and unit mass within kMassTolerance.
    explicit Distribution(std::vector<double> probs);

    static Distribution point_mass(std::size_t n, Vertex x);
    static Distribution uniform(std::size_t n);

    [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }
    [[nodiscard]] std::span<const double> probs() const noexcept { return probs_; }
    [[nodiscard]] double operator[](std::size_t i) const { return probs_[i]; }
    [[nodiscard]] const std::vector<double>& vector() const noexcept { return probs_; }

private:
    std::vector<double> probs_;
};

struct EntropicScale {
    double entropy = 0.0;       ///< H in nats
    double entropic_time = 0.0; ///< log(n) / H, in steps
};

Distribution mu_in(const DegreeSequence& seq);
EntropicScale entropic_scale(const DegreeSequence& seq);

double tv_distance(std::span<const double> a, std::span<const double> b);
double tv_distance(const Distribution& a, const Distribution& b);

}  // namespace mixlab
