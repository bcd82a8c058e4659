#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mixlab/core.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/sampler.hpp"

namespace mixlab {

/// Row-stochastic sparse matrix P(x, y) = #(x -> y) / d_x^+ in CSR form.
///
/// Columns within a row are sorted and multi-edges are merged.
class TransitionKernel {
public:
    struct Entry {
        Vertex target;
        double prob;
    };

    TransitionKernel() = default;

    /// Builds a kernel from explicit rows; each row must sum to 1 within 1e-12
    /// and hold positive entries only.
    static TransitionKernel from_rows(const std::vector<std::vector<Entry>>& rows);

    [[nodiscard]] std::size_t n() const noexcept { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
    [[nodiscard]] std::size_t nnz() const noexcept { return cols_.size(); }
    [[nodiscard]] std::span<const Vertex> row_targets(Vertex x) const {
        return {cols_.data() + row_ptr_[x], cols_.data() + row_ptr_[x + 1]};
    }
    [[nodiscard]] std::span<const double> row_probs(Vertex x) const {
        return {vals_.data() + row_ptr_[x], vals_.data() + row_ptr_[x + 1]};
    }
    /// P(x, y), zero when y is not an out-neighbour of x.
    [[nodiscard]] double at(Vertex x, Vertex y) const;

    /// out = in * P. Rows with zero input mass are skipped.
    void apply(std::span<const double> in, std::span<double> out) const;

private:
    friend TransitionKernel kernel_from_digraph(const Digraph& g);

    std::vector<std::uint64_t> row_ptr_;
    std::vector<Vertex> cols_;
    std::vector<double> vals_;
};

TransitionKernel kernel_from_digraph(const Digraph& g);

/// Number of times propagation renormalized a vector whose mass drifted more
/// than kMassTolerance away from 1. Process-wide and monotone.
std::uint64_t renormalization_events() noexcept;

/// Repeated sparse vector-matrix products with drift monitoring. The vector is
/// advanced in place; `scratch` must have the same length.
void propagate_in_place(std::vector<double>& dist, std::vector<double>& scratch,
                        const TransitionKernel& k, std::size_t steps);

/// dist * P^steps.
Distribution propagate(const Distribution& dist, const TransitionKernel& k, std::size_t steps);

/// Q^{s,t}(x, .) = delta_x P_sigma^s P_eta^{t-s}.
Distribution double_row(Vertex x, std::size_t s, std::size_t t, const TransitionKernel& k_sigma,
                        const TransitionKernel& k_eta);

/// Time-averaged double-environment row
///   Bhat_t(x, .) = (1/t) sum_{s=1}^{t} delta_x P_sigma^{s-1} P_eta^{t-s}.
///
/// Evaluated by the forward accumulator a <- a P_eta + u_s with
/// u_s = u_{s-1} P_sigma, so it costs 2(t-1) kernel applications and three
/// length-n buffers.
Distribution bhat_row(Vertex x, std::size_t t, const TransitionKernel& k_sigma,
                      const TransitionKernel& k_eta);

struct Trajectory {
    std::vector<Vertex> states;
    /// Step at which the environment switches from sigma to eta.
    std::optional<std::size_t> switch_time;

    [[nodiscard]] std::size_t length() const noexcept { return states.empty() ? 0 : states.size() - 1; }
};

/// Walk s steps through g_sigma then t - s steps through g_eta, each step
/// along a uniformly chosen out-edge of the raw edge list.
Trajectory sample_trajectory(Vertex x, std::size_t s, std::size_t t, const Digraph& g_sigma,
                             const Digraph& g_eta, RngStream& rng);

/// Log of the product of kernel entries along the trajectory; the first
/// `switch_time` steps use k_sigma and the rest k_eta.
double path_log_weight(const Trajectory& traj, const TransitionKernel& k_sigma,
                       const TransitionKernel& k_eta);

}  // namespace mixlab
