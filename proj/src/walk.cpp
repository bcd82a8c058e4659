#include "mixlab/walk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mixlab {

namespace {

std::atomic<std::uint64_t> g_renormalizations{0};

void check_same_size(const TransitionKernel& a, const TransitionKernel& b) {
    if (a.n() != b.n()) throw Error(ErrorCode::LengthMismatch, "kernels differ in size");
}

void check_vertex(Vertex x, std::size_t n) {
    if (x >= n) throw Error(ErrorCode::BadRange, "start vertex " + std::to_string(x) + " >= n");
}

}  // namespace

TransitionKernel TransitionKernel::from_rows(const std::vector<std::vector<Entry>>& rows) {
    TransitionKernel k;
    const std::size_t n = rows.size();
    k.row_ptr_.assign(n + 1, 0);
    for (std::size_t x = 0; x < n; ++x) {
        auto row = rows[x];
        std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.target < b.target; });
        double total = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (row[i].target >= n) throw Error(ErrorCode::BadRange, "kernel column out of range");
            if (!(row[i].prob > 0.0)) throw Error(ErrorCode::BadValue, "kernel entries must be positive");
            if (i > 0 && row[i].target == row[i - 1].target) {
                throw Error(ErrorCode::BadValue, "duplicate kernel column");
            }
            total += row[i].prob;
            k.cols_.push_back(row[i].target);
            k.vals_.push_back(row[i].prob);
        }
        if (std::abs(total - 1.0) > 1e-12) {
            throw Error(ErrorCode::BadValue, "kernel row " + std::to_string(x) + " sums to " + std::to_string(total));
        }
        k.row_ptr_[x + 1] = k.cols_.size();
    }
    return k;
}

double TransitionKernel::at(Vertex x, Vertex y) const {
    const auto targets = row_targets(x);
    const auto it = std::lower_bound(targets.begin(), targets.end(), y);
    if (it == targets.end() || *it != y) return 0.0;
    return row_probs(x)[static_cast<std::size_t>(it - targets.begin())];
}

void TransitionKernel::apply(std::span<const double> in, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t rows = n();
    for (std::size_t x = 0; x < rows; ++x) {
        const double mass = in[x];
        if (mass == 0.0) continue;
        for (auto i = row_ptr_[x]; i < row_ptr_[x + 1]; ++i) out[cols_[i]] += mass * vals_[i];
    }
}

TransitionKernel kernel_from_digraph(const Digraph& g) {
    TransitionKernel k;
    const std::size_t n = g.n();
    k.row_ptr_.assign(n + 1, 0);
    k.cols_.reserve(g.m());
    k.vals_.reserve(g.m());
    std::vector<Vertex> row;
    for (Vertex x = 0; x < n; ++x) {
        const auto edges = g.out_edges(x);
        row.assign(edges.begin(), edges.end());
        std::sort(row.begin(), row.end());
        const auto degree = static_cast<double>(row.size());
        for (std::size_t i = 0; i < row.size();) {
            std::size_t j = i;
            while (j < row.size() && row[j] == row[i]) ++j;
            k.cols_.push_back(row[i]);
            // multiplicity / degree, a single correctly rounded division
            k.vals_.push_back(static_cast<double>(j - i) / degree);
            i = j;
        }
        k.row_ptr_[x + 1] = k.cols_.size();
    }
    return k;
}

std::uint64_t renormalization_events() noexcept { return g_renormalizations.load(); }

void propagate_in_place(std::vector<double>& dist, std::vector<double>& scratch,
                        const TransitionKernel& k, std::size_t steps) {
    if (dist.size() != k.n() || scratch.size() != k.n()) {
        throw Error(ErrorCode::LengthMismatch, "distribution length differs from kernel size");
    }
    for (std::size_t step = 0; step < steps; ++step) {
        k.apply(dist, scratch);
        dist.swap(scratch);
        const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
        if (std::abs(total - 1.0) > kMassTolerance) {
            for (double& p : dist) p /= total;
            g_renormalizations.fetch_add(1, std::memory_order_relaxed);
        }
    }
}

Distribution propagate(const Distribution& dist, const TransitionKernel& k, std::size_t steps) {
    if (dist.size() != k.n()) throw Error(ErrorCode::LengthMismatch, "distribution length differs from kernel size");
    std::vector<double> cur = dist.vector();
    std::vector<double> scratch(cur.size());
    propagate_in_place(cur, scratch, k, steps);
    return Distribution(std::move(cur));
}

Distribution double_row(Vertex x, std::size_t s, std::size_t t, const TransitionKernel& k_sigma,
                        const TransitionKernel& k_eta) {
    if (s > t) throw Error(ErrorCode::BadRange, "double_row requires s <= t");
    check_same_size(k_sigma, k_eta);
    check_vertex(x, k_sigma.n());
    std::vector<double> cur(k_sigma.n(), 0.0);
    cur[x] = 1.0;
    std::vector<double> scratch(cur.size());
    propagate_in_place(cur, scratch, k_sigma, s);
    propagate_in_place(cur, scratch, k_eta, t - s);
    return Distribution(std::move(cur));
}

Distribution bhat_row(Vertex x, std::size_t t, const TransitionKernel& k_sigma,
                      const TransitionKernel& k_eta) {
    if (t == 0) throw Error(ErrorCode::BadRange, "bhat_row requires t >= 1");
    check_same_size(k_sigma, k_eta);
    check_vertex(x, k_sigma.n());
    const std::size_t n = k_sigma.n();
    std::vector<double> forward(n, 0.0);
    forward[x] = 1.0;
    std::vector<double> acc = forward;
    std::vector<double> scratch(n);
    for (std::size_t s = 2; s <= t; ++s) {
        propagate_in_place(forward, scratch, k_sigma, 1);
        // The accumulator carries mass s - 1 here, so it is advanced without
        // the unit-mass drift check.
        k_eta.apply(acc, scratch);
        acc.swap(scratch);
        for (std::size_t y = 0; y < n; ++y) acc[y] += forward[y];
    }
    const double inv_t = 1.0 / static_cast<double>(t);
    for (double& p : acc) p *= inv_t;
    const double total = std::accumulate(acc.begin(), acc.end(), 0.0);
    if (std::abs(total - 1.0) > kMassTolerance) {
        for (double& p : acc) p /= total;
        g_renormalizations.fetch_add(1, std::memory_order_relaxed);
    }
    return Distribution(std::move(acc));
}

Trajectory sample_trajectory(Vertex x, std::size_t s, std::size_t t, const Digraph& g_sigma,
                             const Digraph& g_eta, RngStream& rng) {
    if (s > t) throw Error(ErrorCode::BadRange, "sample_trajectory requires s <= t");
    if (g_sigma.n() != g_eta.n()) throw Error(ErrorCode::LengthMismatch, "digraphs differ in size");
    check_vertex(x, g_sigma.n());
    Trajectory traj;
    traj.switch_time = s;
    traj.states.reserve(t + 1);
    traj.states.push_back(x);
    Vertex cur = x;
    for (std::size_t step = 0; step < t; ++step) {
        const auto edges = step < s ? g_sigma.out_edges(cur) : g_eta.out_edges(cur);
        cur = edges[rng.below(edges.size())];
        traj.states.push_back(cur);
    }
    return traj;
}

double path_log_weight(const Trajectory& traj, const TransitionKernel& k_sigma,
                       const TransitionKernel& k_eta) {
    const std::size_t len = traj.length();
    const std::size_t s = traj.switch_time.value_or(len);
    double log_weight = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const auto& k = i < s ? k_sigma : k_eta;
        const Vertex from = traj.states[i];
        const Vertex to = traj.states[i + 1];
        if (from >= k.n() || to >= k.n()) throw Error(ErrorCode::BadRange, "trajectory vertex out of range");
        const double p = k.at(from, to);
        if (p == 0.0) {
            throw Error(ErrorCode::ImpossibleStep,
                        "step " + std::to_string(i) + " " + std::to_string(from) + "->" + std::to_string(to));
        }
        log_weight += std::log(p);
    }
    return log_weight;
}

}  // namespace mixlab
