#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mixlab/core.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/walk.hpp"

namespace mixlab {

inline constexpr double kDefaultStationaryTol = 1e-10;

/// Default iteration cap: 200 * ceil(T_ent).
std::size_t default_max_iters(const DegreeSequence& seq);

struct StationaryResult {
    Distribution pi;
    std::size_t iterations = 0;
    /// ||pi P - pi||_TV, recomputed after convergence.
    double residual = 0.0;
};

/// Raised when power iteration does not reach the tolerance. Carries the best
/// Cesaro iterate seen and its residual.
class NotConverged : public Error {
public:
    NotConverged(std::vector<double> best, double residual, std::size_t iterations,
                 const std::string& detail = {});

    [[nodiscard]] const std::vector<double>& best() const noexcept { return best_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }
    [[nodiscard]] std::size_t iterations() const noexcept { return iterations_; }

private:
    std::vector<double> best_;
    double residual_;
    std::size_t iterations_;
};

/// Power iteration v <- v P from `start` (uniform when absent). The candidate
/// at iteration k is the Cesaro pair average (v_k + v_{k+1}) / 2, whose
/// residual ||c P - c||_TV equals (1/4) sum |v_{k+2} - v_k|.
StationaryResult stationary_distribution(const TransitionKernel& k, double tol, std::size_t max_iters,
                                         const std::optional<Distribution>& start = std::nullopt);

/// Stationary law of a sampled digraph started from mu_in. When power
/// iteration fails, the thrown NotConverged names the number of closed
/// strongly connected classes.
StationaryResult stationary_for(const Digraph& g, const TransitionKernel& k, double tol,
                                std::size_t max_iters);

struct WidespreadStats {
    double l2_stat = 0.0;  ///< n * sum pi(z)^2
    double max_stat = 0.0; ///< n * max pi(z)
};

WidespreadStats widespread_stats(const Distribution& pi);

struct QReplicate {
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    std::size_t iterations = 0;
    double residual = 0.0;
    WidespreadStats stats;
    double tv_to_mu_in = 0.0;
};

struct QEstimate {
    double q_hat = 0.0;
    double std_err = 0.0;
    std::size_t failed = 0;
    std::vector<QReplicate> replicates;
};

/// Mean and standard error of ||pi_sigma - mu_in||_TV over independent
/// configurations. Replicate i draws from rng.child(i). Failed solves are
/// skipped and counted; throws AllReplicatesFailed when none succeed.
QEstimate estimate_q(const DegreeSequence& seq, std::size_t replicates, const RngStream& rng,
                     double tol, std::size_t max_iters, unsigned threads = 1);

}  // namespace mixlab
