#include "mixlab/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mixlab/parallel.hpp"

namespace mixlab {

std::size_t default_max_iters(const DegreeSequence& seq) {
    const double t_ent = entropic_scale(seq).entropic_time;
    return 200 * static_cast<std::size_t>(std::max(1.0, std::ceil(t_ent)));
}

NotConverged::NotConverged(std::vector<double> best, double residual, std::size_t iterations,
                           const std::string& detail)
    : Error(ErrorCode::NotConverged, "residual " + std::to_string(residual) + " after " +
                                         std::to_string(iterations) + " iterations" +
                                         (detail.empty() ? "" : " (" + detail + ")")),
      best_(std::move(best)),
      residual_(residual),
      iterations_(iterations) {}

namespace {

double quarter_l1(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return 0.25 * sum;
}

std::vector<double> cesaro(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = 0.5 * (a[i] + b[i]);
    return c;
}

}  // namespace

StationaryResult stationary_distribution(const TransitionKernel& k, double tol, std::size_t max_iters,
                                         const std::optional<Distribution>& start) {
    const std::size_t n = k.n();
    if (start && start->size() != n) throw Error(ErrorCode::LengthMismatch, "start length differs from kernel");
    if (!(tol > 0.0)) throw Error(ErrorCode::BadValue, "tolerance must be positive");

    // v0, v1, v2 hold three consecutive iterates.
    std::vector<double> v0 = start ? start->vector() : Distribution::uniform(n).vector();
    std::vector<double> v1(n), v2(n), scratch(n);
    v1 = v0;
    propagate_in_place(v1, scratch, k, 1);
    v2 = v1;
    propagate_in_place(v2, scratch, k, 1);

    double best_residual = quarter_l1(v2, v0);
    std::vector<double> best = cesaro(v0, v1);
    std::size_t iter = 0;
    for (; iter < max_iters; ++iter) {
        const double residual = quarter_l1(v2, v0);
        if (residual < best_residual) {
            best_residual = residual;
            best = cesaro(v0, v1);
        }
        if (residual <= tol) {
            auto candidate = cesaro(v0, v1);
            std::vector<double> image(n);
            k.apply(candidate, image);
            const double verified = tv_distance(image, candidate);
            if (verified <= tol) {
                const double total = std::accumulate(candidate.begin(), candidate.end(), 0.0);
                for (double& p : candidate) p /= total;
                return {Distribution(std::move(candidate)), iter, verified};
            }
        }
        std::swap(v0, v1);
        std::swap(v1, v2);
        v2 = v1;
        propagate_in_place(v2, scratch, k, 1);
    }
    throw NotConverged(std::move(best), best_residual, iter);
}

StationaryResult stationary_for(const Digraph& g, const TransitionKernel& k, double tol,
                                std::size_t max_iters) {
    try {
        return stationary_distribution(k, tol, max_iters, mu_in(g.sequence()));
    } catch (const NotConverged& e) {
        const auto scc = strongly_connected_components(g);
        throw NotConverged(e.best(), e.residual(), e.iterations(),
                           std::to_string(scc.count) + " SCCs, " + std::to_string(scc.closed_count) +
                               " closed");
    }
}

WidespreadStats widespread_stats(const Distribution& pi) {
    const auto probs = pi.probs();
    double sq = 0.0;
    double mx = 0.0;
    for (double p : probs) {
        sq += p * p;
        mx = std::max(mx, p);
    }
    const auto n = static_cast<double>(probs.size());
    return {n * sq, n * mx};
}

QEstimate estimate_q(const DegreeSequence& seq, std::size_t replicates, const RngStream& rng,
                     double tol, std::size_t max_iters, unsigned threads) {
    if (replicates < 2) throw Error(ErrorCode::BadValue, "estimate_q needs at least 2 replicates");
    auto shared = std::make_shared<const DegreeSequence>(seq);
    const auto mu = mu_in(seq);
    QEstimate out;
    out.replicates = parallel_map(replicates, threads, [&](std::size_t i) {
        const auto stream = rng.child(i);
        QReplicate rep;
        rep.replicate = i;
        rep.seed = stream.key();
        const auto g = sample_digraph(shared, stream);
        const auto k = kernel_from_digraph(g);
        try {
            const auto st = stationary_for(g, k, tol, max_iters);
            rep.converged = true;
            rep.iterations = st.iterations;
            rep.residual = st.residual;
            rep.stats = widespread_stats(st.pi);
            rep.tv_to_mu_in = tv_distance(st.pi, mu);
        } catch (const NotConverged& e) {
            rep.iterations = e.iterations();
            rep.residual = e.residual();
        }
        return rep;
    });

    std::vector<double> values;
    for (const auto& rep : out.replicates) {
        if (rep.converged) {
            values.push_back(rep.tv_to_mu_in);
        } else {
            ++out.failed;
        }
    }
    if (values.empty()) throw Error(ErrorCode::AllReplicatesFailed, "no stationary solve converged");
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out.q_hat = mean;
    out.std_err = values.size() > 1
                      ? std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()))
                      : 0.0;
    return out;
}

}  // namespace mixlab
