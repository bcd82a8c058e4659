#include <cmath>
#include <functional>
#include <memory>

#include <doctest.h>

#include "../support/check.hpp"
#include "../support/oracles.hpp"
#include "mixlab/experiments.hpp"
#include "mixlab/walk.hpp"

using namespace mixlab;

namespace {

std::shared_ptr<const DegreeSequence> small_dcm() {
    return std::make_shared<const DegreeSequence>(
        validate_degrees(ModelKind::DCM, {2, 3, 2, 3, 2, 3}, std::vector<std::uint32_t>{3, 2, 2, 3, 3, 2}));
}

std::shared_ptr<const DegreeSequence> small_ocm(std::size_t n) {
    std::vector<std::uint32_t> out(n);
    for (std::size_t x = 0; x < n; ++x) out[x] = 2 + static_cast<std::uint32_t>(x % 2);
    return std::make_shared<const DegreeSequence>(validate_degrees(ModelKind::OCM, out));
}

}  // namespace

TEST_CASE("kernel_from_digraph examples") {
    auto one = std::make_shared<const DegreeSequence>(
        validate_degrees(ModelKind::DCM, {2}, std::vector<std::uint32_t>{2}));
    const auto k1 = kernel_from_digraph(sample_dcm(one, RngStream(0, 0)));
    CHECK(k1.n() == 1);
    CHECK(k1.at(0, 0) == 1.0);

    auto two = std::make_shared<const DegreeSequence>(validate_degrees(ModelKind::OCM, {2, 2}));
    const auto merged = kernel_from_digraph(Digraph(two, {1, 1, 0, 1}, 0, 0));
    CHECK(merged.row_targets(0).size() == 1);
    CHECK(merged.at(0, 1) == 1.0);
    CHECK(merged.at(1, 0) == 0.5);
    CHECK(merged.at(1, 1) == 0.5);
}

TEST_CASE("kernel rows are stochastic with sorted positive entries") {
    const auto seq = std::make_shared<const DegreeSequence>(
        validate_degrees(ModelKind::DCM, std::vector<std::uint32_t>(50, 3), std::vector<std::uint32_t>(50, 3)));
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto k = kernel_from_digraph(sample_dcm(seq, RngStream(s, 0)));
        for (Vertex x = 0; x < k.n(); ++x) {
            const auto t = k.row_targets(x);
            const auto p = k.row_probs(x);
            CHECK(std::is_sorted(t.begin(), t.end()));
            CHECK(std::adjacent_find(t.begin(), t.end()) == t.end());
            CHECK(t.size() <= 3);
            double sum = 0.0;
            for (double v : p) {
                CHECK(v > 0.0);
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("from_rows validation") {
    using E = TransitionKernel::Entry;
    CHECK_NOTHROW(TransitionKernel::from_rows({{E{0, 0.5}, E{1, 0.5}}, {E{0, 1.0}}}));
    CHECK_ERROR_CODE(TransitionKernel::from_rows({{E{0, 0.5}, E{1, 0.4}}, {E{0, 1.0}}}), ErrorCode::BadValue);
    CHECK_ERROR_CODE(TransitionKernel::from_rows({{E{0, 0.5}, E{2, 0.5}}, {E{0, 1.0}}}), ErrorCode::BadRange);
}

TEST_CASE("propagate examples and dense oracle") {
    const auto g = sample_ocm(small_ocm(5), RngStream(3, 0));
    const auto k = kernel_from_digraph(g);
    const auto p = oracle::dense(g);
    const auto start = Distribution::point_mass(5, 2);
    CHECK(propagate(start, k, 0).vector() == start.vector());
    const auto one = propagate(start, k, 1);
    for (Vertex y = 0; y < 5; ++y) CHECK(one[y] == k.at(2, y));

    RngStream rng(4, 4);
    std::vector<double> v(5);
    double total = 0.0;
    for (auto& x : v) total += (x = rng.uniform());
    for (auto& x : v) x /= total;
    const Distribution d(v);
    oracle::Row row(5);
    for (int i = 0; i < 5; ++i) row(i) = v[static_cast<std::size_t>(i)];
    const oracle::Row expected = row * oracle::power(p, 3);
    CHECK(oracle::max_abs(expected, propagate(d, k, 3).probs()) <= 1e-12);
}

TEST_CASE("propagate conserves mass over long horizons") {
    const auto seq = std::make_shared<const DegreeSequence>(
        validate_degrees(ModelKind::DCM, std::vector<std::uint32_t>(1000, 3), std::vector<std::uint32_t>(1000, 3)));
    const auto k = kernel_from_digraph(sample_dcm(seq, RngStream(1, 1)));
    const auto steps = static_cast<std::size_t>(10.0 * entropic_scale(*seq).entropic_time);
    std::vector<double> cur(1000, 0.0), scratch(1000);
    cur[17] = 1.0;
    for (std::size_t s = 0; s < steps; ++s) {
        propagate_in_place(cur, scratch, k, 1);
        double total = 0.0;
        for (double v : cur) {
            CHECK(v >= 0.0);
            total += v;
        }
        CHECK(std::abs(total - 1.0) <= 1e-9);
    }
}

TEST_CASE("double_row matches dense products and composes") {
    const auto sigma_g = sample_ocm(small_ocm(5), RngStream(10, 0));
    const auto eta_g = sample_ocm(small_ocm(5), RngStream(10, 1));
    const auto ks = kernel_from_digraph(sigma_g);
    const auto ke = kernel_from_digraph(eta_g);
    const auto ps = oracle::dense(sigma_g);
    const auto pe = oracle::dense(eta_g);

    for (Vertex x = 0; x < 5; ++x) {
        const oracle::Row expected = oracle::point(5, x) * oracle::power(ps, 2) * oracle::power(pe, 2);
        CHECK(oracle::max_abs(expected, double_row(x, 2, 4, ks, ke).probs()) <= 1e-12);
        CHECK(double_row(x, 0, 4, ks, ke).vector() == propagate(Distribution::point_mass(5, x), ke, 4).vector());
        CHECK(double_row(x, 4, 4, ks, ke).vector() == propagate(Distribution::point_mass(5, x), ks, 4).vector());
        for (std::size_t s = 0; s <= 6; ++s) {
            for (std::size_t mid = s; mid <= 6; ++mid) {
                const auto composed = propagate(double_row(x, s, mid, ks, ke), ke, 6 - mid);
                const auto direct = double_row(x, s, 6, ks, ke);
                for (Vertex y = 0; y < 5; ++y) CHECK(std::abs(composed[y] - direct[y]) <= 1e-12);
            }
        }
    }
    CHECK_ERROR_CODE(double_row(0, 5, 4, ks, ke), ErrorCode::BadRange);
}

TEST_CASE("bhat_row examples and naive oracle") {
    const auto seq = small_dcm();
    const auto sigma_g = sample_dcm(seq, RngStream(21, 0));
    const auto eta_g = sample_dcm(seq, RngStream(21, 1));
    const auto ks = kernel_from_digraph(sigma_g);
    const auto ke = kernel_from_digraph(eta_g);
    const auto ps = oracle::dense(sigma_g);
    const auto pe = oracle::dense(eta_g);

    for (Vertex x = 0; x < 6; ++x) {
        CHECK(bhat_row(x, 1, ks, ke).vector() == Distribution::point_mass(6, x).vector());
        const auto two = bhat_row(x, 2, ks, ke);
        for (Vertex y = 0; y < 6; ++y) CHECK(two[y] == doctest::Approx(0.5 * (ke.at(x, y) + ks.at(x, y))));
        for (std::size_t t : {3u, 7u, 12u}) {
            const auto fast = bhat_row(x, t, ks, ke);
            CHECK(oracle::max_abs(oracle::naive_bhat(ps, pe, x, t), fast.probs()) <= 1e-12);
            double total = 0.0;
            for (double v : fast.probs()) total += v;
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }
    }
    CHECK_ERROR_CODE(bhat_row(0, 0, ks, ke), ErrorCode::BadRange);
}

TEST_CASE("sample_trajectory examples") {
    const auto seq = small_dcm();
    const auto g = sample_dcm(seq, RngStream(2, 2));
    RngStream rng(5, 5);
    const auto zero = sample_trajectory(3, 0, 0, g, g, rng);
    CHECK(zero.states == std::vector<Vertex>{3});
    CHECK(zero.length() == 0);

    auto all_zero = std::make_shared<const DegreeSequence>(validate_degrees(ModelKind::OCM, {2, 2, 2}));
    const Digraph sink(all_zero, {0, 0, 0, 0, 0, 0}, 0, 0);
    const auto walk = sample_trajectory(2, 1, 5, sink, sink, rng);
    CHECK(walk.states.size() == 6);
    for (std::size_t i = 1; i < walk.states.size(); ++i) CHECK(walk.states[i] == 0);

    const auto h = sample_dcm(seq, RngStream(2, 3));
    for (int rep = 0; rep < 200; ++rep) {
        const auto tr = sample_trajectory(1, 2, 6, g, h, rng);
        REQUIRE(tr.switch_time.has_value());
        for (std::size_t i = 0; i < tr.length(); ++i) {
            const auto& env = i < *tr.switch_time ? g : h;
            const auto e = env.out_edges(tr.states[i]);
            CHECK(std::find(e.begin(), e.end(), tr.states[i + 1]) != e.end());
        }
    }
}

TEST_CASE("trajectory law matches double_row") {
    const auto seq = small_dcm();
    const auto sigma_g = sample_dcm(seq, RngStream(31, 0));
    const auto eta_g = sample_dcm(seq, RngStream(31, 1));
    const auto exact = double_row(0, 1, 3, kernel_from_digraph(sigma_g), kernel_from_digraph(eta_g));
    const std::size_t samples = 100000;
    std::vector<double> counts(6, 0.0);
    RngStream rng(32, 0);
    for (std::size_t i = 0; i < samples; ++i) counts[sample_trajectory(0, 1, 3, sigma_g, eta_g, rng).states.back()] += 1;
    for (Vertex y = 0; y < 6; ++y) {
        const double p = exact[y];
        const double sigma = std::sqrt(p * (1 - p) / samples);
        CHECK(std::abs(counts[y] / samples - p) <= 3.0 * sigma + 1e-12);
    }
}

TEST_CASE("path_log_weight examples") {
    auto reg = std::make_shared<const DegreeSequence>(validate_degrees(ModelKind::OCM, {3, 3, 3, 3}));
    const auto g = sample_ocm(reg, RngStream(4, 0));
    const auto k = kernel_from_digraph(g);
    RngStream rng(4, 1);
    const auto tr = sample_trajectory(0, 0, 7, g, g, rng);
    CHECK(path_log_weight(tr, k, k) == doctest::Approx(-7.0 * std::log(3.0)).epsilon(1e-12));
    CHECK(path_log_weight(Trajectory{{2}, 0}, k, k) == 0.0);

    auto mixed = std::make_shared<const DegreeSequence>(validate_degrees(ModelKind::OCM, {2, 3, 2, 4}));
    const Digraph h(mixed, {1, 1, 0, 2, 3, 3, 0, 0, 1, 2, 3}, 0, 0);
    const auto kh = kernel_from_digraph(h);
    const Trajectory hand{{0, 1, 3, 2}, 3};
    CHECK(path_log_weight(hand, kh, kh) == doctest::Approx(std::log(1.0 * (1.0 / 3.0) * 0.25)).epsilon(1e-12));
    const Trajectory impossible{{0, 2}, 1};
    CHECK_ERROR_CODE(path_log_weight(impossible, kh, kh), ErrorCode::ImpossibleStep);
}

TEST_CASE("path weights equal the enumerated trajectory probabilities") {
    const auto seq = small_dcm();
    const auto sigma_g = sample_dcm(seq, RngStream(41, 0));
    const auto eta_g = sample_dcm(seq, RngStream(41, 1));
    const auto ks = kernel_from_digraph(sigma_g);
    const auto ke = kernel_from_digraph(eta_g);
    const auto ps = oracle::dense(sigma_g);
    const auto pe = oracle::dense(eta_g);
    const std::size_t t = 5, s = 2;

    for (Vertex x = 0; x < 6; ++x) {
        double mass = 0.0;
        std::vector<Vertex> path{x};
        std::function<void(double)> walk = [&](double prob) {
            if (path.size() == t + 1) {
                if (prob == 0.0) return;
                const Trajectory tr{path, s};
                CHECK(std::exp(path_log_weight(tr, ks, ke)) == doctest::Approx(prob).epsilon(1e-12));
                mass += prob;
                return;
            }
            const std::size_t step = path.size() - 1;
            const auto& p = step < s ? ps : pe;
            for (Vertex y = 0; y < 6; ++y) {
                path.push_back(y);
                walk(prob * p(path[path.size() - 2], y));
                path.pop_back();
            }
        };
        walk(1.0);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("path-weight rate agrees with exhaustive enumeration at n=6") {
    const auto seq = small_dcm();
    const std::size_t t = 4, s = 1;
    const RngStream rng(51, 0);
    const auto lln = path_weight_lln(*seq, s, t, 40000, rng, 0.1);
    const auto ps = oracle::dense(sample_digraph(seq, rng.child(1)));
    const auto pe = oracle::dense(sample_digraph(seq, rng.child(2)));

    // E[-log w] / t under a uniform start, by enumerating every path.
    double expected = 0.0, second = 0.0;
    std::vector<Vertex> path;
    std::function<void(double, double)> walk = [&](double prob, double logw) {
        if (path.size() == t + 1) {
            expected += prob * (-logw / t);
            second += prob * (logw / t) * (logw / t);
            return;
        }
        const auto& p = path.size() - 1 < s ? ps : pe;
        for (Vertex y = 0; y < 6; ++y) {
            const double q = p(path.back(), y);
            if (q == 0.0) continue;
            path.push_back(y);
            walk(prob * q, logw + std::log(q));
            path.pop_back();
        }
    };
    for (Vertex x = 0; x < 6; ++x) {
        path = {x};
        walk(1.0 / 6.0, 0.0);
    }
    const double sd = std::sqrt(second - expected * expected);
    CHECK(std::abs(lln.mean_rate - expected) <= 4.0 * sd / std::sqrt(40000.0));
    CHECK(lln.entropy == doctest::Approx(entropic_scale(*seq).entropy));
}
