// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library's numeric kernels.
#ifndef FEDMOA_TESTS_ORACLES_H
#define FEDMOA_TESTS_ORACLES_H

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "fedmoa/policy.h"

namespace oracle {

inline double sq_dist(const Eigen::VectorXd& x, const Eigen::VectorXd& v) { return (x - v).squaredNorm(); }

// Exhaustive grid minimizer of ||x - v||^2 over the 2- or 3-dim simplex at
// resolution `step`. The 3-dim case scans a 1e-2 grid first and then the full
// `step` grid inside a +-0.03 window around the coarse winner (the objective is
// convex, so the minimizer lies in that window).
inline Eigen::VectorXd grid_simplex_min(const Eigen::VectorXd& v, double step = 1e-4) {
    const long n = std::lround(1.0 / step);
    Eigen::VectorXd best(v.size());
    double best_f = std::numeric_limits<double>::infinity();
    if (v.size() == 2) {
        for (long i = 0; i <= n; ++i) {
            Eigen::VectorXd x(2);
            x << i * step, 1.0 - i * step;
            const double f = sq_dist(x, v);
            if (f < best_f) { best_f = f; best = x; }
        }
        return best;
    }
    if (v.size() != 3) throw std::invalid_argument("grid oracle supports dims 2 and 3");
    auto scan = [&](long lo0, long hi0, long lo1, long hi1, double h, long cells) {
        for (long i = std::max(0L, lo0); i <= std::min(cells, hi0); ++i) {
            for (long j = std::max(0L, lo1); j <= std::min(cells - i, hi1); ++j) {
                Eigen::VectorXd x(3);
                x << i * h, j * h, 1.0 - i * h - j * h;
                if (x(2) < 0.0) x(2) = 0.0;
                const double f = sq_dist(x, v);
                if (f < best_f) { best_f = f; best = x; }
            }
        }
    };
    scan(0, 100, 0, 100, 1e-2, 100);
    const long ci = std::lround(best(0) / step), cj = std::lround(best(1) / step);
    const long w = std::lround(0.03 / step);
    best_f = std::numeric_limits<double>::infinity();
    scan(ci - w, ci + w, cj - w, cj + w, step, n);
    return best;
}

// Best of `samples` uniform simplex draws, then pairwise mass exchange
// (exact line search on each coordinate pair) until no pair improves.
inline Eigen::VectorXd sampled_simplex_min(const Eigen::VectorXd& v, int samples, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::exponential_distribution<double> expo(1.0);
    const Eigen::Index k = v.size();
    Eigen::VectorXd best(k), x(k);
    double best_f = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        for (Eigen::Index i = 0; i < k; ++i) x(i) = expo(gen);
        x /= x.sum();
        const double f = sq_dist(x, v);
        if (f < best_f) { best_f = f; best = x; }
    }
    for (int sweep = 0; sweep < 100000; ++sweep) {
        double moved = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < k; ++j) {
                if (i == j) continue;
                double t = 0.5 * ((v(i) - best(i)) - (v(j) - best(j)));
                t = std::clamp(t, -best(i), best(j));
                best(i) += t;
                best(j) -= t;
                moved = std::max(moved, std::abs(t));
            }
        }
        if (moved < 1e-15) break;
    }
    return best;
}

inline Eigen::VectorXd nearest_simplex_point(const Eigen::VectorXd& v, std::uint64_t seed = 7) {
    return v.size() <= 3 ? grid_simplex_min(v) : sampled_simplex_min(v, 200000, seed);
}

// exp-normalize in long double.
inline std::vector<long double> softmax_ld(const std::vector<long double>& s) {
    std::vector<long double> e(s.size());
    long double z = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        e[i] = std::exp(s[i]);
        z += e[i];
    }
    for (auto& x : e) x /= z;
    return e;
}

// log pi(tokens | feature) by an explicit loop over the network definition.
inline double log_prob(const fedmoa::PolicyParams& p, int feature, std::span<const int> tokens) {
    const long H = p.b_in.size(), V = p.b_out.size();
    const long F = p.w_in.cols() - V;
    double total = 0.0;
    int prev = -1;
    for (int a : tokens) {
        std::vector<double> h(static_cast<std::size_t>(H));
        for (long r = 0; r < H; ++r) {
            double z = p.b_in(r) + p.w_in(r, feature);
            if (prev >= 0) z += p.w_in(r, F + prev);
            h[static_cast<std::size_t>(r)] = std::tanh(z);
        }
        std::vector<double> logit(static_cast<std::size_t>(V));
        double m = -std::numeric_limits<double>::infinity();
        for (long o = 0; o < V; ++o) {
            double z = p.b_out(o);
            for (long r = 0; r < H; ++r) z += p.w_out(o, r) * h[static_cast<std::size_t>(r)];
            logit[static_cast<std::size_t>(o)] = z;
            m = std::max(m, z);
        }
        double s = 0.0;
        for (double z : logit) s += std::exp(z - m);
        total += logit[static_cast<std::size_t>(a)] - m - std::log(s);
        prev = a;
    }
    return total;
}

// L = -(1/N) sum_i A_i sum_t log pi(a_t | s_t).
inline double surrogate_loss(const fedmoa::PolicyParams& p, std::span<const fedmoa::Rollout> rollouts,
                             std::span<const double> adv) {
    double s = 0.0;
    for (std::size_t i = 0; i < rollouts.size(); ++i) {
        s += adv[i] * log_prob(p, rollouts[i].feature, rollouts[i].completion.tokens);
    }
    return -s / static_cast<double>(rollouts.size());
}

}  // namespace oracle

#endif  // FEDMOA_TESTS_ORACLES_H
