#ifndef FEDMOA_NUMERIC_H
#define FEDMOA_NUMERIC_H

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string_view>
#include <vector>

#include "fedmoa/errors.h"

namespace fedmoa {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Pre-projection weights, aggregation scores and similar small real vectors.
using WeightVector = Vec<double>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& v) {
    return v.allFinite();
}

// Euclidean projection onto {x : x >= 0, sum(x) = 1}.
//
// Sort-based threshold method: sort descending into u, find the largest
// rho with u_rho - (sum_{i<=rho} u_i - 1) / rho > 0, then shift every entry
// by tau = (sum_{i<=rho} u_i - 1) / rho and clip at zero.
template <typename Derived>
Vec<typename Derived::Scalar> project_to_simplex(const Eigen::MatrixBase<Derived>& v) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = v.size();
    if (n == 0) {
        throw InvalidInput("project_to_simplex: empty vector");
    }
    if (!v.allFinite()) {
        throw InvalidInput("project_to_simplex: non-finite entry");
    }

    const Vec<Scalar> x = v;
    std::vector<Scalar> u(x.data(), x.data() + n);
    std::sort(u.begin(), u.end(), std::greater<Scalar>());

    Scalar cumsum = 0;
    Scalar tau = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumsum += u[j];
        const Scalar candidate = (cumsum - Scalar(1)) / Scalar(j + 1);
        if (u[j] - candidate > Scalar(0)) {
            tau = candidate;
        }
    }

    Vec<Scalar> out = (x.array() - tau).cwiseMax(Scalar(0)).matrix();
    // Clipping can leave the sum a few ulps away from 1; fold the residual
    // into the largest entry so the simplex invariant holds tightly.
    const Scalar residual = Scalar(1) - out.sum();
    Eigen::Index imax = 0;
    out.maxCoeff(&imax);
    out(imax) += residual;
    return out;
}

// Exp-normalize with max subtraction.
template <typename Derived>
Vec<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& scores) {
    using Scalar = typename Derived::Scalar;
    if (scores.size() == 0) {
        throw InvalidInput("softmax: empty vector");
    }
    if (!scores.allFinite()) {
        throw InvalidInput("softmax: non-finite score");
    }
    const Scalar m = scores.maxCoeff();
    Vec<Scalar> e = (scores.array() - m).exp().matrix();
    return e / e.sum();
}

// Half-cosine decay from lr0 at step 0 to 0 at total_steps.
double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0);

// splitmix64 finalizer; used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a; platform-independent, unlike std::hash.
std::uint64_t hash_string(std::string_view s);

// Stream id for (client, round); stable across platforms.
std::uint64_t stream_id_for(std::uint64_t client_id, std::uint64_t round);

// Deterministic pseudo-random stream keyed by (seed, stream_id).
//
// Uses mt19937_64 (output sequence fixed by the standard) and converts raw
// words to doubles itself, so draws do not depend on the standard library's
// distribution implementations.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() { return engine_(); }
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n); n >= 1. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n);
    // Index drawn from a probability vector (assumed normalized).
    Eigen::Index categorical(const Eigen::Ref<const Vec<double>>& probs);

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

// Fixed left-to-right dot product (Eigen's vectorized reductions reorder sums).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar ordered_dot(const Eigen::MatrixBase<DerivedA>& a,
                                      const Eigen::MatrixBase<DerivedB>& b) {
    if (a.size() != b.size()) {
        throw InvalidInput("ordered_dot: dimension mismatch");
    }
    typename DerivedA::Scalar acc = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        acc += a(i) * b(i);
    }
    return acc;
}

}  // namespace fedmoa

#endif  // FEDMOA_NUMERIC_H
