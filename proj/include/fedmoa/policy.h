#ifndef FEDMOA_POLICY_H
#define FEDMOA_POLICY_H

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "fedmoa/envs.h"
#include "fedmoa/numeric.h"

namespace fedmoa {

struct PolicyShape {
    int feature_dim = 8;
    int vocab_size = 16;
    int hidden_dim = 32;

    int input_dim() const { return feature_dim + vocab_size; }
    Eigen::Index parameter_count() const;
    bool operator==(const PolicyShape&) const = default;
};

// One-hidden-layer autoregressive softmax policy.
//
// Step input is [one-hot prompt feature | one-hot previous token]; the first
// step leaves the previous-token block empty (BOS).
//   hidden = tanh(w_in * x + b_in),  logits = w_out * hidden + b_out
struct PolicyParams {
    Eigen::MatrixXd w_in;   // hidden x input
    Eigen::VectorXd b_in;   // hidden
    Eigen::MatrixXd w_out;  // vocab x hidden
    Eigen::VectorXd b_out;  // vocab

    PolicyParams() = default;
    explicit PolicyParams(const PolicyShape& shape);  // all zeros

    PolicyShape shape() const;
    bool all_finite() const;
    bool same_shape(const PolicyParams& other) const;

    PolicyParams& operator+=(const PolicyParams& rhs);
    PolicyParams& operator*=(double s);
};

// Entries of both weight matrices uniform(-0.1, 0.1), biases zero.
PolicyParams init_policy(const PolicyShape& shape, RngStream& rng);

// Flat row-major layout: w_in, b_in, w_out, b_out.
Eigen::VectorXd flatten(const PolicyParams& p);
PolicyParams unflatten(const PolicyShape& shape, const Eigen::Ref<const Eigen::VectorXd>& flat);

// Mean gradient of a loss with respect to the post-activation hidden layer.
using HiddenGradient = Eigen::VectorXd;

// A sampled completion plus everything backprop needs.
struct Rollout {
    Completion completion;
    int feature = 0;               // prompt feature id used at every step
    Eigen::VectorXd log_probs;     // log pi(a_t | s_t), per step
    Eigen::MatrixXd hidden;        // hidden x steps
    Eigen::MatrixXd probs;         // vocab x steps
    // sum_t (probs_t - onehot(a_t)); d(-sum_t log pi)/d logits summed over steps.
    Eigen::VectorXd score_residual;

    int steps() const { return static_cast<int>(completion.tokens.size()); }
};

// Forward pass for one step. prev < 0 means BOS.
void policy_step(const PolicyParams& params, int feature, Token prev, Eigen::VectorXd& hidden,
                 Eigen::VectorXd& logits);

Rollout sample(const PolicyParams& params, const TaskSpec& task, int prompt_id, RngStream& rng);

// Argmax decoding; exact ties are broken uniformly with tie_rng.
Completion greedy(const PolicyParams& params, const TaskSpec& task, int prompt_id, RngStream& tie_rng);

// sum_t log pi(tokens_t | prefix) recomputed from scratch.
double sequence_log_prob(const PolicyParams& params, int feature, std::span<const Token> tokens);

struct SurrogateGradient {
    PolicyParams param_grad;
    HiddenGradient hidden_grad;
};

// Gradient of L = -(1/N) sum_i A_i sum_t log pi(a_t | s_t) over the N rollouts.
//
// hidden_grad is the mean over all (rollout, step) pairs of the gradient of
// the per-pair term -A_i log pi(a_t | s_t) with respect to that pair's hidden
// activation.
SurrogateGradient surrogate_gradient(const PolicyParams& params, std::span<const Rollout> rollouts,
                                     std::span<const double> advantages);

// hidden_grad of surrogate_gradient without the parameter backprop.
HiddenGradient hidden_gradient(const PolicyParams& params, std::span<const Rollout> rollouts,
                               std::span<const double> advantages);

}  // namespace fedmoa

#endif  // FEDMOA_POLICY_H
