#include "fedmoa/policy.h"

#include <cmath>
#include <string>

namespace fedmoa {

Eigen::Index PolicyShape::parameter_count() const {
    const Eigen::Index h = hidden_dim;
    return h * input_dim() + h + Eigen::Index(vocab_size) * h + vocab_size;
}

PolicyParams::PolicyParams(const PolicyShape& shape)
    : w_in(Eigen::MatrixXd::Zero(shape.hidden_dim, shape.input_dim())),
      b_in(Eigen::VectorXd::Zero(shape.hidden_dim)),
      w_out(Eigen::MatrixXd::Zero(shape.vocab_size, shape.hidden_dim)),
      b_out(Eigen::VectorXd::Zero(shape.vocab_size)) {}

PolicyShape PolicyParams::shape() const {
    PolicyShape s;
    s.hidden_dim = static_cast<int>(w_in.rows());
    s.vocab_size = static_cast<int>(w_out.rows());
    s.feature_dim = static_cast<int>(w_in.cols()) - s.vocab_size;
    return s;
}

bool PolicyParams::all_finite() const {
    return w_in.allFinite() && b_in.allFinite() && w_out.allFinite() && b_out.allFinite();
}

bool PolicyParams::same_shape(const PolicyParams& o) const {
    return w_in.rows() == o.w_in.rows() && w_in.cols() == o.w_in.cols() &&
           b_in.size() == o.b_in.size() && w_out.rows() == o.w_out.rows() &&
           w_out.cols() == o.w_out.cols() && b_out.size() == o.b_out.size();
}

PolicyParams& PolicyParams::operator+=(const PolicyParams& rhs) {
    if (!same_shape(rhs)) throw InvalidInput("PolicyParams: shape mismatch");
    w_in += rhs.w_in;
    b_in += rhs.b_in;
    w_out += rhs.w_out;
    b_out += rhs.b_out;
    return *this;
}

PolicyParams& PolicyParams::operator*=(double s) {
    w_in *= s;
    b_in *= s;
    w_out *= s;
    b_out *= s;
    return *this;
}

PolicyParams init_policy(const PolicyShape& shape, RngStream& rng) {
    if (shape.feature_dim < 1 || shape.vocab_size < 2 || shape.hidden_dim < 1) {
        throw InvalidInput("init_policy: degenerate shape");
    }
    PolicyParams p(shape);
    // Fill order is fixed (row-major) so the draw sequence is reproducible.
    for (Eigen::Index r = 0; r < p.w_in.rows(); ++r)
        for (Eigen::Index c = 0; c < p.w_in.cols(); ++c) p.w_in(r, c) = rng.uniform(-0.1, 0.1);
    for (Eigen::Index r = 0; r < p.w_out.rows(); ++r)
        for (Eigen::Index c = 0; c < p.w_out.cols(); ++c) p.w_out(r, c) = rng.uniform(-0.1, 0.1);
    return p;
}

Eigen::VectorXd flatten(const PolicyParams& p) {
    const PolicyShape s = p.shape();
    Eigen::VectorXd flat(s.parameter_count());
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < p.w_in.rows(); ++r)
        for (Eigen::Index c = 0; c < p.w_in.cols(); ++c) flat(k++) = p.w_in(r, c);
    for (Eigen::Index i = 0; i < p.b_in.size(); ++i) flat(k++) = p.b_in(i);
    for (Eigen::Index r = 0; r < p.w_out.rows(); ++r)
        for (Eigen::Index c = 0; c < p.w_out.cols(); ++c) flat(k++) = p.w_out(r, c);
    for (Eigen::Index i = 0; i < p.b_out.size(); ++i) flat(k++) = p.b_out(i);
    return flat;
}

PolicyParams unflatten(const PolicyShape& shape, const Eigen::Ref<const Eigen::VectorXd>& flat) {
    if (flat.size() != shape.parameter_count()) {
        throw InvalidInput("unflatten: expected " + std::to_string(shape.parameter_count()) +
                           " values, got " + std::to_string(flat.size()));
    }
    PolicyParams p(shape);
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < p.w_in.rows(); ++r)
        for (Eigen::Index c = 0; c < p.w_in.cols(); ++c) p.w_in(r, c) = flat(k++);
    for (Eigen::Index i = 0; i < p.b_in.size(); ++i) p.b_in(i) = flat(k++);
    for (Eigen::Index r = 0; r < p.w_out.rows(); ++r)
        for (Eigen::Index c = 0; c < p.w_out.cols(); ++c) p.w_out(r, c) = flat(k++);
    for (Eigen::Index i = 0; i < p.b_out.size(); ++i) p.b_out(i) = flat(k++);
    return p;
}

void policy_step(const PolicyParams& params, int feature, Token prev, Eigen::VectorXd& hidden,
                 Eigen::VectorXd& logits) {
    const Eigen::Index features = params.w_in.cols() - params.w_out.rows();
    hidden = params.b_in + params.w_in.col(feature);
    if (prev >= 0) {
        hidden += params.w_in.col(features + prev);
    }
    hidden = hidden.array().tanh().matrix();
    logits.noalias() = params.w_out * hidden;
    logits += params.b_out;
}

namespace {

void check_prompt(const PolicyParams& params, const TaskSpec& task, int prompt_id) {
    if (prompt_id < 0 || prompt_id >= task.prompt_count()) {
        throw InvalidInput("prompt_id " + std::to_string(prompt_id) + " out of range");
    }
    const PolicyShape s = params.shape();
    if (s.vocab_size != task.vocab_size || task.prompt_feature[static_cast<std::size_t>(prompt_id)] >= s.feature_dim) {
        throw InvalidInput("policy shape incompatible with task '" + task.name + "'");
    }
}

}  // namespace

Rollout sample(const PolicyParams& params, const TaskSpec& task, int prompt_id, RngStream& rng) {
    check_prompt(params, task, prompt_id);
    const int steps = task.max_len;
    const Eigen::Index hidden_dim = params.b_in.size();
    const Eigen::Index vocab = params.b_out.size();

    Rollout r;
    r.completion.prompt_id = prompt_id;
    r.completion.tokens.reserve(static_cast<std::size_t>(steps));
    r.feature = task.prompt_feature[static_cast<std::size_t>(prompt_id)];
    r.log_probs.resize(steps);
    r.hidden.resize(hidden_dim, steps);
    r.probs.resize(vocab, steps);
    r.score_residual = Eigen::VectorXd::Zero(vocab);

    Eigen::VectorXd h, logits;
    Token prev = -1;
    for (int t = 0; t < steps; ++t) {
        policy_step(params, r.feature, prev, h, logits);
        const Eigen::VectorXd p = softmax(logits);
        const auto a = static_cast<Token>(rng.categorical(p));
        r.hidden.col(t) = h;
        r.probs.col(t) = p;
        r.log_probs(t) = std::log(p(a));
        r.score_residual += p;
        r.score_residual(a) -= 1.0;
        r.completion.tokens.push_back(a);
        prev = a;
    }
    return r;
}

Completion greedy(const PolicyParams& params, const TaskSpec& task, int prompt_id, RngStream& tie_rng) {
    check_prompt(params, task, prompt_id);
    Completion c;
    c.prompt_id = prompt_id;
    const int feature = task.prompt_feature[static_cast<std::size_t>(prompt_id)];
    Eigen::VectorXd h, logits;
    Token prev = -1;
    std::vector<Token> best;
    for (int t = 0; t < task.max_len; ++t) {
        policy_step(params, feature, prev, h, logits);
        const double m = logits.maxCoeff();
        best.clear();
        for (Eigen::Index i = 0; i < logits.size(); ++i) {
            if (logits(i) == m) best.push_back(static_cast<Token>(i));
        }
        const Token a = best.size() == 1 ? best.front() : best[tie_rng.below(best.size())];
        c.tokens.push_back(a);
        prev = a;
    }
    return c;
}

double sequence_log_prob(const PolicyParams& params, int feature, std::span<const Token> tokens) {
    Eigen::VectorXd h, logits;
    Token prev = -1;
    double total = 0.0;
    for (Token a : tokens) {
        policy_step(params, feature, prev, h, logits);
        const double m = logits.maxCoeff();
        const double lse = m + std::log((logits.array() - m).exp().sum());
        total += logits(a) - lse;
        prev = a;
    }
    return total;
}

HiddenGradient hidden_gradient(const PolicyParams& params, std::span<const Rollout> rollouts,
                               std::span<const double> advantages) {
    if (rollouts.size() != advantages.size()) {
        throw InvalidInput("hidden_gradient: " + std::to_string(advantages.size()) +
                           " advantages for " + std::to_string(rollouts.size()) + " rollouts");
    }
    const Eigen::Index vocab = params.b_out.size();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(vocab);
    double pairs = 0.0;
    for (std::size_t i = 0; i < rollouts.size(); ++i) {
        pairs += rollouts[i].steps();
        if (advantages[i] != 0.0) {
            acc += advantages[i] * rollouts[i].score_residual;
        }
    }
    if (pairs == 0.0) {
        return HiddenGradient::Zero(params.b_in.size());
    }
    HiddenGradient g = params.w_out.transpose() * acc;
    return g / pairs;
}

SurrogateGradient surrogate_gradient(const PolicyParams& params, std::span<const Rollout> rollouts,
                                     std::span<const double> advantages) {
    if (rollouts.size() != advantages.size()) {
        throw InvalidInput("surrogate_gradient: " + std::to_string(advantages.size()) +
                           " advantages for " + std::to_string(rollouts.size()) + " rollouts");
    }
    if (rollouts.empty()) {
        throw InvalidInput("surrogate_gradient: empty batch");
    }
    const PolicyShape shape = params.shape();
    SurrogateGradient out{PolicyParams(shape), HiddenGradient()};
    PolicyParams& g = out.param_grad;
    const double inv_n = 1.0 / static_cast<double>(rollouts.size());

    Eigen::VectorXd dz(shape.vocab_size), dh(shape.hidden_dim), da(shape.hidden_dim);
    for (std::size_t i = 0; i < rollouts.size(); ++i) {
        const double a = advantages[i];
        if (a == 0.0) continue;
        const Rollout& r = rollouts[i];
        const double scale = a * inv_n;
        for (int t = 0; t < r.steps(); ++t) {
            const Token tok = r.completion.tokens[static_cast<std::size_t>(t)];
            dz = scale * r.probs.col(t);
            dz(tok) -= scale;
            g.w_out.noalias() += dz * r.hidden.col(t).transpose();
            g.b_out += dz;
            dh.noalias() = params.w_out.transpose() * dz;
            da = dh.array() * (1.0 - r.hidden.col(t).array().square());
            g.w_in.col(r.feature) += da;
            if (t > 0) {
                const Token prev = r.completion.tokens[static_cast<std::size_t>(t - 1)];
                g.w_in.col(shape.feature_dim + prev) += da;
            }
            g.b_in += da;
        }
    }
    out.hidden_grad = hidden_gradient(params, rollouts, advantages);
    return out;
}

}  // namespace fedmoa
