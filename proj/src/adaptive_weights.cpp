#include "fedmoa/adaptive_weights.h"

#include <cmath>
#include <string>

#include "fedmoa/errors.h"
#include "fedmoa/numeric.h"

namespace fedmoa {

ObjectiveWeights ObjectiveWeights::uniform(std::vector<std::string> names) {
    if (names.empty()) throw InvalidInput("ObjectiveWeights: no components");
    ObjectiveWeights w;
    const auto k = static_cast<Eigen::Index>(names.size());
    w.names = std::move(names);
    w.values = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    return w;
}

ObjectiveWeights ObjectiveWeights::from_components(std::span<const RewardComponentSpec> components) {
    std::vector<std::string> names;
    for (const auto& c : components) names.push_back(c.name);
    return uniform(std::move(names));
}

bool ObjectiveWeights::on_simplex(double tol) const {
    if (values.size() != static_cast<Eigen::Index>(names.size()) || values.size() == 0) return false;
    if (!values.allFinite() || values.minCoeff() < 0.0) return false;
    return std::abs(values.sum() - 1.0) <= tol;
}

int ObjectiveWeights::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

std::map<std::string, double> ObjectiveWeights::as_map() const {
    std::map<std::string, double> m;
    for (std::size_t i = 0; i < names.size(); ++i) m[names[i]] = values(static_cast<Eigen::Index>(i));
    return m;
}

double hypergrad_signal(const HiddenGradient& g_t, const HiddenGradient& g_prev) {
    if (g_t.size() != g_prev.size()) {
        throw InvalidInput("hypergrad_signal: dimension mismatch (" + std::to_string(g_t.size()) + " vs " +
                           std::to_string(g_prev.size()) + ")");
    }
    return ordered_dot(g_t, g_prev);
}

WeightUpdate update_weights(const ObjectiveWeights& w, const HypergradState& state,
                            std::span<const HiddenGradient> grads_t) {
    const std::size_t k = w.size();
    if (grads_t.size() != k) {
        throw InvalidInput("update_weights: " + std::to_string(grads_t.size()) + " gradients for " +
                           std::to_string(k) + " weights");
    }
    if (state.prev_grads && state.prev_grads->size() != k) {
        throw InvalidInput("update_weights: previous gradient count does not match weights");
    }

    WeightUpdate out{w, state, w.values, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k))};
    out.state.prev_grads = std::vector<HiddenGradient>(grads_t.begin(), grads_t.end());
    if (!state.prev_grads) {
        return out;
    }

    for (std::size_t i = 0; i < k; ++i) {
        const auto e = static_cast<Eigen::Index>(i);
        out.delta(e) = hypergrad_signal(grads_t[i], (*state.prev_grads)[i]);
        out.pre_projection(e) = w.values(e) + state.lambda * out.delta(e);
    }
    if (!out.pre_projection.allFinite()) {
        throw InvalidInput("update_weights: non-finite hypergradient step");
    }
    // A zero step leaves the weights bit-for-bit unchanged.
    if (out.pre_projection != w.values) {
        out.weights.values = project_to_simplex(out.pre_projection);
    }
    return out;
}

ObjectiveWeights reset_for_round(const std::optional<std::map<std::string, double>>& broadcast,
                                 std::span<const RewardComponentSpec> local_components,
                                 const std::optional<ObjectiveWeights>& previous, bool* fell_back) {
    if (fell_back) *fell_back = false;
    ObjectiveWeights w = ObjectiveWeights::from_components(local_components);
    if (!broadcast) {
        return w;
    }

    bool overlap = false;
    for (const auto& name : w.names) {
        if (broadcast->count(name)) overlap = true;
    }
    if (!overlap) {
        if (fell_back) *fell_back = true;
        return w;
    }

    Eigen::VectorXd v = w.values;
    for (std::size_t i = 0; i < w.names.size(); ++i) {
        const auto e = static_cast<Eigen::Index>(i);
        const auto it = broadcast->find(w.names[i]);
        if (it != broadcast->end()) {
            v(e) = it->second;
        } else if (previous) {
            const int j = previous->index_of(w.names[i]);
            if (j >= 0) v(e) = previous->values(j);
        }
    }
    w.values = project_to_simplex(v);
    return w;
}

}  // namespace fedmoa
