#ifndef FEDMOA_ADAPTIVE_WEIGHTS_H
#define FEDMOA_ADAPTIVE_WEIGHTS_H

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedmoa/envs.h"
#include "fedmoa/policy.h"

namespace fedmoa {

// Named objective weights on the probability simplex; entry 0 is accuracy.
struct ObjectiveWeights {
    std::vector<std::string> names;
    Eigen::VectorXd values;

    static ObjectiveWeights uniform(std::vector<std::string> names);
    static ObjectiveWeights from_components(std::span<const RewardComponentSpec> components);

    std::size_t size() const { return names.size(); }
    bool on_simplex(double tol = 1e-9) const;
    // Position of a component, or -1.
    int index_of(const std::string& name) const;
    std::map<std::string, double> as_map() const;

    bool operator==(const ObjectiveWeights& o) const {
        return names == o.names && values.size() == o.values.size() && values == o.values;
    }
};

struct HypergradState {
    std::optional<std::vector<HiddenGradient>> prev_grads;
    double lambda = 0.01;
};

// Inner product of consecutive per-objective hidden gradients.
double hypergrad_signal(const HiddenGradient& g_t, const HiddenGradient& g_prev);

struct WeightUpdate {
    ObjectiveWeights weights;
    HypergradState state;
    // w + lambda * delta before projection; equals weights on the first step.
    Eigen::VectorXd pre_projection;
    Eigen::VectorXd delta;
};

// One hypergradient step: w_k += lambda * <g_k^t, g_k^{t-1}>, then project
// back onto the simplex. The first call after a reset only records grads_t.
WeightUpdate update_weights(const ObjectiveWeights& w, const HypergradState& state,
                            std::span<const HiddenGradient> grads_t);

// Round-start weights.
//
// Without a broadcast (or round 0) the client starts uniform. Otherwise
// components present in the broadcast take the broadcast value, the rest keep
// their end-of-previous-round value, and the vector is projected onto the
// simplex. A broadcast sharing no component with the client also yields
// uniform weights; *fell_back is set so the caller can log it.
ObjectiveWeights reset_for_round(const std::optional<std::map<std::string, double>>& broadcast,
                                 std::span<const RewardComponentSpec> local_components,
                                 const std::optional<ObjectiveWeights>& previous = std::nullopt,
                                 bool* fell_back = nullptr);

}  // namespace fedmoa

#endif  // FEDMOA_ADAPTIVE_WEIGHTS_H
