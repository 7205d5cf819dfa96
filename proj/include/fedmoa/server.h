#ifndef FEDMOA_SERVER_H
#define FEDMOA_SERVER_H

#include <Eigen/Dense>

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedmoa/client.h"
#include "fedmoa/policy.h"

namespace fedmoa {

enum class ClusterBy { TaskLabel, RewardNames };

struct ClusterAggregate {
    std::string key;
    PolicyParams params;
    // Components common to every member: accuracy first, then alphabetical.
    std::vector<std::pair<std::string, double>> shared_weights;
    std::vector<int> members;     // client ids, in update order
    Eigen::VectorXd scores;       // s_m = 1 / (w_0 + eps)
    Eigen::VectorXd alpha;        // softmax(scores), or uniform
    long n_samples = 0;           // N_c

    std::map<std::string, double> shared_weight_map() const;
};

struct AggregationOptions {
    double epsilon = 1e-6;
    bool accuracy_aware = true;  // false: uniform alpha within each cluster
    ClusterBy cluster_by = ClusterBy::TaskLabel;
};

// Cluster key of one update.
std::string cluster_key(const ClientUpdate& u, ClusterBy by);

// Cluster key -> indices into `updates`, in update order.
std::map<std::string, std::vector<std::size_t>> cluster_clients(std::span<const ClientUpdate> updates,
                                                                ClusterBy by = ClusterBy::TaskLabel);

ClusterAggregate intra_cluster_aggregate(std::span<const ClientUpdate> members,
                                         const AggregationOptions& opts = {});

// FedAvg across clusters weighted by N_c.
PolicyParams cross_cluster_aggregate(std::span<const ClusterAggregate> aggregates);

struct Broadcast {
    PolicyParams global_params;
    std::map<std::string, std::map<std::string, double>> cluster_weights;

    // Weights for a cluster; an empty map if the cluster is unknown.
    std::map<std::string, double> weights_for(const std::string& key) const;
};

Broadcast make_broadcast(const PolicyParams& global_params, std::span<const ClusterAggregate> aggregates);

struct AggregationResult {
    std::vector<ClusterAggregate> clusters;  // ordered by key
    Broadcast broadcast;
};

// Cluster, aggregate within clusters, then across clusters.
AggregationResult aggregate_round(std::span<const ClientUpdate> updates, const AggregationOptions& opts = {});

}  // namespace fedmoa

#endif  // FEDMOA_SERVER_H
