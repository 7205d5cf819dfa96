#include "fedmoa/server.h"

#include <algorithm>
#include <set>

#include "fedmoa/errors.h"
#include "fedmoa/numeric.h"

namespace fedmoa {

namespace {

constexpr double kScoreCap = 1e6;

}  // namespace

std::map<std::string, double> ClusterAggregate::shared_weight_map() const {
    return {shared_weights.begin(), shared_weights.end()};
}

std::string cluster_key(const ClientUpdate& u, ClusterBy by) {
    if (by == ClusterBy::TaskLabel) {
        return u.task_label;
    }
    std::vector<std::string> names = u.weights.names;
    std::sort(names.begin(), names.end());
    std::string key;
    for (const auto& n : names) {
        if (!key.empty()) key += '+';
        key += n;
    }
    return key;
}

std::map<std::string, std::vector<std::size_t>> cluster_clients(std::span<const ClientUpdate> updates,
                                                                ClusterBy by) {
    std::map<std::string, std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        clusters[cluster_key(updates[i], by)].push_back(i);
    }
    return clusters;
}

ClusterAggregate intra_cluster_aggregate(std::span<const ClientUpdate> members, const AggregationOptions& opts) {
    if (members.empty()) {
        throw ProtocolError("intra_cluster_aggregate: empty cluster");
    }
    if (!(opts.epsilon > 0.0)) {
        throw InvalidInput("intra_cluster_aggregate: epsilon must be positive");
    }
    const auto n = static_cast<Eigen::Index>(members.size());
    ClusterAggregate agg;
    agg.key = members.front().task_label;
    agg.scores.resize(n);
    for (Eigen::Index m = 0; m < n; ++m) {
        const ClientUpdate& u = members[static_cast<std::size_t>(m)];
        if (u.weights.size() == 0 || u.weights.names.front() != "accuracy") {
            throw ProtocolError("client " + std::to_string(u.client_id) + " sent no accuracy weight at position 0");
        }
        if (!u.params.same_shape(members.front().params)) {
            throw ProtocolError("client " + std::to_string(u.client_id) + " parameter shape mismatch");
        }
        const double w0 = u.weights.values(0);
        const double denom = w0 + opts.epsilon;
        agg.scores(m) = denom > 1.0 / kScoreCap ? 1.0 / denom : kScoreCap;
        agg.members.push_back(u.client_id);
        agg.n_samples += u.n_samples;
    }
    agg.alpha = opts.accuracy_aware ? softmax(agg.scores)
                                    : Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));

    agg.params = PolicyParams(members.front().params.shape());
    for (Eigen::Index m = 0; m < n; ++m) {
        PolicyParams scaled = members[static_cast<std::size_t>(m)].params;
        scaled *= agg.alpha(m);
        agg.params += scaled;
    }

    // Shared components: present in every member.
    std::set<std::string> common(members.front().weights.names.begin(), members.front().weights.names.end());
    for (const auto& u : members.subspan(1)) {
        std::set<std::string> mine(u.weights.names.begin(), u.weights.names.end());
        std::set<std::string> keep;
        std::set_intersection(common.begin(), common.end(), mine.begin(), mine.end(),
                              std::inserter(keep, keep.begin()));
        common = std::move(keep);
    }
    std::vector<std::string> order;
    if (common.count("accuracy")) order.push_back("accuracy");
    for (const auto& name : common) {
        if (name != "accuracy") order.push_back(name);
    }
    for (const auto& name : order) {
        double acc = 0.0;
        for (Eigen::Index m = 0; m < n; ++m) {
            const ClientUpdate& u = members[static_cast<std::size_t>(m)];
            acc += agg.alpha(m) * u.weights.values(u.weights.index_of(name));
        }
        agg.shared_weights.emplace_back(name, acc);
    }
    return agg;
}

PolicyParams cross_cluster_aggregate(std::span<const ClusterAggregate> aggregates) {
    if (aggregates.empty()) {
        throw ProtocolError("cross_cluster_aggregate: no clusters");
    }
    double total = 0.0;
    for (const auto& a : aggregates) {
        if (!a.params.same_shape(aggregates.front().params)) {
            throw ProtocolError("cross_cluster_aggregate: cluster '" + a.key + "' parameter shape mismatch");
        }
        if (a.n_samples < 0) {
            throw ProtocolError("cross_cluster_aggregate: negative sample count");
        }
        total += static_cast<double>(a.n_samples);
    }
    if (!(total > 0.0)) {
        throw ProtocolError("cross_cluster_aggregate: total sample count is zero");
    }
    PolicyParams global(aggregates.front().params.shape());
    for (const auto& a : aggregates) {
        PolicyParams scaled = a.params;
        scaled *= static_cast<double>(a.n_samples) / total;
        global += scaled;
    }
    return global;
}

std::map<std::string, double> Broadcast::weights_for(const std::string& key) const {
    const auto it = cluster_weights.find(key);
    return it == cluster_weights.end() ? std::map<std::string, double>{} : it->second;
}

Broadcast make_broadcast(const PolicyParams& global_params, std::span<const ClusterAggregate> aggregates) {
    Broadcast b;
    b.global_params = global_params;
    for (const auto& a : aggregates) {
        b.cluster_weights[a.key] = a.shared_weight_map();
    }
    return b;
}

AggregationResult aggregate_round(std::span<const ClientUpdate> updates, const AggregationOptions& opts) {
    if (updates.empty()) {
        throw ProtocolError("aggregate_round: no client updates");
    }
    AggregationResult out;
    for (const auto& [key, idx] : cluster_clients(updates, opts.cluster_by)) {
        std::vector<ClientUpdate> members;
        members.reserve(idx.size());
        for (std::size_t i : idx) members.push_back(updates[i]);
        ClusterAggregate agg = intra_cluster_aggregate(members, opts);
        agg.key = key;
        out.clusters.push_back(std::move(agg));
    }
    out.broadcast = make_broadcast(cross_cluster_aggregate(out.clusters), out.clusters);
    return out;
}

}  // namespace fedmoa
