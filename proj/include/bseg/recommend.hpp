#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bseg/clustering.hpp"
#include "bseg/interaction.hpp"

namespace bseg {

enum class ScoreMethod : std::uint8_t { Popularity = 0, Revenue = 1, ExpProfit = 2 };

std::string_view method_name(ScoreMethod m);  // "Popularity", "Revenue", "ExpProfit"
std::string_view method_tag(ScoreMethod m);   // "popularity", ...
std::optional<ScoreMethod> method_from_tag(std::string_view tag);

/// Per-cluster product statistics over the training matrix.
struct ClusterProductStats {
    std::uint32_t cluster = 0;
    std::size_t size = 0;                 // |C_k|
    std::vector<std::uint32_t> items;     // J_k = union of member baskets, ascending
    std::vector<std::uint32_t> freq;      // parallel: members who bought the item
    std::vector<double> cluster_share;    // parallel: Σ over members of s_uj
};

/// One record per cluster label in [0, model.k); PAM clusters are never empty.
std::vector<ClusterProductStats> cluster_stats(const InteractionMatrices& train,
                                               const ClusteringModel& model);

/// Popularity: freq/size. Revenue: cluster share. ExpProfit: their product.
/// Throws if the item is not in the cluster's item set.
double score(std::uint32_t item, const ClusterProductStats& stats, ScoreMethod method);

struct RecommendationList {
    std::uint32_t user = 0;
    ScoreMethod method = ScoreMethod::Popularity;
    std::vector<std::uint32_t> items;  // descending score, ties by ascending item index
    std::vector<double> scores;
    bool truncated = false;            // fewer than L candidates existed
};

/// Greedy top-L over the cluster's items excluding the user's training
/// basket. Because the objective is a sum of fixed per-item scores, the
/// greedy set attains the subset optimum.
RecommendationList top_l(std::uint32_t user, const ClusterProductStats& stats, ScoreMethod method,
                         std::size_t l, std::span<const std::uint32_t> train_basket);

/// Rows `user_id,rank,item_id,score,method,metric`, rank 1-based.
void write_recommendations_csv(const std::string& path,
                               std::span<const RecommendationList> lists,
                               const std::vector<std::string>& users,
                               const std::vector<std::string>& items, MetricKind metric);

}  // namespace bseg
