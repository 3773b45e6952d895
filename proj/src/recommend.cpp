#include "bseg/recommend.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "bseg/csv.hpp"
#include "bseg/errors.hpp"

namespace bseg {

std::string_view method_name(ScoreMethod m) {
    switch (m) {
        case ScoreMethod::Popularity: return "Popularity";
        case ScoreMethod::Revenue: return "Revenue";
        case ScoreMethod::ExpProfit: return "ExpProfit";
    }
    return "?";
}

std::string_view method_tag(ScoreMethod m) {
    switch (m) {
        case ScoreMethod::Popularity: return "popularity";
        case ScoreMethod::Revenue: return "revenue";
        case ScoreMethod::ExpProfit: return "expprofit";
    }
    return "?";
}

std::optional<ScoreMethod> method_from_tag(std::string_view tag) {
    std::string t;
    t.reserve(tag.size());
    for (char c : tag) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "popularity") return ScoreMethod::Popularity;
    if (t == "revenue") return ScoreMethod::Revenue;
    if (t == "expprofit") return ScoreMethod::ExpProfit;
    return std::nullopt;
}

std::vector<ClusterProductStats> cluster_stats(const InteractionMatrices& train,
                                               const ClusteringModel& model) {
    const std::size_t n = train.user_count();
    if (model.assignment.size() != n) {
        throw DataError("cluster_stats: assignment does not cover the training users");
    }

    std::vector<ClusterProductStats> stats(model.k);
    for (std::size_t c = 0; c < model.k; ++c) stats[c].cluster = static_cast<std::uint32_t>(c);

    // Gather (item, share) pairs per cluster in (user asc, item asc) order,
    // then aggregate runs of equal items; stable sort keeps the user order
    // within an item so share sums accumulate ascending.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> gathered(model.k);
    for (std::size_t u = 0; u < n; ++u) {
        const std::size_t c = model.assignment[u];
        stats[c].size += 1;
        const auto cols = train.basket(u);
        const auto shares = train.row_share(u);
        for (std::size_t i = 0; i < cols.size(); ++i) {
            gathered[c].emplace_back(cols[i], shares[i]);
        }
    }
    for (std::size_t c = 0; c < model.k; ++c) {
        auto& g = gathered[c];
        std::stable_sort(g.begin(), g.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        auto& s = stats[c];
        for (const auto& [item, share] : g) {
            if (!s.items.empty() && s.items.back() == item) {
                s.freq.back() += 1;
                s.cluster_share.back() += share;
            } else {
                s.items.push_back(item);
                s.freq.push_back(1);
                s.cluster_share.push_back(share);
            }
        }
    }
    return stats;
}

namespace {

std::size_t item_position(const ClusterProductStats& stats, std::uint32_t item) {
    const auto it = std::lower_bound(stats.items.begin(), stats.items.end(), item);
    if (it == stats.items.end() || *it != item) {
        throw std::invalid_argument("score: item " + std::to_string(item) +
                                    " not purchased in cluster " + std::to_string(stats.cluster));
    }
    return static_cast<std::size_t>(it - stats.items.begin());
}

double score_at(const ClusterProductStats& stats, std::size_t pos, ScoreMethod method) {
    const double pop = static_cast<double>(stats.freq[pos]) / static_cast<double>(stats.size);
    switch (method) {
        case ScoreMethod::Popularity: return pop;
        case ScoreMethod::Revenue: return stats.cluster_share[pos];
        case ScoreMethod::ExpProfit: return pop * stats.cluster_share[pos];
    }
    return 0.0;
}

}  // namespace

double score(std::uint32_t item, const ClusterProductStats& stats, ScoreMethod method) {
    return score_at(stats, item_position(stats, item), method);
}

RecommendationList top_l(std::uint32_t user, const ClusterProductStats& stats, ScoreMethod method,
                         std::size_t l, std::span<const std::uint32_t> train_basket) {
    if (l == 0) throw ConfigError("top_l: L must be >= 1");

    RecommendationList rec;
    rec.user = user;
    rec.method = method;

    std::vector<std::uint32_t> candidates;
    candidates.reserve(stats.items.size());
    for (std::size_t pos = 0; pos < stats.items.size(); ++pos) {
        const std::uint32_t item = stats.items[pos];
        if (!std::binary_search(train_basket.begin(), train_basket.end(), item)) {
            candidates.push_back(static_cast<std::uint32_t>(pos));
        }
    }
    std::sort(candidates.begin(), candidates.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double sa = score_at(stats, a, method);
        const double sb = score_at(stats, b, method);
        if (sa != sb) return sa > sb;
        return stats.items[a] < stats.items[b];
    });

    const std::size_t take = std::min(l, candidates.size());
    rec.truncated = candidates.size() < l;
    rec.items.reserve(take);
    rec.scores.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        rec.items.push_back(stats.items[candidates[i]]);
        rec.scores.push_back(score_at(stats, candidates[i], method));
    }
    return rec;
}

void write_recommendations_csv(const std::string& path,
                               std::span<const RecommendationList> lists,
                               const std::vector<std::string>& users,
                               const std::vector<std::string>& items, MetricKind metric) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "user_id,rank,item_id,score,method,metric\n";
    for (const auto& rec : lists) {
        for (std::size_t i = 0; i < rec.items.size(); ++i) {
            out << csv_escape(users[rec.user]) << ',' << (i + 1) << ','
                << csv_escape(items[rec.items[i]]) << ',' << format_double(rec.scores[i]) << ','
                << method_tag(rec.method) << ',' << metric_tag(metric) << '\n';
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace bseg
