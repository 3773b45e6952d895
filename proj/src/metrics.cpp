#include "bseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "bseg/errors.hpp"

namespace bseg {

namespace {

inline bool in_test(std::span<const std::uint32_t> test, std::uint32_t item) {
    return std::binary_search(test.begin(), test.end(), item);
}

inline double discount(std::size_t rank) {  // rank is 1-based
    return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

}  // namespace

double precision_at_l(const RecommendationList& rec, std::span<const std::uint32_t> test,
                      std::size_t l) {
    if (l == 0) throw ConfigError("precision_at_l: L must be >= 1");
    std::size_t hits = 0;
    const std::size_t upto = std::min(l, rec.items.size());
    for (std::size_t i = 0; i < upto; ++i) {
        if (in_test(test, rec.items[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(l);
}

double ndcg_at_l(const RecommendationList& rec, std::span<const std::uint32_t> test,
                 std::size_t l) {
    if (l == 0) throw ConfigError("ndcg_at_l: L must be >= 1");
    double dcg = 0.0;
    const std::size_t upto = std::min(l, rec.items.size());
    for (std::size_t i = 0; i < upto; ++i) {
        if (in_test(test, rec.items[i])) dcg += discount(i + 1);
    }
    double idcg = 0.0;
    const std::size_t ideal = std::min(l, test.size());
    for (std::size_t i = 0; i < ideal; ++i) idcg += discount(i + 1);
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

double ndcv_at_l(const RecommendationList& rec, std::span<const std::uint32_t> test,
                 std::span<const double> values, std::size_t l) {
    if (l == 0) throw ConfigError("ndcv_at_l: L must be >= 1");
    auto value_of = [&](std::uint32_t item) {
        if (item >= values.size() || std::isnan(values[item])) {
            throw DataError("ndcv_at_l: missing value for item " + std::to_string(item));
        }
        return values[item];
    };

    double dcv = 0.0;
    const std::size_t upto = std::min(l, rec.items.size());
    for (std::size_t i = 0; i < upto; ++i) {
        if (in_test(test, rec.items[i])) dcv += value_of(rec.items[i]) * discount(i + 1);
    }

    // Ideal: the user's test items in descending value order at the top ranks.
    std::vector<double> test_values;
    test_values.reserve(test.size());
    for (std::uint32_t item : test) test_values.push_back(value_of(item));
    std::sort(test_values.begin(), test_values.end(), std::greater<>());
    double idcv = 0.0;
    const std::size_t ideal = std::min(l, test_values.size());
    for (std::size_t i = 0; i < ideal; ++i) idcv += test_values[i] * discount(i + 1);

    return idcv > 0.0 ? dcv / idcv : 0.0;
}

EvalReport aggregate(std::span<const UserMetrics> per_user, std::size_t skipped, std::size_t l) {
    if (per_user.empty()) throw std::invalid_argument("aggregate: zero evaluated users");
    EvalReport rep;
    rep.l = l;
    rep.users_evaluated = per_user.size();
    rep.users_skipped = skipped;
    for (const auto& u : per_user) {
        rep.precision += u.precision;
        rep.ndcg += u.ndcg;
        rep.ndcv += u.ndcv;
    }
    const double n = static_cast<double>(per_user.size());
    rep.precision /= n;
    rep.ndcg /= n;
    rep.ndcv /= n;
    return rep;
}

}  // namespace bseg
