#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bseg/recommend.hpp"

namespace bseg {

struct EvalReport {
    double precision = 0.0;
    double ndcg = 0.0;
    double ndcv = 0.0;
    std::size_t l = 0;
    std::size_t users_evaluated = 0;
    std::size_t users_skipped = 0;  // users with empty test baskets
};

/// |recommended ∩ test| / L. The denominator is the requested L even when
/// the list was truncated. `test` must be sorted ascending.
double precision_at_l(const RecommendationList& rec, std::span<const std::uint32_t> test,
                      std::size_t l);

/// Binary-relevance NDCG with discount 1/log2(rank+1); the ideal ranking
/// puts min(L, |test|) relevant items at the top. Returns 0 when |test| = 0.
double ndcg_at_l(const RecommendationList& rec, std::span<const std::uint32_t> test,
                 std::size_t l);

/// Value-weighted variant: gains are rel · v_item, and the ideal places the
/// test items in descending value order. `values` is indexed by item; a
/// missing (out-of-range or NaN) entry raises an error naming the item.
double ndcv_at_l(const RecommendationList& rec, std::span<const std::uint32_t> test,
                 std::span<const double> values, std::size_t l);

struct UserMetrics {
    double precision = 0.0;
    double ndcg = 0.0;
    double ndcv = 0.0;
};

/// Arithmetic means over evaluated users only, in the given order.
EvalReport aggregate(std::span<const UserMetrics> per_user, std::size_t skipped, std::size_t l);

}  // namespace bseg
