#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "bseg/rng.hpp"

namespace bseg {

/// One (user, item) purchase event. quantity and unit_price are optional;
/// when both are present expenditure must equal their product (rel. 1e-9).
struct TransactionRecord {
    std::string user_id;
    std::string item_id;
    double expenditure = 0.0;
    std::optional<double> quantity;
    std::optional<double> unit_price;
};

/// Aligned expenditure / binary / share user-item matrices over fixed,
/// lexicographically sorted user and item index sets.
///
/// Storage is row-major sparse with sorted column indices. An entry is
/// stored iff its aggregated expenditure is positive, so all three matrices
/// share one sparsity pattern and the binary matrix is implied by it.
/// Instances are immutable once built and safe for concurrent reads.
class InteractionMatrices {
public:
    InteractionMatrices() = default;

    std::size_t user_count() const { return users_.size(); }
    std::size_t item_count() const { return items_.size(); }
    const std::vector<std::string>& users() const { return users_; }
    const std::vector<std::string>& items() const { return items_; }

    /// Sorted item indices purchased by user u (the support of row u).
    std::span<const std::uint32_t> basket(std::size_t u) const {
        return {cols_.data() + row_ptr_[u], cols_.data() + row_ptr_[u + 1]};
    }
    std::span<const double> row_expenditure(std::size_t u) const {
        return {expenditure_.data() + row_ptr_[u], expenditure_.data() + row_ptr_[u + 1]};
    }
    std::span<const double> row_share(std::size_t u) const {
        return {share_.data() + row_ptr_[u], share_.data() + row_ptr_[u + 1]};
    }

    std::size_t nnz() const { return cols_.size(); }
    double total_expenditure() const { return total_; }
    /// Fraction of zero entries in the dense n×p view.
    double zero_fraction() const;
    /// Σ_u Σ_j s_uj, ascending index order (1 up to rounding by construction).
    double share_sum() const;

    std::optional<std::uint32_t> user_index(std::string_view id) const;
    std::optional<std::uint32_t> item_index(std::string_view id) const;

    /// Per-item revenue share summed over users: v_j = Σ_u s_uj.
    std::vector<double> item_share_totals() const;

    /// Builds from pre-indexed entries over externally fixed user/item sets.
    /// Entries must be (user, item, expenditure>0), unique, sorted by
    /// (user, item). Shares are computed from the entries' own total.
    static InteractionMatrices from_indexed(
        std::vector<std::string> users, std::vector<std::string> items,
        const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& entries);

private:
    std::vector<std::string> users_;
    std::vector<std::string> items_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> cols_;
    std::vector<double> expenditure_;
    std::vector<double> share_;
    double total_ = 0.0;
};

/// Train matrices plus the per-user sets of masked (held-out) item indices.
/// Item indices refer to the same index space as the matrices they were
/// split from; train keeps the full user/item id sequences.
struct SplitMatrices {
    InteractionMatrices train;
    std::vector<std::vector<std::uint32_t>> test_baskets;  // per user, ascending
    double mask_fraction = 0.0;
    std::size_t forced_keep_count = 0;  // users where masking had to leave one item
};

/// Aggregates duplicate (user, item) pairs by summing expenditure, sorts
/// users/items lexicographically, and computes the share matrix.
InteractionMatrices build_matrices(const std::vector<TransactionRecord>& log);

/// For each user independently moves round_half_up(fraction·|basket|) items,
/// chosen uniformly without replacement, into the test basket. A user whose
/// whole basket would be masked keeps one uniformly chosen item in train
/// (counted in forced_keep_count). Train shares are renormalized.
SplitMatrices split_by_masking(const InteractionMatrices& full, double fraction, Rng& rng);

struct Date {
    int year = 0, month = 0, day = 0;
    auto operator<=>(const Date&) const = default;
};

/// Accepts "YYYY-MM-DD" and "M/D/YYYY", each with an optional time suffix.
std::optional<Date> parse_date(std::string_view s);

struct RetailFilter {
    std::string country;  // empty = keep all countries
    Date start{1, 1, 1};
    Date end{9999, 12, 31};
    std::size_t min_items_per_customer = 1;  // distinct items
};

/// Reads the 8-column Online Retail II schema (Invoice, StockCode,
/// Description, Quantity, InvoiceDate, Price, Customer ID, Country).
/// Rows with missing Customer ID, Quantity ≤ 0, or Price ≤ 0 are dropped;
/// customers below the distinct-item threshold are dropped.
std::vector<TransactionRecord> ingest_retail_csv(const std::string& path,
                                                 const RetailFilter& filter);

/// Reads either the generic `user_id,item_id,expenditure` form or the
/// 8-column retail schema, auto-detected by header.
std::vector<TransactionRecord> read_transactions_csv(const std::string& path,
                                                     const RetailFilter& filter = {});

/// Triplet form `user_id,item_id,expenditure`, full float precision.
void write_matrix_csv(const InteractionMatrices& m, const std::string& path);

/// Masked `user_id,item_id` pairs, one per line.
void write_split_manifest(const SplitMatrices& split, const std::string& path);

/// Parses a manifest back into per-user item index sets of `m`.
std::vector<std::vector<std::uint32_t>> read_split_manifest(const std::string& path,
                                                            const InteractionMatrices& m);

}  // namespace bseg
