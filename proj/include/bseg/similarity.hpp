#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bseg/interaction.hpp"

namespace bseg {

/// Jaccard operates on the binary matrix; Euclidean, Cosine, and MADD
/// operate on the share matrix.
enum class MetricKind : std::uint8_t { Euclidean = 0, Cosine = 1, Jaccard = 2, MADD = 3 };

std::string_view metric_name(MetricKind m);  // "Euclidean", "Cosine", "Jaccard", "MADD"
std::string_view metric_tag(MetricKind m);   // "euclidean", ... (CLI / file tag)
std::optional<MetricKind> metric_from_tag(std::string_view tag);

/// Symmetric n×n dissimilarity matrix with zero diagonal. Every off-diagonal
/// entry is computed once and mirrored, so values(u,v) == values(v,u) exactly.
class DissimilarityMatrix {
public:
    DissimilarityMatrix(std::size_t n, MetricKind metric)
        : n_(n), metric_(metric), values_(n * n, 0.0) {}

    std::size_t size() const { return n_; }
    MetricKind metric() const { return metric_; }

    double at(std::size_t u, std::size_t v) const { return values_[u * n_ + v]; }
    std::span<const double> row(std::size_t u) const {
        return {values_.data() + u * n_, n_};
    }
    void set(std::size_t u, std::size_t v, double d) {
        values_[u * n_ + v] = d;
        values_[v * n_ + u] = d;
    }

    /// Pairs that hit a degenerate kernel case (zero-norm row under Cosine,
    /// two empty baskets under Jaccard).
    std::uint64_t degenerate_events() const { return degenerate_; }
    void set_degenerate_events(std::uint64_t c) { degenerate_ = c; }

    /// Binary file: magic "BSEGDM1", u64-LE n, one metric tag byte, then the
    /// strict upper triangle row-major as f64-LE.
    void save(const std::string& path) const;
    static DissimilarityMatrix load(const std::string& path);

private:
    std::size_t n_;
    MetricKind metric_;
    std::vector<double> values_;
    std::uint64_t degenerate_ = 0;
};

// Dense per-pair kernels. These are the reference contracts; the sparse fast
// paths used by pairwise() must agree with them bit for bit.
double euclidean(std::span<const double> a, std::span<const double> b);
/// 1 - a·b/(|a||b|); either norm zero gives 1 (maximal dissimilarity).
double cosine(std::span<const double> a, std::span<const double> b);
/// 1 - |a∩b|/|a∪b| over supports (nonzero = membership); both empty gives 0.
double jaccard(std::span<const double> a, std::span<const double> b);

// Sparse kernels over rows with sorted column indices.
double euclidean_sparse(std::span<const std::uint32_t> ca, std::span<const double> va,
                        std::span<const std::uint32_t> cb, std::span<const double> vb);
double cosine_sparse(std::span<const std::uint32_t> ca, std::span<const double> va,
                     std::span<const std::uint32_t> cb, std::span<const double> vb,
                     double norm_a, double norm_b);
double jaccard_sparse(std::span<const std::uint32_t> ca, std::span<const std::uint32_t> cb);

/// MADD(u,v) = mean over l != u,v of |base(u,l) - base(v,l)|, summed in
/// ascending l order. `base` must be the full Euclidean matrix on the share
/// rows with n >= 3. O(n^3) given the base.
DissimilarityMatrix madd_matrix(const DissimilarityMatrix& base, int threads = 0);

/// Full pairwise matrix for the given metric. Cosine precomputes row norms;
/// MADD builds the Euclidean base first. Result is identical for any thread
/// count.
DissimilarityMatrix pairwise(const InteractionMatrices& m, MetricKind metric, int threads = 0);

}  // namespace bseg
