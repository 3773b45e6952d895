#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bseg/rng.hpp"
#include "bseg/similarity.hpp"

namespace bseg {

struct ClusteringModel {
    std::size_t k = 0;
    std::vector<std::uint32_t> medoids;     // ascending user indices, one per cluster
    std::vector<std::uint32_t> assignment;  // per user: cluster label in [0, k)
    double total_cost = 0.0;                // Σ_u d(u, medoid of its cluster)
    double mean_silhouette = 0.0;
};

/// PAM k-medoids on a precomputed dissimilarity matrix.
///
/// BUILD seeds greedily (first medoid minimizes total dissimilarity, each
/// next one maximizes cost reduction); SWAP repeatedly applies the single
/// best-improving (medoid, non-medoid) exchange until none improves. The rng
/// is consumed only to break exact ties among equally good candidates.
/// Medoids are returned sorted and users assigned to the nearest medoid with
/// ties toward the lowest cluster index.
ClusteringModel pam(const DissimilarityMatrix& dm, std::size_t k, Rng& rng);

/// Per-user silhouette S(u) = (B(u)-A(u))/max(A(u),B(u)) and its mean.
/// Members of singleton clusters get S(u) = 0.
std::pair<std::vector<double>, double> silhouette(const DissimilarityMatrix& dm,
                                                  const ClusteringModel& model);

/// Nearest-medoid label for one (possibly out-of-sample) observation given
/// its dissimilarities to each medoid; ties go to the lowest label.
std::size_t nearest_medoid(std::span<const double> dissim_to_medoids);

struct KSelection {
    ClusteringModel best;
    std::map<std::size_t, double> silhouette_by_k;
};

/// Runs pam for each k in [k_min, k_max] with `restarts` rotated tie-break
/// seeds (keeping the lowest-cost model per k) and returns the model with
/// the highest mean silhouette; ties go to the smaller k.
KSelection select_k(const DissimilarityMatrix& dm, std::size_t k_min, std::size_t k_max,
                    std::uint64_t seed, std::size_t restarts = 5, int threads = 0);

/// Plain-text persistence: `k=`, `medoids=`, one `assignment=user:label`
/// line per user, `mean_silhouette=`. total_cost is not stored; load_model
/// leaves it NaN.
void save_model(const ClusteringModel& model, const std::vector<std::string>& users,
                const std::string& path);
ClusteringModel load_model(const std::string& path, const std::vector<std::string>& users);

}  // namespace bseg
