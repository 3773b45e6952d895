#include "bseg/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "bseg/csv.hpp"
#include "bseg/errors.hpp"
#include "bseg/parallel.hpp"

namespace bseg {

namespace {

std::size_t pick_tied(const std::vector<std::uint32_t>& tied, Rng& rng) {
    return tied.size() == 1 ? tied[0] : tied[rng.below(tied.size())];
}

// Nearest and second-nearest medoid distances for every point.
struct MedoidCaches {
    std::vector<std::uint32_t> nearest_pos;  // index into medoids
    std::vector<double> d_near;
    std::vector<double> d_second;

    void rebuild(const DissimilarityMatrix& dm, const std::vector<std::uint32_t>& medoids) {
        const std::size_t n = dm.size();
        nearest_pos.assign(n, 0);
        d_near.assign(n, std::numeric_limits<double>::infinity());
        d_second.assign(n, std::numeric_limits<double>::infinity());
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < medoids.size(); ++i) {
                const double d = dm.at(j, medoids[i]);
                if (d < d_near[j]) {
                    d_second[j] = d_near[j];
                    d_near[j] = d;
                    nearest_pos[j] = static_cast<std::uint32_t>(i);
                } else if (d < d_second[j]) {
                    d_second[j] = d;
                }
            }
        }
    }

    double total_cost() const {
        double s = 0.0;
        for (double d : d_near) s += d;
        return s;
    }
};

std::vector<std::uint32_t> pam_build(const DissimilarityMatrix& dm, std::size_t k, Rng& rng) {
    const std::size_t n = dm.size();
    std::vector<std::uint32_t> medoids;
    medoids.reserve(k);
    std::vector<bool> is_medoid(n, false);
    std::vector<std::uint32_t> tied;

    // First medoid: minimal total dissimilarity to all points.
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
        double s = 0.0;
        for (double d : dm.row(c)) s += d;
        if (s < best) {
            best = s;
            tied.assign(1, static_cast<std::uint32_t>(c));
        } else if (s == best) {
            tied.push_back(static_cast<std::uint32_t>(c));
        }
    }
    std::uint32_t first = static_cast<std::uint32_t>(pick_tied(tied, rng));
    medoids.push_back(first);
    is_medoid[first] = true;

    std::vector<double> d_near(n);
    for (std::size_t j = 0; j < n; ++j) d_near[j] = dm.at(j, first);

    // Each next medoid maximizes the total cost reduction.
    while (medoids.size() < k) {
        double best_gain = -std::numeric_limits<double>::infinity();
        tied.clear();
        for (std::size_t c = 0; c < n; ++c) {
            if (is_medoid[c]) continue;
            double gain = 0.0;
            const auto row = dm.row(c);
            for (std::size_t j = 0; j < n; ++j) {
                const double diff = d_near[j] - row[j];
                if (diff > 0.0) gain += diff;
            }
            if (gain > best_gain) {
                best_gain = gain;
                tied.assign(1, static_cast<std::uint32_t>(c));
            } else if (gain == best_gain) {
                tied.push_back(static_cast<std::uint32_t>(c));
            }
        }
        const std::uint32_t chosen = static_cast<std::uint32_t>(pick_tied(tied, rng));
        medoids.push_back(chosen);
        is_medoid[chosen] = true;
        const auto row = dm.row(chosen);
        for (std::size_t j = 0; j < n; ++j) d_near[j] = std::min(d_near[j], row[j]);
    }
    return medoids;
}

void pam_swap(const DissimilarityMatrix& dm, std::vector<std::uint32_t>& medoids, Rng& rng) {
    const std::size_t n = dm.size();
    const std::size_t k = medoids.size();
    std::vector<bool> is_medoid(n, false);
    for (std::uint32_t m : medoids) is_medoid[m] = true;

    MedoidCaches caches;
    caches.rebuild(dm, medoids);

    std::vector<double> corr(k);
    struct Swap {
        std::uint32_t medoid_pos;
        std::uint32_t candidate;
    };
    std::vector<Swap> tied;

    for (;;) {
        // Best-improvement sweep: exact cost change of every (medoid,
        // candidate) exchange, computed in one O(n) pass per candidate by
        // splitting each point's contribution into a medoid-independent part
        // plus a correction for the point's own nearest medoid.
        double best_delta = 0.0;
        tied.clear();
        for (std::size_t h = 0; h < n; ++h) {
            if (is_medoid[h]) continue;
            double acc_all = 0.0;
            std::fill(corr.begin(), corr.end(), 0.0);
            const auto row = dm.row(h);
            for (std::size_t j = 0; j < n; ++j) {
                const double dh = row[j];
                const double dn = caches.d_near[j];
                const double shared = dh < dn ? dh - dn : 0.0;
                acc_all += shared;
                corr[caches.nearest_pos[j]] +=
                    std::min(dh, caches.d_second[j]) - dn - shared;
            }
            for (std::size_t i = 0; i < k; ++i) {
                const double delta = acc_all + corr[i];
                if (delta < best_delta) {
                    best_delta = delta;
                    tied.clear();
                    tied.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(h)});
                } else if (delta == best_delta && best_delta < 0.0) {
                    tied.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(h)});
                }
            }
        }
        if (tied.empty()) break;  // no swap reduces the cost

        const Swap chosen = tied.size() == 1 ? tied[0] : tied[rng.below(tied.size())];
        const double old_cost = caches.total_cost();
        const std::uint32_t old_medoid = medoids[chosen.medoid_pos];
        medoids[chosen.medoid_pos] = chosen.candidate;
        is_medoid[old_medoid] = false;
        is_medoid[chosen.candidate] = true;
        caches.rebuild(dm, medoids);
        // The predicted delta can be rounding noise; require a real decrease
        // so the loop provably terminates.
        if (!(caches.total_cost() < old_cost)) {
            medoids[chosen.medoid_pos] = old_medoid;
            is_medoid[old_medoid] = true;
            is_medoid[chosen.candidate] = false;
            caches.rebuild(dm, medoids);
            break;
        }
    }
}

}  // namespace

std::size_t nearest_medoid(std::span<const double> dissim_to_medoids) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dissim_to_medoids.size(); ++i) {
        if (dissim_to_medoids[i] < dissim_to_medoids[best]) best = i;
    }
    return best;
}

ClusteringModel pam(const DissimilarityMatrix& dm, std::size_t k, Rng& rng) {
    const std::size_t n = dm.size();
    if (k < 2 || k >= n) throw DataError("pam requires 2 <= k < n");

    ClusteringModel model;
    model.k = k;
    model.medoids = pam_build(dm, k, rng);
    pam_swap(dm, model.medoids, rng);
    std::sort(model.medoids.begin(), model.medoids.end());

    model.assignment.resize(n);
    model.total_cost = 0.0;
    std::vector<std::int64_t> medoid_pos(n, -1);
    for (std::size_t i = 0; i < k; ++i) medoid_pos[model.medoids[i]] = static_cast<std::int64_t>(i);
    std::vector<double> to_medoids(k);
    for (std::size_t u = 0; u < n; ++u) {
        // A medoid stays in its own cluster even when duplicate points make
        // another medoid equally close.
        if (medoid_pos[u] >= 0) {
            model.assignment[u] = static_cast<std::uint32_t>(medoid_pos[u]);
            continue;
        }
        for (std::size_t i = 0; i < k; ++i) to_medoids[i] = dm.at(u, model.medoids[i]);
        const std::size_t label = nearest_medoid(to_medoids);
        model.assignment[u] = static_cast<std::uint32_t>(label);
        model.total_cost += to_medoids[label];
    }
    model.mean_silhouette = silhouette(dm, model).second;
    return model;
}

std::pair<std::vector<double>, double> silhouette(const DissimilarityMatrix& dm,
                                                  const ClusteringModel& model) {
    const std::size_t n = dm.size();
    const std::size_t k = model.k;
    if (model.assignment.size() != n) throw DataError("silhouette: assignment/matrix size mismatch");

    std::vector<std::size_t> counts(k, 0);
    for (std::uint32_t c : model.assignment) counts[c] += 1;

    std::vector<double> s(n, 0.0);
    std::vector<double> sums(k);
    double mean = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
        const std::size_t own = model.assignment[u];
        if (counts[own] <= 1) continue;  // singleton convention: S(u) = 0
        std::fill(sums.begin(), sums.end(), 0.0);
        const auto row = dm.row(u);
        for (std::size_t v = 0; v < n; ++v) sums[model.assignment[v]] += row[v];

        const double a = sums[own] / static_cast<double>(counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c == own || counts[c] == 0) continue;
            b = std::min(b, sums[c] / static_cast<double>(counts[c]));
        }
        const double denom = std::max(a, b);
        s[u] = denom > 0.0 ? (b - a) / denom : 0.0;
        mean += s[u];
    }
    mean /= static_cast<double>(n);
    return {std::move(s), mean};
}

KSelection select_k(const DissimilarityMatrix& dm, std::size_t k_min, std::size_t k_max,
                    std::uint64_t seed, std::size_t restarts, int threads) {
    const std::size_t n = dm.size();
    if (k_min > k_max) throw ConfigError("select_k: empty k range");
    if (k_min < 2 || k_max > n - 1) {
        throw ConfigError("select_k: k range must lie within [2, n-1]");
    }
    if (restarts == 0) throw ConfigError("select_k: restarts must be >= 1");

    const std::size_t nk = k_max - k_min + 1;
    std::vector<ClusteringModel> by_k(nk);
    parallel_strided(nk, threads, [&](std::size_t idx) {
        const std::size_t k = k_min + idx;
        ClusteringModel best;
        bool have = false;
        for (std::size_t r = 0; r < restarts; ++r) {
            Rng rng = Rng::stream(seed, {k, r});
            ClusteringModel m = pam(dm, k, rng);
            if (!have || m.total_cost < best.total_cost) {
                best = std::move(m);
                have = true;
            }
            // A run that drew nothing had no ties: every restart would
            // reproduce it exactly, so stop early.
            if (r == 0 && rng.draws() == 0) break;
        }
        by_k[idx] = std::move(best);
    });

    KSelection sel;
    std::size_t best_idx = 0;
    for (std::size_t idx = 0; idx < nk; ++idx) {
        sel.silhouette_by_k[k_min + idx] = by_k[idx].mean_silhouette;
        if (by_k[idx].mean_silhouette > by_k[best_idx].mean_silhouette) best_idx = idx;
    }
    sel.best = std::move(by_k[best_idx]);
    return sel;
}

void save_model(const ClusteringModel& model, const std::vector<std::string>& users,
                const std::string& path) {
    if (model.assignment.size() != users.size()) {
        throw DataError("save_model: user list does not match assignment length");
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "k=" << model.k << '\n';
    out << "medoids=";
    for (std::size_t i = 0; i < model.medoids.size(); ++i) {
        if (i) out << ',';
        out << users[model.medoids[i]];
    }
    out << '\n';
    for (std::size_t u = 0; u < users.size(); ++u) {
        out << "assignment=" << users[u] << ':' << model.assignment[u] << '\n';
    }
    out << "mean_silhouette=" << format_double(model.mean_silhouette) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

ClusteringModel load_model(const std::string& path, const std::vector<std::string>& users) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);

    auto user_index = [&](std::string_view id) -> std::uint32_t {
        auto it = std::lower_bound(users.begin(), users.end(), id);
        if (it == users.end() || *it != id) {
            throw DataError(path + ": unknown user '" + std::string(id) + "'");
        }
        return static_cast<std::uint32_t>(it - users.begin());
    };

    ClusteringModel model;
    model.assignment.assign(users.size(), 0);
    model.total_cost = std::numeric_limits<double>::quiet_NaN();
    std::vector<bool> seen(users.size(), false);
    std::string line;
    while (std::getline(in, line)) {
        std::string_view l = trim(line);
        if (l.empty()) continue;
        const auto eq = l.find('=');
        if (eq == std::string_view::npos) throw DataError(path + ": malformed line '" + line + "'");
        const std::string_view key = l.substr(0, eq);
        const std::string_view val = l.substr(eq + 1);
        if (key == "k") {
            model.k = static_cast<std::size_t>(parse_int(val, path + " k"));
        } else if (key == "medoids") {
            std::size_t pos = 0;
            while (pos <= val.size()) {
                auto next = val.find(',', pos);
                if (next == std::string_view::npos) next = val.size();
                model.medoids.push_back(user_index(trim(val.substr(pos, next - pos))));
                pos = next + 1;
                if (next == val.size()) break;
            }
        } else if (key == "assignment") {
            const auto colon = val.rfind(':');
            if (colon == std::string_view::npos) {
                throw DataError(path + ": malformed assignment line '" + line + "'");
            }
            const std::uint32_t u = user_index(trim(val.substr(0, colon)));
            model.assignment[u] = static_cast<std::uint32_t>(
                parse_int(val.substr(colon + 1), path + " assignment label"));
            seen[u] = true;
        } else if (key == "mean_silhouette") {
            model.mean_silhouette = parse_double(val, path + " mean_silhouette");
        } else {
            throw DataError(path + ": unknown key '" + std::string(key) + "'");
        }
    }
    if (model.k == 0 || model.medoids.size() != model.k) {
        throw DataError(path + ": missing or inconsistent k / medoids");
    }
    for (std::size_t u = 0; u < users.size(); ++u) {
        if (!seen[u]) throw DataError(path + ": missing assignment for user '" + users[u] + "'");
        if (model.assignment[u] >= model.k) {
            throw DataError(path + ": label out of range for user '" + users[u] + "'");
        }
    }
    return model;
}

}  // namespace bseg
