#include "bseg/similarity.hpp"

#include <atomic>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "bseg/errors.hpp"
#include "bseg/parallel.hpp"

namespace bseg {

std::string_view metric_name(MetricKind m) {
    switch (m) {
        case MetricKind::Euclidean: return "Euclidean";
        case MetricKind::Cosine: return "Cosine";
        case MetricKind::Jaccard: return "Jaccard";
        case MetricKind::MADD: return "MADD";
    }
    return "?";
}

std::string_view metric_tag(MetricKind m) {
    switch (m) {
        case MetricKind::Euclidean: return "euclidean";
        case MetricKind::Cosine: return "cosine";
        case MetricKind::Jaccard: return "jaccard";
        case MetricKind::MADD: return "madd";
    }
    return "?";
}

std::optional<MetricKind> metric_from_tag(std::string_view tag) {
    std::string t;
    t.reserve(tag.size());
    for (char c : tag) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "euclidean") return MetricKind::Euclidean;
    if (t == "cosine") return MetricKind::Cosine;
    if (t == "jaccard") return MetricKind::Jaccard;
    if (t == "madd") return MetricKind::MADD;
    return std::nullopt;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("euclidean: length mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return std::sqrt(s);
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        dot += a[j] * b[j];
        na += a[j] * a[j];
        nb += b[j] * b[j];
    }
    if (na == 0.0 || nb == 0.0) return 1.0;
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

double jaccard(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("jaccard: length mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const bool ia = a[j] != 0.0, ib = b[j] != 0.0;
        inter += (ia && ib) ? 1 : 0;
        uni += (ia || ib) ? 1 : 0;
    }
    if (uni == 0) return 0.0;
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

double euclidean_sparse(std::span<const std::uint32_t> ca, std::span<const double> va,
                        std::span<const std::uint32_t> cb, std::span<const double> vb) {
    // Merge walk over the union of supports, ascending column order.
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < ca.size() && j < cb.size()) {
        if (ca[i] == cb[j]) {
            const double d = va[i] - vb[j];
            s += d * d;
            ++i;
            ++j;
        } else if (ca[i] < cb[j]) {
            s += va[i] * va[i];
            ++i;
        } else {
            s += vb[j] * vb[j];
            ++j;
        }
    }
    for (; i < ca.size(); ++i) s += va[i] * va[i];
    for (; j < cb.size(); ++j) s += vb[j] * vb[j];
    return std::sqrt(s);
}

double cosine_sparse(std::span<const std::uint32_t> ca, std::span<const double> va,
                     std::span<const std::uint32_t> cb, std::span<const double> vb,
                     double norm_a, double norm_b) {
    if (norm_a == 0.0 || norm_b == 0.0) return 1.0;
    double dot = 0.0;
    std::size_t i = 0, j = 0;
    while (i < ca.size() && j < cb.size()) {
        if (ca[i] == cb[j]) {
            dot += va[i] * vb[j];
            ++i;
            ++j;
        } else if (ca[i] < cb[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return 1.0 - dot / (norm_a * norm_b);
}

double jaccard_sparse(std::span<const std::uint32_t> ca, std::span<const std::uint32_t> cb) {
    if (ca.empty() && cb.empty()) return 0.0;
    std::size_t inter = 0;
    std::size_t i = 0, j = 0;
    while (i < ca.size() && j < cb.size()) {
        if (ca[i] == cb[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (ca[i] < cb[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const std::size_t uni = ca.size() + cb.size() - inter;
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

DissimilarityMatrix madd_matrix(const DissimilarityMatrix& base, int threads) {
    if (base.metric() != MetricKind::Euclidean) {
        throw std::invalid_argument("madd_matrix requires a Euclidean base matrix");
    }
    const std::size_t n = base.size();
    if (n < 3) throw DataError("MADD undefined for n<3");

    DissimilarityMatrix out(n, MetricKind::MADD);
    const double inv = 1.0 / static_cast<double>(n - 2);
    parallel_strided(n, threads, [&](std::size_t u) {
        const auto bu = base.row(u);
        for (std::size_t v = u + 1; v < n; ++v) {
            const auto bv = base.row(v);
            double s = 0.0;
            for (std::size_t l = 0; l < n; ++l) {
                if (l == u || l == v) continue;
                s += std::abs(bu[l] - bv[l]);
            }
            out.set(u, v, s * inv);
        }
    });
    return out;
}

DissimilarityMatrix pairwise(const InteractionMatrices& m, MetricKind metric, int threads) {
    const std::size_t n = m.user_count();
    if (n < 2) throw DataError("pairwise dissimilarity requires at least 2 users");

    if (metric == MetricKind::MADD) {
        if (n < 3) throw DataError("MADD undefined for n<3");
        DissimilarityMatrix base = pairwise(m, MetricKind::Euclidean, threads);
        return madd_matrix(base, threads);
    }

    DissimilarityMatrix out(n, metric);
    std::atomic<std::uint64_t> degenerate{0};

    std::vector<double> norms;
    if (metric == MetricKind::Cosine) {
        norms.resize(n);
        for (std::size_t u = 0; u < n; ++u) {
            double s = 0.0;
            for (double v : m.row_share(u)) s += v * v;
            norms[u] = std::sqrt(s);
        }
    }

    parallel_strided(n, threads, [&](std::size_t u) {
        std::uint64_t local_events = 0;
        for (std::size_t v = u + 1; v < n; ++v) {
            double d = 0.0;
            switch (metric) {
                case MetricKind::Euclidean:
                    d = euclidean_sparse(m.basket(u), m.row_share(u), m.basket(v), m.row_share(v));
                    break;
                case MetricKind::Cosine:
                    d = cosine_sparse(m.basket(u), m.row_share(u), m.basket(v), m.row_share(v),
                                      norms[u], norms[v]);
                    if (norms[u] == 0.0 || norms[v] == 0.0) ++local_events;
                    break;
                case MetricKind::Jaccard:
                    d = jaccard_sparse(m.basket(u), m.basket(v));
                    if (m.basket(u).empty() && m.basket(v).empty()) ++local_events;
                    break;
                case MetricKind::MADD:
                    break;  // handled above
            }
            out.set(u, v, d);
        }
        if (local_events) degenerate.fetch_add(local_events, std::memory_order_relaxed);
    });

    out.set_degenerate_events(degenerate.load());
    return out;
}

namespace {

constexpr char kMagic[7] = {'B', 'S', 'E', 'G', 'D', 'M', '1'};

void put_u64_le(std::ofstream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64_le(std::ifstream& in, const std::string& path) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError(path + ": truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void DissimilarityMatrix::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out.write(kMagic, sizeof(kMagic));
    put_u64_le(out, static_cast<std::uint64_t>(n_));
    const char tag = static_cast<char>(metric_);
    out.write(&tag, 1);
    for (std::size_t u = 0; u < n_; ++u) {
        for (std::size_t v = u + 1; v < n_; ++v) {
            put_u64_le(out, std::bit_cast<std::uint64_t>(at(u, v)));
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

DissimilarityMatrix DissimilarityMatrix::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    char magic[7];
    if (!in.read(magic, 7) || std::memcmp(magic, kMagic, 7) != 0) {
        throw DataError(path + ": not a dissimilarity matrix file (bad magic)");
    }
    const std::uint64_t n = get_u64_le(in, path);
    char tag = 0;
    if (!in.read(&tag, 1) || tag < 0 || tag > 3) throw DataError(path + ": bad metric tag");
    DissimilarityMatrix m(static_cast<std::size_t>(n), static_cast<MetricKind>(tag));
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            m.set(u, v, std::bit_cast<double>(get_u64_le(in, path)));
        }
    }
    return m;
}

}  // namespace bseg
