#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bseg/interaction.hpp"
#include "bseg/metrics.hpp"
#include "bseg/recommend.hpp"
#include "bseg/similarity.hpp"
#include "bseg/synthgen.hpp"

namespace bseg {

enum class SourceKind { Synthetic, Retail };

struct ExperimentConfig {
    SourceKind source = SourceKind::Synthetic;
    ScenarioSpec scenario;      // synthetic source (seed is set per run)
    std::string retail_csv;     // retail source
    RetailFilter filter;
    double mask_fraction = 0.5;

    std::vector<MetricKind> distances{MetricKind::MADD, MetricKind::Jaccard, MetricKind::Cosine,
                                      MetricKind::Euclidean};
    std::vector<ScoreMethod> methods{ScoreMethod::Popularity, ScoreMethod::Revenue,
                                     ScoreMethod::ExpProfit};
    std::size_t top_l = 10;
    std::size_t runs = 50;
    std::size_t k_min = 2;
    std::size_t k_max = 8;
    std::size_t pam_restarts = 5;
    std::uint64_t base_seed = 1;
    int threads = 0;
    std::string output_dir;  // empty = do not write files
    std::string label;       // scenario column of the reports
};

/// Flat `key = value` file; `#` starts a comment; lists are comma-separated.
ExperimentConfig parse_config_file(const std::string& path);

struct RunMetrics {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    MetricKind distance = MetricKind::MADD;
    ScoreMethod method = ScoreMethod::Popularity;
    EvalReport report;
};

struct ClusteringRecord {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    MetricKind distance = MetricKind::MADD;
    std::size_t selected_k = 0;
    double mean_silhouette = 0.0;
};

struct ResultTable {
    struct MetricRow {
        ScoreMethod method;
        MetricKind distance;
        std::string metric_name;  // "precision" | "ndcg" | "ndcv"
        double mean = 0.0;
        double stddev = 0.0;
        std::size_t runs = 0;
    };
    struct ClusterRow {
        MetricKind distance;
        std::map<std::size_t, std::size_t> k_histogram;
        double mean_silhouette = 0.0;
        std::size_t runs = 0;
    };
    std::vector<MetricRow> metric_rows;
    std::vector<ClusterRow> cluster_rows;
    std::vector<RunMetrics> detail;
    std::vector<ClusteringRecord> clustering;
};

/// Runs the full protocol: per run derive seed base_seed+run, generate or
/// ingest+split, and for every configured distance cluster via silhouette
/// k selection, recommend top-L per user per method, and evaluate against
/// the held-out baskets. Writes results.csv / runs_detail.csv /
/// clustering.csv into output_dir when set. On a stage error, files for the
/// completed runs are still written and the error names (run, distance,
/// stage).
ResultTable run_experiment(const ExperimentConfig& cfg);

void write_result_files(const ExperimentConfig& cfg, const ResultTable& table);

struct BenchRow {
    MetricKind metric;
    std::size_t n = 0;
    std::size_t p = 0;
    double median_seconds = 0.0;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    std::map<MetricKind, double> slope;  // fitted log–log slope in n
};

/// Times pairwise construction (MADD: the post-base transform only) on
/// synthetic sparse data of the given sizes and fits the log–log slope.
BenchResult bench_similarity(const std::vector<std::pair<std::size_t, std::size_t>>& sizes,
                             const std::vector<MetricKind>& metrics, int repeats,
                             std::size_t nnz_per_row = 64, int threads = 1);

void write_timings_csv(const BenchResult& bench, const std::string& path);

}  // namespace bseg
