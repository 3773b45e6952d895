#include "bseg/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bseg/clustering.hpp"
#include "bseg/csv.hpp"
#include "bseg/errors.hpp"

namespace bseg {

namespace {

std::vector<std::string> split_list(std::string_view v) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        auto next = v.find(',', pos);
        if (next == std::string_view::npos) next = v.size();
        const auto tok = trim(v.substr(pos, next - pos));
        if (!tok.empty()) out.emplace_back(tok);
        pos = next + 1;
        if (next == v.size()) break;
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);

    ExperimentConfig cfg;
    bool have_distances = false, have_methods = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string_view l = trim(line);
        if (l.empty()) continue;
        const auto eq = l.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(path + " line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key{trim(l.substr(0, eq))};
        const std::string val{trim(l.substr(eq + 1))};
        const std::string where = path + " line " + std::to_string(lineno);

        if (key == "source") {
            if (val == "scenario" || val == "synthetic") {
                cfg.source = SourceKind::Synthetic;
            } else if (val == "retail") {
                cfg.source = SourceKind::Retail;
            } else {
                throw ConfigError(where + ": source must be 'scenario' or 'retail'");
            }
        } else if (key == "scenario") {
            const auto s = scenario_from_label(val);
            if (!s) throw ConfigError(where + ": unknown scenario '" + val + "'");
            cfg.scenario.scenario = *s;
        } else if (key == "theta_min") {
            cfg.scenario.theta_min = parse_double(val, where);
        } else if (key == "theta_max") {
            cfg.scenario.theta_max = parse_double(val, where);
        } else if (key == "beta") {
            cfg.scenario.beta = parse_double(val, where);
        } else if (key == "n_per_type") {
            cfg.scenario.n_per_type = static_cast<std::size_t>(parse_int(val, where));
        } else if (key == "p") {
            cfg.scenario.p = static_cast<std::size_t>(parse_int(val, where));
        } else if (key == "max_expenditure") {
            cfg.scenario.max_expenditure = parse_double(val, where);
        } else if (key == "offpref_fraction") {
            cfg.scenario.offpref_fraction = parse_double(val, where);
        } else if (key == "offpref_discount") {
            cfg.scenario.offpref_discount = parse_double(val, where);
        } else if (key == "retail_csv") {
            cfg.retail_csv = val;
        } else if (key == "country") {
            cfg.filter.country = val;
        } else if (key == "date_start") {
            const auto d = parse_date(val);
            if (!d) throw ConfigError(where + ": unparseable date '" + val + "'");
            cfg.filter.start = *d;
        } else if (key == "date_end") {
            const auto d = parse_date(val);
            if (!d) throw ConfigError(where + ": unparseable date '" + val + "'");
            cfg.filter.end = *d;
        } else if (key == "min_items") {
            cfg.filter.min_items_per_customer = static_cast<std::size_t>(parse_int(val, where));
        } else if (key == "mask_fraction") {
            cfg.mask_fraction = parse_double(val, where);
        } else if (key == "distances") {
            cfg.distances.clear();
            for (const auto& tok : split_list(val)) {
                const auto m = metric_from_tag(tok);
                if (!m) throw ConfigError(where + ": unknown distance '" + tok + "'");
                cfg.distances.push_back(*m);
            }
            have_distances = true;
        } else if (key == "methods") {
            cfg.methods.clear();
            for (const auto& tok : split_list(val)) {
                const auto m = method_from_tag(tok);
                if (!m) throw ConfigError(where + ": unknown method '" + tok + "'");
                cfg.methods.push_back(*m);
            }
            have_methods = true;
        } else if (key == "L") {
            cfg.top_l = static_cast<std::size_t>(parse_int(val, where));
        } else if (key == "runs") {
            cfg.runs = static_cast<std::size_t>(parse_int(val, where));
        } else if (key == "k_min") {
            cfg.k_min = static_cast<std::size_t>(parse_int(val, where));
        } else if (key == "k_max") {
            cfg.k_max = static_cast<std::size_t>(parse_int(val, where));
        } else if (key == "pam_restarts") {
            cfg.pam_restarts = static_cast<std::size_t>(parse_int(val, where));
        } else if (key == "base_seed") {
            cfg.base_seed = static_cast<std::uint64_t>(parse_int(val, where));
        } else if (key == "threads") {
            cfg.threads = static_cast<int>(parse_int(val, where));
        } else if (key == "label") {
            cfg.label = val;
        } else {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }

    if (cfg.runs < 1) throw ConfigError(path + ": runs must be >= 1");
    if (cfg.top_l < 1) throw ConfigError(path + ": L must be >= 1");
    if ((have_distances && cfg.distances.empty()) || (have_methods && cfg.methods.empty())) {
        throw ConfigError(path + ": distances and methods must be non-empty");
    }
    if (cfg.source == SourceKind::Retail && cfg.retail_csv.empty()) {
        throw ConfigError(path + ": retail source requires retail_csv");
    }
    if (cfg.label.empty()) {
        cfg.label = cfg.source == SourceKind::Synthetic
                        ? std::string(scenario_label(cfg.scenario.scenario))
                        : "retail";
    }
    return cfg;
}

namespace {

template <class Fn>
auto run_stage(std::size_t run, std::string_view distance, std::string_view stage, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError("run " + std::to_string(run) + ", distance " + std::string(distance) +
                          ", stage " + std::string(stage) + ": " + e.what());
    } catch (const std::exception& e) {
        throw DataError("run " + std::to_string(run) + ", distance " + std::string(distance) +
                        ", stage " + std::string(stage) + ": " + e.what());
    }
}

struct RunData {
    InteractionMatrices full;  // synthetic only; unused for retail
    SplitMatrices split;
};

}  // namespace

ResultTable run_experiment(const ExperimentConfig& cfg) {
    if (cfg.runs < 1 || cfg.top_l < 1 || cfg.distances.empty() || cfg.methods.empty()) {
        throw ConfigError("invalid experiment config");
    }

    ResultTable table;

    // Retail transactions are filter-deterministic: ingest once, split per run.
    std::vector<TransactionRecord> retail_records;
    InteractionMatrices retail_full;
    if (cfg.source == SourceKind::Retail) {
        retail_records = run_stage(0, "-", "ingest",
                                   [&] { return read_transactions_csv(cfg.retail_csv, cfg.filter); });
        retail_full = run_stage(0, "-", "matrix build", [&] { return build_matrices(retail_records); });
    }

    try {
        for (std::size_t run = 0; run < cfg.runs; ++run) {
            const std::uint64_t seed = cfg.base_seed + run;

            SplitMatrices split;
            if (cfg.source == SourceKind::Synthetic) {
                ScenarioSpec spec = cfg.scenario;
                spec.seed = seed;
                SyntheticData data =
                    run_stage(run, "-", "generation", [&] { return generate(spec); });
                split = std::move(data.split);
            } else {
                Rng rng = Rng::stream(seed, {0x6d61736bu /*mask*/});
                split = run_stage(run, "-", "masking",
                                  [&] { return split_by_masking(retail_full, cfg.mask_fraction, rng); });
            }
            const InteractionMatrices& train = split.train;
            const std::vector<double> item_values = train.item_share_totals();

            for (const MetricKind distance : cfg.distances) {
                const auto dname = metric_tag(distance);
                DissimilarityMatrix dm = run_stage(run, dname, "dissimilarity", [&] {
                    return pairwise(train, distance, cfg.threads);
                });
                KSelection sel = run_stage(run, dname, "clustering", [&] {
                    return select_k(dm, cfg.k_min, cfg.k_max,
                                    Rng::stream(seed, {0x70616du /*pam*/,
                                                       static_cast<std::uint64_t>(distance)})
                                        .next(),
                                    cfg.pam_restarts, cfg.threads);
                });
                table.clustering.push_back(
                    {run, seed, distance, sel.best.k, sel.best.mean_silhouette});

                const auto stats = run_stage(run, dname, "cluster stats",
                                             [&] { return cluster_stats(train, sel.best); });

                for (const ScoreMethod method : cfg.methods) {
                    RunMetrics rm;
                    rm.run = run;
                    rm.seed = seed;
                    rm.distance = distance;
                    rm.method = method;
                    run_stage(run, dname, "recommendation", [&] {
                        std::vector<UserMetrics> per_user;
                        std::size_t skipped = 0;
                        for (std::size_t u = 0; u < train.user_count(); ++u) {
                            const auto& test = split.test_baskets[u];
                            if (test.empty()) {
                                ++skipped;
                                continue;
                            }
                            const auto rec =
                                top_l(static_cast<std::uint32_t>(u),
                                      stats[sel.best.assignment[u]], method, cfg.top_l,
                                      train.basket(u));
                            per_user.push_back({precision_at_l(rec, test, cfg.top_l),
                                                ndcg_at_l(rec, test, cfg.top_l),
                                                ndcv_at_l(rec, test, item_values, cfg.top_l)});
                        }
                        rm.report = aggregate(per_user, skipped, cfg.top_l);
                        return 0;
                    });
                    table.detail.push_back(std::move(rm));
                }
            }
        }
    } catch (...) {
        // Keep whatever completed so partial results can still be inspected.
        if (!cfg.output_dir.empty()) write_result_files(cfg, table);
        throw;
    }

    // Aggregate detail rows into mean/std per (method, distance, metric).
    for (const ScoreMethod method : cfg.methods) {
        for (const MetricKind distance : cfg.distances) {
            std::vector<double> prec, ndcg, ndcv;
            for (const auto& rm : table.detail) {
                if (rm.method != method || rm.distance != distance) continue;
                prec.push_back(rm.report.precision);
                ndcg.push_back(rm.report.ndcg);
                ndcv.push_back(rm.report.ndcv);
            }
            auto push = [&](const char* name, const std::vector<double>& xs) {
                double mean = 0.0;
                for (double x : xs) mean += x;
                mean /= static_cast<double>(xs.size());
                double var = 0.0;
                for (double x : xs) var += (x - mean) * (x - mean);
                const double stddev =
                    xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
                table.metric_rows.push_back({method, distance, name, mean, stddev, xs.size()});
            };
            push("precision", prec);
            push("ndcg", ndcg);
            push("ndcv", ndcv);
        }
    }
    for (const MetricKind distance : cfg.distances) {
        ResultTable::ClusterRow row;
        row.distance = distance;
        double sil = 0.0;
        for (const auto& cr : table.clustering) {
            if (cr.distance != distance) continue;
            row.k_histogram[cr.selected_k] += 1;
            sil += cr.mean_silhouette;
            row.runs += 1;
        }
        row.mean_silhouette = row.runs > 0 ? sil / static_cast<double>(row.runs) : 0.0;
        table.cluster_rows.push_back(std::move(row));
    }

    if (!cfg.output_dir.empty()) write_result_files(cfg, table);
    return table;
}

void write_result_files(const ExperimentConfig& cfg, const ResultTable& table) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);

    {
        std::ofstream out(dir / "results.csv");
        if (!out) throw DataError("cannot write results.csv");
        out << "section,method,distance,metric,mean,std,runs,extra\n";
        for (const auto& r : table.metric_rows) {
            out << "metrics," << method_tag(r.method) << ',' << metric_tag(r.distance) << ','
                << r.metric_name << ',' << format_double(r.mean) << ',' << format_double(r.stddev)
                << ',' << r.runs << ",\n";
        }
        for (const auto& r : table.cluster_rows) {
            std::string hist;
            for (const auto& [k, c] : r.k_histogram) {
                if (!hist.empty()) hist += ';';
                hist += std::to_string(k) + "x" + std::to_string(c);
            }
            out << "clustering,," << metric_tag(r.distance) << ",selected_k_hist,,," << r.runs
                << ',' << hist << '\n';
            out << "clustering,," << metric_tag(r.distance) << ",mean_silhouette,"
                << format_double(r.mean_silhouette) << ",," << r.runs << ",\n";
        }
    }
    {
        std::ofstream out(dir / "runs_detail.csv");
        if (!out) throw DataError("cannot write runs_detail.csv");
        out << "run,seed,distance,method,precision,ndcg,ndcv,users_evaluated,users_skipped\n";
        for (const auto& rm : table.detail) {
            out << rm.run << ',' << rm.seed << ',' << metric_tag(rm.distance) << ','
                << method_tag(rm.method) << ',' << format_double(rm.report.precision) << ','
                << format_double(rm.report.ndcg) << ',' << format_double(rm.report.ndcv) << ','
                << rm.report.users_evaluated << ',' << rm.report.users_skipped << '\n';
        }
    }
    {
        std::ofstream out(dir / "clustering.csv");
        if (!out) throw DataError("cannot write clustering.csv");
        out << "run,seed,distance,selected_k,mean_silhouette\n";
        for (const auto& cr : table.clustering) {
            out << cr.run << ',' << cr.seed << ',' << metric_tag(cr.distance) << ','
                << cr.selected_k << ',' << format_double(cr.mean_silhouette) << '\n';
        }
    }
}

namespace {

// Deterministic sparse test data for the timing runs: nnz_per_row random
// columns per user with positive share-like values.
InteractionMatrices bench_matrix(std::size_t n, std::size_t p, std::size_t nnz_per_row,
                                 std::uint64_t seed) {
    std::vector<std::string> users(n), items(p);
    char buf[32];
    for (std::size_t u = 0; u < n; ++u) {
        std::snprintf(buf, sizeof(buf), "u%06zu", u);
        users[u] = buf;
    }
    for (std::size_t j = 0; j < p; ++j) {
        std::snprintf(buf, sizeof(buf), "i%06zu", j);
        items[j] = buf;
    }
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> entries;
    entries.reserve(n * nnz_per_row);
    std::vector<std::uint32_t> cols(p);
    for (std::size_t u = 0; u < n; ++u) {
        Rng rng = Rng::stream(seed, {0x62656e63u /*bench*/, u});
        std::iota(cols.begin(), cols.end(), 0u);
        const std::size_t take = std::min(nnz_per_row, p);
        for (std::size_t s = 0; s < take; ++s) {
            const std::size_t j = s + rng.below(p - s);
            std::swap(cols[s], cols[j]);
        }
        std::vector<std::uint32_t> picked(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(take));
        std::sort(picked.begin(), picked.end());
        for (std::uint32_t c : picked) {
            entries.emplace_back(static_cast<std::uint32_t>(u), c, rng.uniform_open0(1.0));
        }
    }
    return InteractionMatrices::from_indexed(std::move(users), std::move(items), entries);
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t m = xs.size() / 2;
    return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

}  // namespace

BenchResult bench_similarity(const std::vector<std::pair<std::size_t, std::size_t>>& sizes,
                             const std::vector<MetricKind>& metrics, int repeats,
                             std::size_t nnz_per_row, int threads) {
    if (sizes.empty()) throw ConfigError("bench_similarity: sizes must be non-empty");
    if (repeats < 1) throw ConfigError("bench_similarity: repeats must be >= 1");

    using clock = std::chrono::steady_clock;
    BenchResult result;
    for (const MetricKind metric : metrics) {
        std::vector<double> log_n, log_t;
        for (const auto& [n, p] : sizes) {
            const InteractionMatrices data = bench_matrix(n, p, nnz_per_row, 42);
            std::vector<double> times;
            if (metric == MetricKind::MADD) {
                // Criterion of interest is the O(n^3) post-base transform.
                const DissimilarityMatrix base = pairwise(data, MetricKind::Euclidean, threads);
                for (int r = 0; r < repeats; ++r) {
                    const auto t0 = clock::now();
                    const DissimilarityMatrix out = madd_matrix(base, threads);
                    const auto t1 = clock::now();
                    times.push_back(std::chrono::duration<double>(t1 - t0).count() +
                                    0.0 * out.at(0, 1));
                }
            } else {
                for (int r = 0; r < repeats; ++r) {
                    const auto t0 = clock::now();
                    const DissimilarityMatrix out = pairwise(data, metric, threads);
                    const auto t1 = clock::now();
                    times.push_back(std::chrono::duration<double>(t1 - t0).count() +
                                    0.0 * out.at(0, 1));
                }
            }
            const double med = median(times);
            result.rows.push_back({metric, n, p, med});
            log_n.push_back(std::log(static_cast<double>(n)));
            log_t.push_back(std::log(std::max(med, 1e-9)));
        }
        // Least-squares slope of log t against log n.
        const double m = static_cast<double>(log_n.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < log_n.size(); ++i) {
            sx += log_n[i];
            sy += log_t[i];
            sxx += log_n[i] * log_n[i];
            sxy += log_n[i] * log_t[i];
        }
        const double denom = m * sxx - sx * sx;
        result.slope[metric] = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
    }
    return result;
}

void write_timings_csv(const BenchResult& bench, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "row,metric,n,p,value\n";
    for (const auto& r : bench.rows) {
        out << "timing," << metric_tag(r.metric) << ',' << r.n << ',' << r.p << ','
            << format_double(r.median_seconds) << '\n';
    }
    for (const auto& [metric, slope] : bench.slope) {
        out << "slope," << metric_tag(metric) << ",,," << format_double(slope) << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace bseg
