#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "bseg/clustering.hpp"
#include "bseg/csv.hpp"
#include "bseg/errors.hpp"
#include "bseg/harness.hpp"
#include "bseg/interaction.hpp"
#include "bseg/metrics.hpp"
#include "bseg/recommend.hpp"
#include "bseg/similarity.hpp"
#include "bseg/synthgen.hpp"

namespace fs = std::filesystem;
using namespace bseg;

namespace {

struct CommonOpts {
    std::string out = ".";
    std::uint64_t seed = 1;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--out", opts.out, "Output directory");
    cmd->add_option("--seed", opts.seed, "Base random seed");
    cmd->add_option("--threads", opts.threads, "Worker threads (0 = auto)");
}

MetricKind parse_metric(const std::string& tag) {
    const auto m = metric_from_tag(tag);
    if (!m) throw ConfigError("unknown distance '" + tag + "'");
    return *m;
}

ScoreMethod parse_method(const std::string& tag) {
    const auto m = method_from_tag(tag);
    if (!m) throw ConfigError("unknown method '" + tag + "'");
    return *m;
}

InteractionMatrices load_matrix(const std::string& path) {
    return build_matrices(read_transactions_csv(path));
}

int cmd_simulate(const CommonOpts& common, const ScenarioSpec& spec_in) {
    ScenarioSpec spec = spec_in;
    spec.seed = common.seed;
    const SyntheticData data = generate(spec);
    fs::create_directories(common.out);
    const fs::path dir(common.out);
    write_matrix_csv(data.full, (dir / "full.csv").string());
    write_matrix_csv(data.split.train, (dir / "train.csv").string());
    write_split_manifest(data.split, (dir / "mask.csv").string());
    write_labels_csv(data, (dir / "labels.csv").string());
    std::cout << "simulated scenario " << scenario_label(spec.scenario) << ": "
              << data.full.user_count() << " users x " << data.full.item_count() << " items, "
              << data.full.nnz() << " purchases (" << data.split.train.nnz() << " train)\n";
    if (data.split.forced_keep_count > 0) {
        std::cout << "warning: " << data.split.forced_keep_count
                  << " users kept a single forced training item\n";
    }
    return 0;
}

int cmd_ingest(const CommonOpts& common, const std::string& input, const RetailFilter& filter) {
    const auto records = read_transactions_csv(input, filter);
    if (records.empty()) throw DataError("no transactions left after filtering");
    const auto matrices = build_matrices(records);
    fs::create_directories(common.out);
    write_matrix_csv(matrices, (fs::path(common.out) / "matrix.csv").string());
    std::cout << "ingested " << records.size() << " transactions: " << matrices.user_count()
              << " users x " << matrices.item_count() << " items, sparsity "
              << format_double(matrices.zero_fraction()) << "\n";
    return 0;
}

int cmd_cluster(const CommonOpts& common, const std::string& input, const std::string& distance,
                std::size_t k_fixed, std::size_t k_min, std::size_t k_max, std::size_t restarts,
                bool save_dissim) {
    const auto matrices = load_matrix(input);
    const MetricKind metric = parse_metric(distance);
    const DissimilarityMatrix dm = pairwise(matrices, metric, common.threads);

    ClusteringModel model;
    if (k_fixed > 0) {
        Rng rng = Rng::stream(common.seed, {0x70616du, k_fixed});
        model = pam(dm, k_fixed, rng);
    } else {
        const KSelection sel = select_k(dm, k_min, k_max, common.seed, restarts, common.threads);
        for (const auto& [k, sil] : sel.silhouette_by_k) {
            std::cout << "k=" << k << " silhouette=" << format_double(sil) << "\n";
        }
        model = sel.best;
    }
    fs::create_directories(common.out);
    save_model(model, matrices.users(), (fs::path(common.out) / "model.txt").string());
    if (save_dissim) dm.save((fs::path(common.out) / "dissim.bin").string());
    std::cout << "selected k=" << model.k << " mean_silhouette="
              << format_double(model.mean_silhouette) << " total_cost="
              << format_double(model.total_cost) << "\n";
    return 0;
}

int cmd_recommend(const CommonOpts& common, const std::string& input, const std::string& model_path,
                  const std::string& method_tag_str, const std::string& distance,
                  std::size_t top_count) {
    const auto matrices = load_matrix(input);
    const auto model = load_model(model_path, matrices.users());
    const ScoreMethod method = parse_method(method_tag_str);
    const MetricKind metric = parse_metric(distance);

    const auto stats = cluster_stats(matrices, model);
    std::vector<RecommendationList> lists;
    lists.reserve(matrices.user_count());
    for (std::size_t u = 0; u < matrices.user_count(); ++u) {
        lists.push_back(top_l(static_cast<std::uint32_t>(u), stats[model.assignment[u]], method,
                              top_count, matrices.basket(u)));
    }
    fs::create_directories(common.out);
    write_recommendations_csv((fs::path(common.out) / "recommendations.csv").string(), lists,
                              matrices.users(), matrices.items(), metric);
    std::cout << "wrote top-" << top_count << " lists for " << lists.size() << " users\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& common, const std::string& recs_path,
                 const std::string& train_path, const std::string& test_path,
                 const std::string& label, std::size_t top_count) {
    const auto train = load_matrix(train_path);
    const auto test_baskets = read_split_manifest(test_path, train);
    const auto item_values = train.item_share_totals();

    // Group recommendation rows by (method, metric).
    std::ifstream in(recs_path);
    if (!in) throw DataError("cannot open file: " + recs_path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "user_id,rank,item_id,score,method,metric") {
        throw DataError(recs_path + ": expected header user_id,rank,item_id,score,method,metric");
    }
    std::map<std::pair<std::string, std::string>, std::vector<std::vector<std::uint32_t>>> groups;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 6) {
            throw DataError(recs_path + " row " + std::to_string(lineno) + ": expected 6 columns");
        }
        const auto u = train.user_index(trim(f[0]));
        const auto j = train.item_index(trim(f[2]));
        if (!u) throw DataError(recs_path + " row " + std::to_string(lineno) + ": unknown user");
        if (!j) throw DataError(recs_path + " row " + std::to_string(lineno) + ": unknown item");
        auto& lists = groups[{std::string(trim(f[4])), std::string(trim(f[5]))}];
        if (lists.empty()) lists.resize(train.user_count());
        lists[*u].push_back(*j);  // rows are rank-ordered per user
    }

    fs::create_directories(common.out);
    std::ofstream out(fs::path(common.out) / "report.csv");
    if (!out) throw DataError("cannot write report.csv");
    out << "scenario,method,metric_kind,distance,precision,ndcg,ndcv,users_evaluated,"
           "users_skipped,run_seed\n";
    for (const auto& [key, lists] : groups) {
        const auto metric = metric_from_tag(key.second);
        std::vector<UserMetrics> per_user;
        std::size_t skipped = 0;
        for (std::size_t u = 0; u < train.user_count(); ++u) {
            if (test_baskets[u].empty()) {
                ++skipped;
                continue;
            }
            RecommendationList rec;
            rec.user = static_cast<std::uint32_t>(u);
            rec.items = lists[u];
            per_user.push_back({precision_at_l(rec, test_baskets[u], top_count),
                                ndcg_at_l(rec, test_baskets[u], top_count),
                                ndcv_at_l(rec, test_baskets[u], item_values, top_count)});
        }
        const EvalReport rep = aggregate(per_user, skipped, top_count);
        out << label << ',' << key.first << ','
            << (metric ? metric_name(*metric) : std::string_view("?")) << ',' << key.second << ','
            << format_double(rep.precision) << ',' << format_double(rep.ndcg) << ','
            << format_double(rep.ndcv) << ',' << rep.users_evaluated << ',' << rep.users_skipped
            << ',' << common.seed << '\n';
        std::cout << key.first << "/" << key.second << ": precision@" << top_count << "="
                  << format_double(rep.precision) << " ndcg=" << format_double(rep.ndcg)
                  << " ndcv=" << format_double(rep.ndcv) << "\n";
    }
    return 0;
}

int cmd_experiment(const CommonOpts& common, const std::string& config_path, bool seed_set) {
    ExperimentConfig cfg = parse_config_file(config_path);
    if (seed_set) cfg.base_seed = common.seed;
    if (common.threads != 0) cfg.threads = common.threads;
    cfg.output_dir = common.out;
    const ResultTable table = run_experiment(cfg);
    std::cout << "wrote " << table.metric_rows.size() << " result rows over " << cfg.runs
              << " runs to " << common.out << "\n";
    for (const auto& r : table.metric_rows) {
        std::cout << method_tag(r.method) << '/' << metric_tag(r.distance) << ' ' << r.metric_name
                  << " = " << format_double(r.mean) << " (" << format_double(r.stddev) << ")\n";
    }
    return 0;
}

int cmd_bench(const CommonOpts& common, const std::string& metric_arg, const std::string& sizes_arg,
              std::size_t p, std::size_t nnz, int repeats) {
    std::vector<MetricKind> metrics;
    if (metric_arg == "all") {
        metrics = {MetricKind::Euclidean, MetricKind::Cosine, MetricKind::Jaccard,
                   MetricKind::MADD};
    } else {
        metrics = {parse_metric(metric_arg)};
    }
    std::vector<std::pair<std::size_t, std::size_t>> sizes;
    std::size_t pos = 0;
    const std::string s = sizes_arg;
    while (pos <= s.size()) {
        auto next = s.find(',', pos);
        if (next == std::string::npos) next = s.size();
        const auto tok = trim(std::string_view(s).substr(pos, next - pos));
        if (!tok.empty()) {
            sizes.emplace_back(static_cast<std::size_t>(parse_int(tok, "--sizes")), p);
        }
        pos = next + 1;
        if (next == s.size()) break;
    }
    const BenchResult bench =
        bench_similarity(sizes, metrics, repeats, nnz, common.threads == 0 ? 1 : common.threads);
    fs::create_directories(common.out);
    write_timings_csv(bench, (fs::path(common.out) / "timings.csv").string());
    for (const auto& [metric, slope] : bench.slope) {
        std::cout << metric_tag(metric) << " log-log slope in n: " << format_double(slope) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bseg: revenue-share basket segmentation and value-aware recommendation"};
    app.require_subcommand(1);

    CommonOpts common;

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic consumer population");
    ScenarioSpec spec;
    std::string scenario_arg = "I";
    sim->add_option("--scenario", scenario_arg, "Scenario: I, II, or III");
    sim->add_option("--theta-min", spec.theta_min, "Heterogeneity lower bound");
    sim->add_option("--theta-max", spec.theta_max, "Heterogeneity upper bound");
    sim->add_option("--beta", spec.beta, "Masked fraction of each basket");
    sim->add_option("--n-per-type", spec.n_per_type, "Consumers per type");
    sim->add_option("--p", spec.p, "Catalog size");
    sim->add_option("--max-expenditure", spec.max_expenditure, "Uniform expenditure upper bound");
    sim->add_option("--offpref-fraction", spec.offpref_fraction, "Off-preference purchase share");
    sim->add_option("--offpref-discount", spec.offpref_discount, "Off-preference discount");
    add_common(sim, common);

    // ingest
    auto* ing = app.add_subcommand("ingest", "Read a transaction CSV and write the matrix triplets");
    std::string ingest_in;
    RetailFilter filter;
    std::string date_start, date_end;
    ing->add_option("--in", ingest_in, "Input CSV (generic or Online Retail II)")->required();
    ing->add_option("--country", filter.country, "Keep only this country");
    ing->add_option("--date-start", date_start, "Inclusive start date");
    ing->add_option("--date-end", date_end, "Inclusive end date");
    ing->add_option("--min-items", filter.min_items_per_customer,
                    "Minimum distinct items per customer");
    add_common(ing, common);

    // cluster
    auto* clu = app.add_subcommand("cluster", "PAM k-medoids over a dissimilarity matrix");
    std::string cluster_in, cluster_distance = "madd";
    std::size_t k_fixed = 0, k_min = 2, k_max = 8, restarts = 5;
    bool save_dissim = false;
    clu->add_option("--in", cluster_in, "Matrix CSV")->required();
    clu->add_option("--distance", cluster_distance, "euclidean|cosine|jaccard|madd");
    clu->add_option("--k", k_fixed, "Fixed k (skips silhouette selection)");
    clu->add_option("--k-min", k_min, "Smallest k scanned");
    clu->add_option("--k-max", k_max, "Largest k scanned");
    clu->add_option("--restarts", restarts, "PAM restarts per k");
    clu->add_flag("--save-dissim", save_dissim, "Also write dissim.bin");
    add_common(clu, common);

    // recommend
    auto* rec = app.add_subcommand("recommend", "Top-L lists for every user");
    std::string rec_in, rec_model, rec_method = "popularity", rec_distance = "madd";
    std::size_t rec_l = 10;
    rec->add_option("--in", rec_in, "Training matrix CSV")->required();
    rec->add_option("--model", rec_model, "Clustering model file")->required();
    rec->add_option("--method", rec_method, "popularity|revenue|expprofit");
    rec->add_option("--distance", rec_distance, "Metric tag recorded in the output");
    rec->add_option("-L,--top", rec_l, "List length");
    add_common(rec, common);

    // evaluate
    auto* eva = app.add_subcommand("evaluate", "Score recommendation lists against test baskets");
    std::string eva_recs, eva_train, eva_test, eva_label = "unknown";
    std::size_t eva_l = 10;
    eva->add_option("--recs", eva_recs, "Recommendations CSV")->required();
    eva->add_option("--train", eva_train, "Training matrix CSV")->required();
    eva->add_option("--test", eva_test, "Mask manifest CSV")->required();
    eva->add_option("--scenario-label", eva_label, "Scenario column value");
    eva->add_option("-L,--top", eva_l, "List length");
    add_common(eva, common);

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run the full repeated protocol from a config");
    std::string exp_config;
    exp->add_option("--config", exp_config, "Config file")->required();
    add_common(exp, common);

    // bench
    auto* ben = app.add_subcommand("bench", "Similarity construction timing and cost exponents");
    std::string bench_metric = "all", bench_sizes = "200,283,400,566,800";
    std::size_t bench_p = 1024, bench_nnz = 64;
    int bench_repeats = 3;
    ben->add_option("--metric", bench_metric, "Metric tag or 'all'");
    ben->add_option("--sizes", bench_sizes, "Comma-separated user counts");
    ben->add_option("--p", bench_p, "Catalog size");
    ben->add_option("--nnz", bench_nnz, "Purchases per user");
    ben->add_option("--repeats", bench_repeats, "Timing repeats per size");
    add_common(ben, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) {
            const auto s = scenario_from_label(scenario_arg);
            if (!s) throw ConfigError("unknown scenario '" + scenario_arg + "'");
            spec.scenario = *s;
            return cmd_simulate(common, spec);
        }
        if (ing->parsed()) {
            if (!date_start.empty()) {
                const auto d = parse_date(date_start);
                if (!d) throw ConfigError("unparseable --date-start '" + date_start + "'");
                filter.start = *d;
            }
            if (!date_end.empty()) {
                const auto d = parse_date(date_end);
                if (!d) throw ConfigError("unparseable --date-end '" + date_end + "'");
                filter.end = *d;
            }
            return cmd_ingest(common, ingest_in, filter);
        }
        if (clu->parsed()) {
            return cmd_cluster(common, cluster_in, cluster_distance, k_fixed, k_min, k_max,
                               restarts, save_dissim);
        }
        if (rec->parsed()) {
            return cmd_recommend(common, rec_in, rec_model, rec_method, rec_distance, rec_l);
        }
        if (eva->parsed()) {
            return cmd_evaluate(common, eva_recs, eva_train, eva_test, eva_label, eva_l);
        }
        if (exp->parsed()) {
            return cmd_experiment(common, exp_config, exp->count("--seed") > 0);
        }
        if (ben->parsed()) {
            return cmd_bench(common, bench_metric, bench_sizes, bench_p, bench_nnz, bench_repeats);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
