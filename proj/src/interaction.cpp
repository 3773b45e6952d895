#include "bseg/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "bseg/csv.hpp"
#include "bseg/errors.hpp"

namespace bseg {

double InteractionMatrices::zero_fraction() const {
    const double cells = static_cast<double>(user_count()) * static_cast<double>(item_count());
    if (cells == 0.0) return 0.0;
    return 1.0 - static_cast<double>(nnz()) / cells;
}

double InteractionMatrices::share_sum() const {
    double s = 0.0;
    for (double v : share_) s += v;
    return s;
}

std::optional<std::uint32_t> InteractionMatrices::user_index(std::string_view id) const {
    auto it = std::lower_bound(users_.begin(), users_.end(), id);
    if (it == users_.end() || *it != id) return std::nullopt;
    return static_cast<std::uint32_t>(it - users_.begin());
}

std::optional<std::uint32_t> InteractionMatrices::item_index(std::string_view id) const {
    auto it = std::lower_bound(items_.begin(), items_.end(), id);
    if (it == items_.end() || *it != id) return std::nullopt;
    return static_cast<std::uint32_t>(it - items_.begin());
}

std::vector<double> InteractionMatrices::item_share_totals() const {
    std::vector<double> totals(item_count(), 0.0);
    for (std::size_t u = 0; u < user_count(); ++u) {
        for (std::size_t i = row_ptr_[u]; i < row_ptr_[u + 1]; ++i) {
            totals[cols_[i]] += share_[i];
        }
    }
    return totals;
}

InteractionMatrices InteractionMatrices::from_indexed(
    std::vector<std::string> users, std::vector<std::string> items,
    const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& entries) {
    InteractionMatrices m;
    m.users_ = std::move(users);
    m.items_ = std::move(items);
    m.row_ptr_.assign(m.users_.size() + 1, 0);
    m.cols_.reserve(entries.size());
    m.expenditure_.reserve(entries.size());
    m.share_.reserve(entries.size());

    double total = 0.0;
    for (const auto& [u, j, v] : entries) total += v;
    if (total <= 0.0) throw DataError("degenerate matrix: total expenditure is zero");

    std::uint32_t prev_u = 0;
    std::uint32_t prev_j = 0;
    bool first = true;
    for (const auto& [u, j, v] : entries) {
        if (!first && (u < prev_u || (u == prev_u && j <= prev_j))) {
            throw DataError("internal: entries not sorted/unique");
        }
        first = false;
        prev_u = u;
        prev_j = j;
        m.row_ptr_[u + 1] += 1;
        m.cols_.push_back(j);
        m.expenditure_.push_back(v);
        m.share_.push_back(v / total);
    }
    for (std::size_t u = 0; u < m.users_.size(); ++u) m.row_ptr_[u + 1] += m.row_ptr_[u];
    m.total_ = total;
    return m;
}

InteractionMatrices build_matrices(const std::vector<TransactionRecord>& log) {
    if (log.empty()) throw DataError("degenerate matrix: empty transaction log");

    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& r = log[i];
        if (!(r.expenditure >= 0.0)) {
            throw DataError("invalid record " + std::to_string(i) + ": negative expenditure for (" +
                            r.user_id + ", " + r.item_id + ")");
        }
        if (r.quantity && r.unit_price) {
            if (*r.quantity < 0.0 || *r.unit_price < 0.0) {
                throw DataError("invalid record " + std::to_string(i) +
                                ": negative quantity or price");
            }
            const double prod = *r.quantity * *r.unit_price;
            const double scale = std::max({1.0, std::abs(prod), std::abs(r.expenditure)});
            if (std::abs(prod - r.expenditure) > 1e-9 * scale) {
                throw DataError("invalid record " + std::to_string(i) +
                                ": expenditure does not equal quantity * unit_price");
            }
        }
    }

    std::vector<std::string> users, items;
    users.reserve(log.size());
    items.reserve(log.size());
    for (const auto& r : log) {
        users.push_back(r.user_id);
        items.push_back(r.item_id);
    }
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());

    std::unordered_map<std::string_view, std::uint32_t> uidx, iidx;
    uidx.reserve(users.size());
    iidx.reserve(items.size());
    for (std::uint32_t i = 0; i < users.size(); ++i) uidx.emplace(users[i], i);
    for (std::uint32_t i = 0; i < items.size(); ++i) iidx.emplace(items[i], i);

    // Aggregate duplicates: sort triplets by (user, item) and merge runs.
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> triplets;
    triplets.reserve(log.size());
    for (const auto& r : log) {
        triplets.emplace_back(uidx.at(r.user_id), iidx.at(r.item_id), r.expenditure);
    }
    std::sort(triplets.begin(), triplets.end(),
              [](const auto& a, const auto& b) {
                  return std::tie(std::get<0>(a), std::get<1>(a)) <
                         std::tie(std::get<0>(b), std::get<1>(b));
              });
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> merged;
    merged.reserve(triplets.size());
    for (const auto& t : triplets) {
        if (!merged.empty() && std::get<0>(merged.back()) == std::get<0>(t) &&
            std::get<1>(merged.back()) == std::get<1>(t)) {
            std::get<2>(merged.back()) += std::get<2>(t);
        } else {
            merged.push_back(t);
        }
    }
    // Zero-expenditure pairs carry no purchase: keep them out of the pattern.
    std::erase_if(merged, [](const auto& t) { return std::get<2>(t) <= 0.0; });
    if (merged.empty()) throw DataError("degenerate matrix: total expenditure is zero");

    return InteractionMatrices::from_indexed(std::move(users), std::move(items), merged);
}

SplitMatrices split_by_masking(const InteractionMatrices& full, double fraction, Rng& rng) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("mask fraction must lie in (0,1)");
    }
    const std::size_t n = full.user_count();
    for (std::size_t u = 0; u < n; ++u) {
        if (full.basket(u).empty()) {
            throw DataError("user " + full.users()[u] + " has an empty basket; cannot split");
        }
    }

    SplitMatrices out;
    out.mask_fraction = fraction;
    out.test_baskets.resize(n);

    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> kept;
    kept.reserve(full.nnz());
    std::vector<std::uint32_t> positions;
    for (std::size_t u = 0; u < n; ++u) {
        const auto cols = full.basket(u);
        const auto exps = full.row_expenditure(u);
        const std::size_t b = cols.size();
        std::size_t mask_count =
            static_cast<std::size_t>(round_half_up(fraction * static_cast<double>(b)));

        positions.resize(b);
        std::iota(positions.begin(), positions.end(), 0u);

        std::vector<bool> masked(b, false);
        if (mask_count >= b) {
            // Whole basket selected: keep one uniformly chosen item in train.
            const std::size_t keep = rng.below(b);
            for (std::size_t i = 0; i < b; ++i) masked[i] = (i != keep);
            ++out.forced_keep_count;
        } else {
            for (std::size_t i = 0; i < mask_count; ++i) {
                const std::size_t j = i + rng.below(b - i);
                std::swap(positions[i], positions[j]);
                masked[positions[i]] = true;
            }
        }
        for (std::size_t i = 0; i < b; ++i) {
            if (masked[i]) {
                out.test_baskets[u].push_back(cols[i]);
            } else {
                kept.emplace_back(static_cast<std::uint32_t>(u), cols[i], exps[i]);
            }
        }
        std::sort(out.test_baskets[u].begin(), out.test_baskets[u].end());
    }

    out.train = InteractionMatrices::from_indexed(full.users(), full.items(), kept);
    return out;
}

std::optional<Date> parse_date(std::string_view s) {
    s = trim(s);
    // Drop a time suffix ("... 08:26" / "... 08:26:00").
    if (auto sp = s.find(' '); sp != std::string_view::npos) s = s.substr(0, sp);

    char sep = 0;
    for (char c : s) {
        if (c == '-' || c == '/') {
            sep = c;
            break;
        }
    }
    if (sep == 0) return std::nullopt;

    int part[3] = {0, 0, 0};
    int nparts = 0;
    std::size_t pos = 0;
    std::size_t first_len = 0;
    while (pos <= s.size() && nparts < 3) {
        std::size_t next = s.find(sep, pos);
        if (next == std::string_view::npos) next = s.size();
        std::string_view tok = s.substr(pos, next - pos);
        if (tok.empty() || tok.size() > 4) return std::nullopt;
        int v = 0;
        for (char c : tok) {
            if (c < '0' || c > '9') return std::nullopt;
            v = v * 10 + (c - '0');
        }
        if (nparts == 0) first_len = tok.size();
        part[nparts++] = v;
        pos = next + 1;
        if (next == s.size()) break;
    }
    if (nparts != 3) return std::nullopt;

    Date d;
    if (first_len == 4) {  // YYYY-MM-DD
        d = {part[0], part[1], part[2]};
    } else {  // M/D/YYYY
        d = {part[2], part[0], part[1]};
    }
    if (d.year < 1 || d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) return std::nullopt;
    return d;
}

namespace {

// "12345.0" and "12345" must name the same customer regardless of how the
// source spreadsheet was exported.
std::string normalize_customer_id(std::string_view raw) {
    std::string s(trim(raw));
    const auto dot = s.find('.');
    if (dot == std::string::npos) return s;
    bool integral = dot > 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (i == dot) continue;
        if (c < '0' || c > '9') return s;
        if (i > dot && c != '0') integral = false;
    }
    if (!integral) return s;
    return s.substr(0, dot);
}

std::vector<std::string> read_all_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<TransactionRecord> read_generic_csv(const std::vector<std::string>& lines,
                                                const std::string& path) {
    std::vector<TransactionRecord> records;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        if (trim(lines[row]).empty()) continue;
        auto f = split_csv_line(lines[row]);
        if (f.size() != 3) {
            throw DataError(path + " row " + std::to_string(row + 1) +
                            ": expected 3 columns, got " + std::to_string(f.size()));
        }
        TransactionRecord r;
        r.user_id = std::string(trim(f[0]));
        r.item_id = std::string(trim(f[1]));
        r.expenditure =
            parse_double(f[2], path + " row " + std::to_string(row + 1) + " column expenditure");
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace

std::vector<TransactionRecord> ingest_retail_csv(const std::string& path,
                                                 const RetailFilter& filter) {
    const auto lines = read_all_lines(path);
    if (lines.empty()) throw DataError(path + ": empty file");

    const auto header = split_csv_line(lines[0]);
    const char* required[] = {"Invoice",     "StockCode", "Description", "Quantity",
                              "InvoiceDate", "Price",     "Customer ID", "Country"};
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = i;
    for (const char* name : required) {
        if (!col.count(name)) {
            throw DataError(path + ": missing required column '" + std::string(name) + "'");
        }
    }
    const std::size_t c_stock = col["StockCode"], c_qty = col["Quantity"],
                      c_date = col["InvoiceDate"], c_price = col["Price"],
                      c_cust = col["Customer ID"], c_country = col["Country"];

    std::vector<TransactionRecord> records;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        if (trim(lines[row]).empty()) continue;
        const std::string where = path + " row " + std::to_string(row + 1);
        auto f = split_csv_line(lines[row]);
        if (f.size() <= std::max({c_stock, c_qty, c_date, c_price, c_cust, c_country})) {
            throw DataError(where + ": too few columns");
        }
        const std::string customer = normalize_customer_id(f[c_cust]);
        if (customer.empty()) continue;
        if (!filter.country.empty() && std::string(trim(f[c_country])) != filter.country) continue;

        const auto date = parse_date(f[c_date]);
        if (!date) throw DataError(where + " column InvoiceDate: unparseable date '" + f[c_date] + "'");
        if (*date < filter.start || filter.end < *date) continue;

        const double qty = parse_double(f[c_qty], where + " column Quantity");
        const double price = parse_double(f[c_price], where + " column Price");
        if (qty <= 0.0 || price <= 0.0) continue;

        TransactionRecord r;
        r.user_id = customer;
        r.item_id = std::string(trim(f[c_stock]));
        r.quantity = qty;
        r.unit_price = price;
        r.expenditure = qty * price;
        records.push_back(std::move(r));
    }

    if (filter.min_items_per_customer > 1) {
        std::unordered_map<std::string, std::unordered_set<std::string>> distinct;
        for (const auto& r : records) distinct[r.user_id].insert(r.item_id);
        std::erase_if(records, [&](const TransactionRecord& r) {
            return distinct[r.user_id].size() < filter.min_items_per_customer;
        });
    }
    return records;
}

std::vector<TransactionRecord> read_transactions_csv(const std::string& path,
                                                     const RetailFilter& filter) {
    const auto lines = read_all_lines(path);
    if (lines.empty()) throw DataError(path + ": empty file");
    const auto header = split_csv_line(lines[0]);
    if (header.size() >= 3 && trim(header[0]) == "user_id" && trim(header[1]) == "item_id" &&
        trim(header[2]) == "expenditure") {
        return read_generic_csv(lines, path);
    }
    if (!header.empty() && trim(header[0]) == "Invoice") {
        return ingest_retail_csv(path, filter);
    }
    throw DataError(path + ": unrecognized header; expected the generic "
                    "user_id,item_id,expenditure form or the Online Retail II schema");
}

void write_matrix_csv(const InteractionMatrices& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "user_id,item_id,expenditure\n";
    for (std::size_t u = 0; u < m.user_count(); ++u) {
        const auto cols = m.basket(u);
        const auto exps = m.row_expenditure(u);
        for (std::size_t i = 0; i < cols.size(); ++i) {
            out << csv_escape(m.users()[u]) << ',' << csv_escape(m.items()[cols[i]]) << ','
                << format_double(exps[i]) << '\n';
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

void write_split_manifest(const SplitMatrices& split, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "user_id,item_id\n";
    const auto& m = split.train;
    for (std::size_t u = 0; u < split.test_baskets.size(); ++u) {
        for (std::uint32_t j : split.test_baskets[u]) {
            out << csv_escape(m.users()[u]) << ',' << csv_escape(m.items()[j]) << '\n';
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

std::vector<std::vector<std::uint32_t>> read_split_manifest(const std::string& path,
                                                            const InteractionMatrices& m) {
    const auto lines = read_all_lines(path);
    std::vector<std::vector<std::uint32_t>> baskets(m.user_count());
    std::size_t start = 0;
    if (!lines.empty() && trim(lines[0]) == "user_id,item_id") start = 1;
    for (std::size_t row = start; row < lines.size(); ++row) {
        if (trim(lines[row]).empty()) continue;
        auto f = split_csv_line(lines[row]);
        if (f.size() != 2) {
            throw DataError(path + " row " + std::to_string(row + 1) + ": expected 2 columns");
        }
        const auto u = m.user_index(trim(f[0]));
        const auto j = m.item_index(trim(f[1]));
        if (!u) throw DataError(path + " row " + std::to_string(row + 1) + ": unknown user '" + f[0] + "'");
        if (!j) throw DataError(path + " row " + std::to_string(row + 1) + ": unknown item '" + f[1] + "'");
        baskets[*u].push_back(*j);
    }
    for (auto& b : baskets) std::sort(b.begin(), b.end());
    return baskets;
}

}  // namespace bseg
