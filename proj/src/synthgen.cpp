#include "bseg/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "bseg/csv.hpp"
#include "bseg/errors.hpp"

namespace bseg {

ConsumerType consumer_type(char name) {
    switch (name) {
        case 'A': return {'A', 0.0, 0.8, 0.1};
        case 'B': return {'B', 0.9, 1.0, 1.0};
        case 'C': return {'C', 0.6, 0.95, 0.4};
        case 'D': return {'D', 0.4, 0.6, 0.4};
        default: throw ConfigError(std::string("unknown consumer type '") + name + "'");
    }
}

std::vector<ConsumerType> scenario_types(Scenario s) {
    switch (s) {
        case Scenario::I: return {consumer_type('A'), consumer_type('B')};
        case Scenario::II: return {consumer_type('A'), consumer_type('B'), consumer_type('C')};
        case Scenario::III:
            return {consumer_type('A'), consumer_type('B'), consumer_type('C'),
                    consumer_type('D')};
    }
    throw ConfigError("unknown scenario");
}

std::string_view scenario_label(Scenario s) {
    switch (s) {
        case Scenario::I: return "I";
        case Scenario::II: return "II";
        case Scenario::III: return "III";
    }
    return "?";
}

std::optional<Scenario> scenario_from_label(std::string_view name) {
    if (name == "I" || name == "1") return Scenario::I;
    if (name == "II" || name == "2") return Scenario::II;
    if (name == "III" || name == "3") return Scenario::III;
    return std::nullopt;
}

namespace {

std::string padded_id(char prefix, std::size_t index, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%c%0*zu", prefix, width, index);
    return buf;
}

int id_width(std::size_t count) {
    int w = 1;
    for (std::size_t v = count > 0 ? count - 1 : 0; v >= 10; v /= 10) ++w;
    return std::max(w, 4);
}

void validate(const ScenarioSpec& spec) {
    if (spec.n_per_type == 0) throw ConfigError("n_per_type must be >= 1");
    if (spec.p < 2) throw ConfigError("p must be >= 2");
    if (!(spec.theta_min > 0.0 && spec.theta_min <= spec.theta_max && spec.theta_max <= 1.0)) {
        throw ConfigError("theta interval must satisfy 0 < theta_min <= theta_max <= 1");
    }
    if (!(spec.beta > 0.0 && spec.beta < 1.0)) throw ConfigError("beta must lie in (0,1)");
    if (!(spec.max_expenditure > 0.0)) throw ConfigError("max_expenditure must be positive");
    if (!(spec.offpref_fraction >= 0.0 && spec.offpref_fraction < 1.0)) {
        throw ConfigError("offpref_fraction must lie in [0,1)");
    }
    if (!(spec.offpref_discount >= 0.0 && spec.offpref_discount <= 1.0)) {
        throw ConfigError("offpref_discount must lie in [0,1]");
    }
}

}  // namespace

SyntheticData generate(const ScenarioSpec& spec) {
    validate(spec);
    const auto types = scenario_types(spec.scenario);
    const std::size_t n = spec.n_per_type * types.size();
    const std::size_t p = spec.p;
    const int uw = id_width(n);
    const int iw = id_width(p);

    std::vector<TransactionRecord> records;
    std::vector<char> labels(n);
    std::vector<std::uint32_t> scratch;
    std::vector<std::uint32_t> positions;

    for (std::size_t t = 0; t < types.size(); ++t) {
        const ConsumerType& type = types[t];
        const auto lo = static_cast<std::size_t>(std::llround(type.range_lo * static_cast<double>(p)));
        const auto hi = static_cast<std::size_t>(std::llround(type.range_hi * static_cast<double>(p)));
        const std::size_t range = hi - lo;
        if (range == 0) throw ConfigError("preferred range is empty; p too small");

        for (std::size_t i = 0; i < spec.n_per_type; ++i) {
            const std::size_t gu = t * spec.n_per_type + i;
            labels[gu] = type.name;
            Rng rng = Rng::stream(spec.seed, {0x636f6e73u /*consumer*/, gu});

            const double theta = rng.uniform(spec.theta_min, spec.theta_max);
            std::size_t count = static_cast<std::size_t>(
                std::max<long long>(1, round_half_up(theta * static_cast<double>(range))));
            count = std::min(count, range);

            // Preferred subset, uniform without replacement.
            scratch.resize(range);
            std::iota(scratch.begin(), scratch.end(), static_cast<std::uint32_t>(lo));
            for (std::size_t s = 0; s < count; ++s) {
                const std::size_t j = s + rng.below(range - s);
                std::swap(scratch[s], scratch[j]);
            }
            std::vector<std::uint32_t> basket(scratch.begin(),
                                              scratch.begin() + static_cast<std::ptrdiff_t>(count));
            std::sort(basket.begin(), basket.end());

            std::vector<double> spend(count);
            for (std::size_t s = 0; s < count; ++s) {
                spend[s] = type.alpha * rng.uniform_open0(spec.max_expenditure);
            }

            // Replace a fixed share of the purchases with off-preference
            // items at discounted expenditure; basket size stays `count`.
            std::size_t n_off = static_cast<std::size_t>(
                std::max<long long>(0, round_half_up(spec.offpref_fraction *
                                                     static_cast<double>(count))));
            n_off = std::min(n_off, count);
            const std::size_t outside = p - range;
            n_off = std::min(n_off, outside);
            if (n_off > 0) {
                positions.resize(count);
                std::iota(positions.begin(), positions.end(), 0u);
                for (std::size_t s = 0; s < n_off; ++s) {
                    const std::size_t j = s + rng.below(count - s);
                    std::swap(positions[s], positions[j]);
                }
                std::vector<std::uint32_t> removed(positions.begin(),
                                                   positions.begin() +
                                                       static_cast<std::ptrdiff_t>(n_off));
                std::sort(removed.begin(), removed.end());

                scratch.resize(outside);
                for (std::size_t w = 0; w < outside; ++w) {
                    scratch[w] = static_cast<std::uint32_t>(w < lo ? w : w + range);
                }
                for (std::size_t s = 0; s < n_off; ++s) {
                    const std::size_t j = s + rng.below(outside - s);
                    std::swap(scratch[s], scratch[j]);
                }
                std::vector<std::uint32_t> incoming(scratch.begin(),
                                                    scratch.begin() +
                                                        static_cast<std::ptrdiff_t>(n_off));
                std::sort(incoming.begin(), incoming.end());

                for (std::size_t s = 0; s < n_off; ++s) {
                    basket[removed[s]] = incoming[s];
                    spend[removed[s]] = type.alpha * rng.uniform_open0(spec.max_expenditure) *
                                        (1.0 - spec.offpref_discount);
                }
            }

            const std::string user = padded_id('u', gu, uw);
            for (std::size_t s = 0; s < count; ++s) {
                records.push_back({user, padded_id('i', basket[s], iw), spend[s], {}, {}});
            }
        }
    }

    SyntheticData data;
    data.full = build_matrices(records);
    data.true_labels = std::move(labels);
    Rng split_rng = Rng::stream(spec.seed, {0x73706c69u /*split*/});
    data.split = split_by_masking(data.full, spec.beta, split_rng);
    return data;
}

void write_labels_csv(const SyntheticData& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "user_id,type\n";
    for (std::size_t u = 0; u < data.full.user_count(); ++u) {
        out << csv_escape(data.full.users()[u]) << ',' << data.true_labels[u] << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace bseg
