#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "bseg/interaction.hpp"

namespace bseg {

/// One synthetic consumer type: a preferred item range (half-open, as
/// fractions of the catalog size) and a demand scale on expenditures.
struct ConsumerType {
    char name = 'A';
    double range_lo = 0.0;
    double range_hi = 1.0;
    double alpha = 1.0;
};

/// The canonical four: A = [0, 0.8p) α=0.1, B = [0.9p, p) α=1.0,
/// C = [0.6p, 0.95p) α=0.4, D = [0.4p, 0.6p) α=0.4.
ConsumerType consumer_type(char name);

enum class Scenario { I, II, III };  // types {A,B}, {A,B,C}, {A,B,C,D}

std::vector<ConsumerType> scenario_types(Scenario s);
std::string_view scenario_label(Scenario s);
std::optional<Scenario> scenario_from_label(std::string_view name);

struct ScenarioSpec {
    Scenario scenario = Scenario::I;
    std::size_t n_per_type = 150;
    std::size_t p = 1500;
    double max_expenditure = 10000.0;  // M of the uniform expenditure draw
    double theta_min = 0.85;
    double theta_max = 0.95;
    double beta = 0.95;  // fraction of each basket masked into the test set
    double offpref_fraction = 0.05;
    double offpref_discount = 0.20;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    InteractionMatrices full;
    SplitMatrices split;
    std::vector<char> true_labels;  // per user index, 'A'..'D'
};

/// Generates the synthetic population. Per consumer: draw θ ~ U[θmin, θmax],
/// pick round_half_up(θ·|range|) preferred items without replacement, give
/// each an expenditure α·U(0,M], replace round_half_up(5%·basket) purchases
/// with items outside the range at a 20% discount, then mask a β fraction of
/// the basket into the test set. Each consumer draws from its own PRNG
/// stream keyed by (seed, consumer index), so output is independent of
/// generation order; the whole result is deterministic in the spec.
SyntheticData generate(const ScenarioSpec& spec);

/// `user_id,type` rows.
void write_labels_csv(const SyntheticData& data, const std::string& path);

}  // namespace bseg
