#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace green {

// Errors. The CLI maps these onto exit codes (input 2, collision 3, numerical 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class OutputCollision : public Error {
public:
    using Error::Error;
};

enum class DomainTag { vision, nlp, recsys, synthetic };

std::string_view to_string(DomainTag tag);
DomainTag parse_domain_tag(std::string_view text);

enum class Provenance { predicted, truth };

std::string_view to_string(Provenance p);

// Feature groups, in the order they are concatenated for the predictor.
enum class FeatureGroup : std::size_t { task = 0, data = 1, model = 2, infra = 3 };
inline constexpr std::size_t kFeatureGroups = 4;
inline constexpr std::array<std::string_view, kFeatureGroups> kFeatureGroupNames{"task", "data", "model", "infra"};

using FeatureWidths = std::array<std::size_t, kFeatureGroups>;

/// Per-group feature values with an aligned 0/1 mask. Padded slots hold value 0, mask 0.
struct FeatureVector {
    std::array<std::vector<double>, kFeatureGroups> values;
    std::array<std::vector<std::uint8_t>, kFeatureGroups> mask;

    const std::vector<double>& group(FeatureGroup g) const { return values[static_cast<std::size_t>(g)]; }

    FeatureWidths widths() const;

    /// Unpadded features: every mask bit set.
    static FeatureVector from_values(std::array<std::vector<double>, kFeatureGroups> values);

    /// Pads each group with zeros (mask 0) up to `widths`. Throws InputError if a group is wider.
    FeatureVector padded(const FeatureWidths& widths) const;

    bool operator==(const FeatureVector&) const = default;
};

struct Hyperparams {
    int batch_size = 1;
    double learning_rate = 1e-3;

    /// Throws InputError unless batch_size >= 1 and learning_rate > 0.
    void validate() const;

    bool operator==(const Hyperparams&) const = default;
};

struct EpochPoint {
    int epoch = 1;
    double accuracy = 0.0;
    double energy = 0.0;

    bool operator==(const EpochPoint&) const = default;
};

struct ConfigRecord {
    std::string config_id;
    std::string dataset_id;
    DomainTag domain_tag = DomainTag::synthetic;
    double discard_pct = 0.0;
    FeatureVector features;
    Hyperparams hyperparams;
    std::vector<EpochPoint> curve;

    int max_epoch() const { return curve.empty() ? 0 : curve.back().epoch; }

    /// Checks the record invariants: non-empty 1..V curve, cumulative energy, valid hyperparams.
    void validate() const;

    bool operator==(const ConfigRecord&) const = default;
};

/// Uniqueness key of a record within a corpus.
struct RecordKey {
    std::string config_id;
    std::string dataset_id;
    int batch_size;
    double learning_rate;
    double discard_pct;

    auto operator<=>(const RecordKey&) const = default;
};

RecordKey key_of(const ConfigRecord& r);

/// Clamps a finite value into [0,1]. Throws InputError on NaN or infinity.
double clamp_unit(double x);

/// A (configuration, epoch) solution in the normalized objective space.
struct CandidatePoint {
    std::string config_id;
    int epoch = 1;
    double acc = 0.0;
    double energy = 0.0;
    Provenance provenance = Provenance::predicted;

    CandidatePoint() = default;
    /// Clamps acc and energy into [0,1].
    CandidatePoint(std::string config_id, int epoch, double acc, double energy,
                   Provenance provenance = Provenance::predicted);

    bool operator==(const CandidatePoint&) const = default;
};

/// True iff p is at least as good as q in both objectives and strictly better in one.
/// Accuracy is maximized, energy minimized.
inline bool dominates(const CandidatePoint& p, const CandidatePoint& q) noexcept
{
    return p.acc >= q.acc && p.energy <= q.energy && (p.acc > q.acc || p.energy < q.energy);
}

enum class RankStrategy { weighted_score, distance_to_ideal };

std::string_view to_string(RankStrategy s);
RankStrategy parse_rank_strategy(std::string_view text);

struct PreferenceSpec {
    double omega_a = 0.5;
    double omega_e = 0.5;
    double gamma = 0.0;
    int top_k = 10;
    RankStrategy strategy = RankStrategy::weighted_score;
    // Evaluate the score exactly as omega_a*acc - (1 - omega_e)*energy.
    bool literal_score = false;

    /// Builds a spec from omega_a alone, omega_e = 1 - omega_a.
    static PreferenceSpec from_omega_a(double omega_a, double gamma = 0.0, int top_k = 10,
                                       RankStrategy strategy = RankStrategy::weighted_score);

    void validate() const;
};

} // namespace green
