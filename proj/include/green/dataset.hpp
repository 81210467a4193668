#pragma once

#include "green/core.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace green {

/// Min-max scaling of one dataset's targets.
struct DatasetScaling {
    double energy_min = 0.0;
    double energy_max = 1.0;
    double acc_min = 0.0;
    double acc_max = 1.0;
    bool acc_scaled = false; // false: accuracy passed through unchanged

    double normalize_energy(double e) const;
    double denormalize_energy(double e) const;
    double normalize_acc(double a) const;
    double denormalize_acc(double a) const;

    bool operator==(const DatasetScaling&) const = default;
};

struct ScalingParams {
    std::map<std::string, DatasetScaling> per_dataset;

    const DatasetScaling& at(const std::string& dataset_id) const;
    bool operator==(const ScalingParams&) const = default;
};

struct Corpus {
    std::vector<ConfigRecord> records;
    FeatureWidths feature_widths{};
    std::optional<ScalingParams> scaling;

    bool empty() const { return records.empty(); }
    std::size_t size() const { return records.size(); }
    bool normalized() const { return scaling.has_value(); }

    std::set<std::string> dataset_ids() const;

    /// Longest curve among records (the epoch space V).
    int max_epoch() const;

    bool operator==(const Corpus&) const = default;
};

/// Error raised while reading a corpus file; carries the 1-based line number and offending field.
class ParseError : public InputError {
public:
    ParseError(std::size_t line, std::string field, const std::string& message);

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// Parses one JSON record object. `line` is used only for error messages.
ConfigRecord parse_record(const std::string& text, std::size_t line = 1);

/// One-line JSON rendering of a record (masks included when any slot is padding).
std::string record_to_json_line(const ConfigRecord& record);

/// Reads a JSONL corpus: an optional `corpus_header` line followed by one record per line.
/// Features are padded to the corpus-wide per-group widths and record keys must be unique.
Corpus read_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);

void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// Pads every record to the maximum per-group width and checks key uniqueness.
Corpus make_corpus(std::vector<ConfigRecord> records);

struct NormalizeResult {
    Corpus corpus;
    ScalingParams scaling;
    std::vector<std::string> warnings;
};

/// Per-dataset min-max scaling of cumulative energy to [0,1]. Accuracy passes through when it
/// already lies in [0,1], otherwise it is min-max scaled as well. Degenerate ranges map to 0.
NormalizeResult normalize_targets(const Corpus& corpus);

/// Normalizes a raw corpus with previously fitted scaling parameters.
Corpus apply_scaling(const Corpus& corpus, const ScalingParams& scaling);

/// Maps a normalized corpus back to raw units.
Corpus denormalize_targets(const Corpus& corpus, const ScalingParams& scaling);

struct Split {
    Corpus train;
    Corpus test;
};

Split split_by_dataset(const Corpus& corpus, const std::set<std::string>& holdout_ids);

struct SynthSpec {
    int n_configs = 20;
    int max_epoch = 20;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Planted curve parameters of one synthetic configuration.
///   acc(e)    = acc_max * (1 - exp(-rate * e))
///   energy(e) = energy_per_epoch * e
struct CurveTruth {
    std::string config_id;
    double acc_max = 0.0;
    double rate = 0.0;
    double energy_per_epoch = 0.0;

    double accuracy_at(int epoch) const;
    double energy_at(int epoch) const;
};

struct SyntheticCorpus {
    Corpus corpus;                 // raw (unnormalized) energies, noisy accuracy
    std::vector<CurveTruth> truth; // aligned with corpus.records
};

inline constexpr const char* kSyntheticDatasetId = "synth";

/// Deterministic given spec.seed.
SyntheticCorpus generate_synthetic(const SynthSpec& spec);

/// Noise-free copy of the synthetic corpus, curves evaluated from the planted parameters.
Corpus noiseless_corpus(const SyntheticCorpus& synth);

} // namespace green
