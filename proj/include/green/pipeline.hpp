#pragma once

#include "green/dataset.hpp"
#include "green/metrics.hpp"
#include "green/pareto.hpp"
#include "green/predictor.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <optional>
#include <string>
#include <vector>

namespace green {

/// A configuration of one dataset, identified within that dataset.
struct CandidateConfig {
    std::string candidate_id;
    std::size_t record_index = 0;
};

/// Configurations of `dataset_id`, in corpus order. The id is the record's config_id when that is unique
/// within the dataset, otherwise config_id extended with batch size, learning rate and discard fraction.
std::vector<CandidateConfig> dataset_configs(const Corpus& corpus, const std::string& dataset_id);

/// Observed (configuration, epoch) points of a normalized corpus.
std::vector<CandidatePoint> true_candidates(const Corpus& corpus, const std::string& dataset_id);

/// Predicted curves for every configuration over epochs 1..V, where V is the dataset's longest curve
/// capped at the predictor's epoch range.
std::vector<CandidatePoint> predicted_candidates(const PredictorParams& params, const Corpus& corpus,
                                                 const std::string& dataset_id);

struct Recommendation {
    ParetoFront front;                     // all non-dominated candidates
    ParetoFront filtered;                  // front after the gamma threshold
    std::optional<RankedSelection> ranking; // empty when no configuration meets gamma

    bool empty() const { return !ranking.has_value(); }
};

Recommendation recommend(std::span<const CandidatePoint> candidates, const PreferenceSpec& prefs);

struct EvalConfig {
    double omega_a = 0.5;
    double gamma = 0.0;
    std::vector<int> k_list{1, 5, 10};
    double lambda = 1.0;
    int epoch_tol = 5;
    std::size_t ndcg_k = 10;
};

/// Omega values of the evaluation sweep: 0, 0.1, ..., 1.
std::vector<double> omega_sweep();

/// Graded relevance of each point: its true score under `prefs`, min-max scaled to [0,3] over `pool`
/// and rounded to quarter steps. Keys are (config_id, epoch).
std::map<std::pair<std::string, int>, double> graded_relevance(std::span<const CandidatePoint> pool,
                                                               const PreferenceSpec& prefs);

/// Builds true and predicted fronts over the shared candidate universe and scores them.
/// Predicted points without a true counterpart are dropped before front extraction.
MetricReport evaluate(std::span<const CandidatePoint> truth, std::span<const CandidatePoint> predicted,
                      const EvalConfig& cfg);

/// Planted front of a synthetic corpus: the front of its noise-free curves, normalized with `scaling`.
struct PlantedTruth {
    Corpus noiseless;                    // normalized
    std::vector<CandidatePoint> candidates;
    ParetoFront front;
};

PlantedTruth planted_truth(const SyntheticCorpus& synth, const ScalingParams& scaling);

// Serialization of pipeline outputs.

/// `acc,energy,config_id,epoch,is_front` rows for every candidate.
void write_front_csv(std::ostream& out, std::span<const CandidatePoint> candidates, const ParetoFront& front);

/// Reads the candidate columns of a front CSV (any extra columns are ignored).
std::vector<CandidatePoint> read_candidates_csv(std::istream& in, Provenance provenance = Provenance::predicted);

std::string recommendation_json(const Recommendation& rec, const PreferenceSpec& prefs,
                                const std::string& dataset_id, std::size_t n_candidates);

void write_recommendation_csv(std::ostream& out, const Recommendation& rec, const PreferenceSpec& prefs);

/// Long-format loss history: step,L,epoch,L_A_e,L_E_e,alpha_e.
void write_loss_csv(std::ostream& out, std::span<const LossReport> history);

/// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);

} // namespace green
