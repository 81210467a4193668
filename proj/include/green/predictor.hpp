#pragma once

#include "green/core.hpp"
#include "green/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace green {

// Width of the sinusoidal epoch encoding: e/V plus sin/cos pairs at three frequencies.
inline constexpr int kEpochEncodingWidth = 7;
// log2(batch size), log10(learning rate).
inline constexpr int kHyperparamWidth = 2;

/// Input width of the reference network: masked features, their masks, hyperparams, epoch encoding.
int input_width_for(const FeatureWidths& widths);

/// Number of weights and biases of a fully connected net with the given layer widths.
std::size_t parameter_count(std::span<const int> layer_spec);

/// Learnable state of the curve predictor.
///
/// `layer_spec` lists every layer width including input and output, e.g. {input_width, 32, 32, 2}.
/// Hidden layers use tanh; the output layer is linear and yields (acc_hat, energy_hat).
/// `theta` packs, per layer, the column-major weight matrix (out x in) followed by the bias.
/// Inputs are standardized with `input_shift` / `input_scale` before the first layer.
struct PredictorParams {
    Eigen::VectorXd theta;
    std::vector<int> layer_spec;
    std::uint64_t seed = 0;
    int input_width = 0;
    int max_epoch = 1;
    FeatureWidths feature_widths{};
    Eigen::VectorXd input_shift;
    Eigen::VectorXd input_scale;

    /// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases, identity standardization.
    static PredictorParams initialize(const FeatureWidths& widths, std::span<const int> hidden, int max_epoch,
                                      std::uint64_t seed);

    std::size_t parameter_count() const { return static_cast<std::size_t>(theta.size()); }

    /// Throws InputError when the layer spec, widths or parameter count disagree, or a value is non-finite.
    void validate() const;

    bool operator==(const PredictorParams& o) const;
};

struct Prediction {
    double acc = 0.0;
    double energy = 0.0;
};

/// One (configuration, epoch) observation with its encoded (unstandardized) input row.
struct Sample {
    Eigen::VectorXd input;
    int epoch = 1;
    double acc = 0.0;
    double energy = 0.0;
};

/// Raw network input for a configuration at an epoch. Throws on width mismatch or epoch outside [1, V].
Eigen::VectorXd encode_input(const PredictorParams& params, const FeatureVector& features,
                             const Hyperparams& hyperparams, int epoch);

Sample make_sample(const PredictorParams& params, const ConfigRecord& record, int epoch);

/// Samples for epochs 1..min(V, curve length) of a record.
std::vector<Sample> record_samples(const PredictorParams& params, const ConfigRecord& record);

Prediction forward(const PredictorParams& params, const FeatureVector& features, const Hyperparams& hyperparams,
                   int epoch);

/// Network outputs for a batch, one column per sample (row 0 acc, row 1 energy).
Eigen::Matrix2Xd forward_batch(const PredictorParams& params, std::span<const Sample> batch);

struct EpochLoss {
    int epoch = 1;
    double loss_a = 0.0; // L_A,e
    double loss_e = 0.0; // L_E,e
};

/// Mean absolute error per target over a batch.
std::pair<double, double> mae_pair(std::span<const Prediction> pred, std::span<const Prediction> truth);

/// Weight of the accuracy loss at epoch e from the loss ratios between epochs e-1 and e.
/// Returns 0.5 for e < 2 (and when `prev` is absent).
double dynamic_alpha(std::optional<std::pair<double, double>> prev, std::pair<double, double> cur, int epoch);

/// alpha_e for consecutive epoch losses (losses[i] must be epoch i+1).
std::vector<double> dynamic_alphas(std::span<const EpochLoss> losses);

struct EpochReport {
    int epoch = 1;
    double loss_a = 0.0;
    double loss_e = 0.0;
    double alpha = 0.5;
    double loss_comp = 0.0;
};

struct LossReport {
    std::vector<EpochReport> per_epoch;
    double overall = 0.0;

    /// Checks the convex-combination and mean identities within 1e-12.
    bool consistent() const;
};

/// Composite report for epochs 1..V. `alphas[e-1]` is the weight of epoch e.
LossReport composite_loss(std::span<const EpochLoss> losses, std::span<const double> alphas, int max_epoch);

/// As above with alphas derived from the losses themselves.
LossReport composite_loss(std::span<const EpochLoss> losses, int max_epoch);

/// Per-epoch MAE losses of the current parameters on a batch, epochs in ascending order.
std::vector<EpochLoss> measure_losses(const PredictorParams& params, std::span<const Sample> batch);

struct LossGradient {
    LossReport report;
    Eigen::VectorXd gradient;
};

/// Composite loss L = mean over the batch's epochs of alpha_e*L_A,e + (1-alpha_e)*L_E,e and its exact
/// gradient. Alphas are constants here; `alphas[e-1]` must exist for every epoch in the batch.
LossGradient loss_and_gradient(const PredictorParams& params, std::span<const Sample> batch,
                               std::span<const double> alphas);

Eigen::VectorXd gradient(const PredictorParams& params, std::span<const Sample> batch,
                         std::span<const double> alphas);

enum class Optimizer { sgd, adam };

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view text);

struct TrainConfig {
    int steps = 1000;
    int batch_size = 16; // records per step; each contributes all of its epochs
    double eta = 0.05;
    int max_epoch = 1;
    std::vector<int> hidden{32, 32};
    Optimizer optimizer = Optimizer::sgd;

    void validate() const;
};

struct TrainResult {
    PredictorParams params;
    std::vector<LossReport> history; // one report per optimizer step, measured before the update
};

class TrainingDiverged : public NumericalError {
public:
    explicit TrainingDiverged(int step);
    int step() const noexcept { return step_; }

private:
    int step_;
};

/// Parameters before any optimizer step: seeded initialization plus input standardization fitted on the corpus.
PredictorParams initial_params(const Corpus& corpus, const TrainConfig& cfg, std::uint64_t seed);

/// Mini-batch descent on the composite loss. Alphas for a step come from the previous step's per-epoch
/// losses, so the first step uses 0.5 everywhere.
TrainResult train(const Corpus& corpus, const TrainConfig& cfg, std::uint64_t seed);

/// One aggregated step theta - eta * sum_{e=1..e_star} grad L_comp,e over the realized curve.
PredictorParams online_update(const PredictorParams& params, const ConfigRecord& realized, int e_star, double eta);

/// Clamped predictions for epochs 1..max_epoch.
std::vector<CandidatePoint> predict_curve(const PredictorParams& params, const std::string& config_id,
                                          const FeatureVector& features, const Hyperparams& hyperparams,
                                          int max_epoch);

void write_checkpoint(std::ostream& out, const PredictorParams& params);
PredictorParams read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const PredictorParams& params);
PredictorParams load_checkpoint(const std::filesystem::path& path);

} // namespace green
