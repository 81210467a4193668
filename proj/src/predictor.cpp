#include "green/predictor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace green {

namespace {

double unit_draw(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double sign(double v)
{
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
}

std::size_t layer_count(const PredictorParams& p)
{
    return p.layer_spec.size() - 1;
}

// Views into theta for layer l.
struct LayerView {
    Eigen::Map<const Eigen::MatrixXd> weight;
    Eigen::Map<const Eigen::VectorXd> bias;
};

std::vector<std::size_t> layer_offsets(std::span<const int> spec)
{
    std::vector<std::size_t> off{0};
    for (std::size_t l = 0; l + 1 < spec.size(); ++l) {
        const auto in = static_cast<std::size_t>(spec[l]);
        const auto out = static_cast<std::size_t>(spec[l + 1]);
        off.push_back(off.back() + out * in + out);
    }
    return off;
}

LayerView layer(const PredictorParams& p, const std::vector<std::size_t>& off, std::size_t l)
{
    const int in = p.layer_spec[l];
    const int out = p.layer_spec[l + 1];
    const double* base = p.theta.data() + off[l];
    return {Eigen::Map<const Eigen::MatrixXd>(base, out, in),
            Eigen::Map<const Eigen::VectorXd>(base + static_cast<std::ptrdiff_t>(out) * in, out)};
}

Eigen::MatrixXd standardized_inputs(const PredictorParams& p, std::span<const Sample> batch)
{
    Eigen::MatrixXd x(p.input_width, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].input.size() != p.input_width)
            throw InputError("sample input width " + std::to_string(batch[i].input.size())
                             + " differs from network input width " + std::to_string(p.input_width));
        x.col(static_cast<Eigen::Index>(i)) = (batch[i].input - p.input_shift).cwiseQuotient(p.input_scale);
    }
    return x;
}

// Post-activation outputs of every layer; acts[0] is the standardized input.
std::vector<Eigen::MatrixXd> forward_all(const PredictorParams& p, std::span<const Sample> batch)
{
    const auto off = layer_offsets(p.layer_spec);
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(p.layer_spec.size());
    acts.push_back(standardized_inputs(p, batch));
    for (std::size_t l = 0; l < layer_count(p); ++l) {
        auto [w, b] = layer(p, off, l);
        Eigen::MatrixXd z = w * acts.back();
        z.colwise() += b;
        if (l + 1 < layer_count(p))
            z = z.array().tanh().matrix();
        acts.push_back(std::move(z));
    }
    return acts;
}

void check_epoch(const PredictorParams& p, int epoch)
{
    if (epoch < 1 || epoch > p.max_epoch)
        throw InputError("epoch " + std::to_string(epoch) + " outside [1, " + std::to_string(p.max_epoch) + "]");
}

} // namespace

int input_width_for(const FeatureWidths& widths)
{
    const auto features = std::accumulate(widths.begin(), widths.end(), std::size_t{0});
    return static_cast<int>(2 * features) + kHyperparamWidth + kEpochEncodingWidth;
}

std::size_t parameter_count(std::span<const int> layer_spec)
{
    return layer_offsets(layer_spec).back();
}

PredictorParams PredictorParams::initialize(const FeatureWidths& widths, std::span<const int> hidden,
                                            int max_epoch, std::uint64_t seed)
{
    if (max_epoch < 1)
        throw InputError("max_epoch must be >= 1");
    PredictorParams p;
    p.seed = seed;
    p.max_epoch = max_epoch;
    p.feature_widths = widths;
    p.input_width = input_width_for(widths);
    p.layer_spec.push_back(p.input_width);
    for (int h : hidden) {
        if (h < 1)
            throw InputError("hidden layer widths must be positive");
        p.layer_spec.push_back(h);
    }
    p.layer_spec.push_back(2);

    std::mt19937_64 rng(seed);
    p.theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(green::parameter_count(p.layer_spec)));
    const auto off = layer_offsets(p.layer_spec);
    for (std::size_t l = 0; l + 1 < p.layer_spec.size(); ++l) {
        const int in = p.layer_spec[l];
        const int out = p.layer_spec[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        for (std::size_t k = 0; k < static_cast<std::size_t>(in) * out; ++k)
            p.theta[static_cast<Eigen::Index>(off[l] + k)] = (2.0 * unit_draw(rng) - 1.0) * limit;
    }
    p.input_shift = Eigen::VectorXd::Zero(p.input_width);
    p.input_scale = Eigen::VectorXd::Ones(p.input_width);
    return p;
}

void PredictorParams::validate() const
{
    if (layer_spec.size() < 2 || layer_spec.back() != 2)
        throw InputError("layer_spec must end with the 2-wide output layer");
    if (layer_spec.front() != input_width || input_width != input_width_for(feature_widths))
        throw InputError("layer_spec input width disagrees with the feature widths");
    if (std::any_of(layer_spec.begin(), layer_spec.end(), [](int w) { return w < 1; }))
        throw InputError("layer widths must be positive");
    if (parameter_count() != green::parameter_count(layer_spec))
        throw InputError("parameter count does not match layer_spec");
    if (max_epoch < 1)
        throw InputError("max_epoch must be >= 1");
    if (input_shift.size() != input_width || input_scale.size() != input_width)
        throw InputError("input standardization width mismatch");
    if (!theta.allFinite() || !input_shift.allFinite() || !input_scale.allFinite())
        throw InputError("parameters must be finite");
    if ((input_scale.array() <= 0.0).any())
        throw InputError("input scale must be positive");
}

bool PredictorParams::operator==(const PredictorParams& o) const
{
    return layer_spec == o.layer_spec && seed == o.seed && input_width == o.input_width
        && max_epoch == o.max_epoch && feature_widths == o.feature_widths && theta.size() == o.theta.size()
        && theta == o.theta && input_shift.size() == o.input_shift.size() && input_shift == o.input_shift
        && input_scale.size() == o.input_scale.size() && input_scale == o.input_scale;
}

Eigen::VectorXd encode_input(const PredictorParams& params, const FeatureVector& features,
                             const Hyperparams& hyperparams, int epoch)
{
    check_epoch(params, epoch);
    if (features.widths() != params.feature_widths)
        throw InputError("feature widths do not match the predictor's input layout");
    hyperparams.validate();

    Eigen::VectorXd x(params.input_width);
    Eigen::Index k = 0;
    for (std::size_t g = 0; g < kFeatureGroups; ++g)
        for (std::size_t j = 0; j < features.values[g].size(); ++j)
            x[k++] = features.mask[g][j] ? features.values[g][j] : 0.0;
    for (std::size_t g = 0; g < kFeatureGroups; ++g)
        for (auto bit : features.mask[g])
            x[k++] = static_cast<double>(bit);
    x[k++] = std::log2(static_cast<double>(hyperparams.batch_size));
    x[k++] = std::log10(hyperparams.learning_rate);
    const double t = static_cast<double>(epoch) / static_cast<double>(params.max_epoch);
    x[k++] = t;
    for (double freq : {1.0, 2.0, 4.0}) {
        x[k++] = std::sin(M_PI * freq * t);
        x[k++] = std::cos(M_PI * freq * t);
    }
    return x;
}

Sample make_sample(const PredictorParams& params, const ConfigRecord& record, int epoch)
{
    if (epoch < 1 || epoch > record.max_epoch())
        throw InputError("record '" + record.config_id + "' has no epoch " + std::to_string(epoch));
    const auto& p = record.curve[static_cast<std::size_t>(epoch - 1)];
    return {encode_input(params, record.features, record.hyperparams, epoch), epoch, p.accuracy, p.energy};
}

std::vector<Sample> record_samples(const PredictorParams& params, const ConfigRecord& record)
{
    std::vector<Sample> out;
    const int last = std::min(params.max_epoch, record.max_epoch());
    for (int e = 1; e <= last; ++e)
        out.push_back(make_sample(params, record, e));
    return out;
}

Eigen::Matrix2Xd forward_batch(const PredictorParams& params, std::span<const Sample> batch)
{
    return forward_all(params, batch).back();
}

Prediction forward(const PredictorParams& params, const FeatureVector& features, const Hyperparams& hyperparams,
                   int epoch)
{
    const Sample s{encode_input(params, features, hyperparams, epoch), epoch, 0.0, 0.0};
    const Eigen::Matrix2Xd y = forward_batch(params, std::span(&s, 1));
    return {y(0, 0), y(1, 0)};
}

std::pair<double, double> mae_pair(std::span<const Prediction> pred, std::span<const Prediction> truth)
{
    if (pred.empty())
        throw InputError("mae_pair: empty batch");
    if (pred.size() != truth.size())
        throw InputError("mae_pair: prediction and truth lengths differ");
    double la = 0.0;
    double le = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        la += std::abs(pred[i].acc - truth[i].acc);
        le += std::abs(pred[i].energy - truth[i].energy);
    }
    const auto n = static_cast<double>(pred.size());
    return {la / n, le / n};
}

double dynamic_alpha(std::optional<std::pair<double, double>> prev, std::pair<double, double> cur, int epoch)
{
    if (cur.first < 0.0 || cur.second < 0.0 || (prev && (prev->first < 0.0 || prev->second < 0.0)))
        throw InputError("dynamic_alpha: losses must be non-negative");
    if (epoch < 2 || !prev)
        return 0.5;
    constexpr double kTiny = 1e-12;
    const double r_a = prev->first < kTiny ? 1.0 : cur.first / prev->first;
    const double r_e = prev->second < kTiny ? 1.0 : cur.second / prev->second;
    if (r_a + r_e <= 0.0)
        return 0.5;
    return r_a / (r_a + r_e);
}

std::vector<double> dynamic_alphas(std::span<const EpochLoss> losses)
{
    std::vector<double> alphas;
    alphas.reserve(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i) {
        std::optional<std::pair<double, double>> prev;
        if (i > 0)
            prev = std::pair{losses[i - 1].loss_a, losses[i - 1].loss_e};
        alphas.push_back(dynamic_alpha(prev, {losses[i].loss_a, losses[i].loss_e}, losses[i].epoch));
    }
    return alphas;
}

bool LossReport::consistent() const
{
    if (per_epoch.empty())
        return overall == 0.0;
    double sum = 0.0;
    for (const auto& r : per_epoch) {
        if (r.loss_a < 0.0 || r.loss_e < 0.0 || r.alpha < 0.0 || r.alpha > 1.0)
            return false;
        if (std::abs(r.loss_comp - (r.alpha * r.loss_a + (1.0 - r.alpha) * r.loss_e)) > 1e-12)
            return false;
        sum += r.loss_comp;
    }
    return std::abs(overall - sum / static_cast<double>(per_epoch.size())) <= 1e-12;
}

namespace {

LossReport report_from(std::span<const EpochLoss> losses, std::span<const double> alphas)
{
    LossReport rep;
    double sum = 0.0;
    for (const auto& l : losses) {
        const auto idx = static_cast<std::size_t>(l.epoch - 1);
        if (idx >= alphas.size())
            throw InputError("no alpha for epoch " + std::to_string(l.epoch));
        const double a = alphas[idx];
        if (!(a >= 0.0 && a <= 1.0))
            throw InputError("alpha must lie in [0,1]");
        const double comp = a * l.loss_a + (1.0 - a) * l.loss_e;
        rep.per_epoch.push_back({l.epoch, l.loss_a, l.loss_e, a, comp});
        sum += comp;
    }
    rep.overall = rep.per_epoch.empty() ? 0.0 : sum / static_cast<double>(rep.per_epoch.size());
    return rep;
}

void check_epoch_coverage(std::span<const EpochLoss> losses, int max_epoch)
{
    if (max_epoch < 1)
        throw InputError("composite_loss: V must be >= 1");
    if (losses.size() != static_cast<std::size_t>(max_epoch))
        throw InputError("composite_loss: expected losses for epochs 1.." + std::to_string(max_epoch));
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (losses[i].epoch != static_cast<int>(i) + 1)
            throw InputError("composite_loss: missing epoch " + std::to_string(i + 1));
        if (losses[i].loss_a < 0.0 || losses[i].loss_e < 0.0)
            throw InputError("composite_loss: losses must be non-negative");
    }
}

} // namespace

LossReport composite_loss(std::span<const EpochLoss> losses, std::span<const double> alphas, int max_epoch)
{
    check_epoch_coverage(losses, max_epoch);
    return report_from(losses, alphas);
}

LossReport composite_loss(std::span<const EpochLoss> losses, int max_epoch)
{
    check_epoch_coverage(losses, max_epoch);
    const auto alphas = dynamic_alphas(losses);
    return report_from(losses, alphas);
}

namespace {

// Per-epoch accumulation of absolute residuals over a batch.
struct EpochTally {
    double sum_a = 0.0;
    double sum_e = 0.0;
    int count = 0;
};

std::map<int, EpochTally> tally(const Eigen::Matrix2Xd& y, std::span<const Sample> batch)
{
    std::map<int, EpochTally> t;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto& e = t[batch[i].epoch];
        const auto c = static_cast<Eigen::Index>(i);
        e.sum_a += std::abs(y(0, c) - batch[i].acc);
        e.sum_e += std::abs(y(1, c) - batch[i].energy);
        ++e.count;
    }
    return t;
}

std::vector<EpochLoss> losses_from(const std::map<int, EpochTally>& t)
{
    std::vector<EpochLoss> out;
    for (const auto& [epoch, e] : t)
        out.push_back({epoch, e.sum_a / e.count, e.sum_e / e.count});
    return out;
}

} // namespace

std::vector<EpochLoss> measure_losses(const PredictorParams& params, std::span<const Sample> batch)
{
    if (batch.empty())
        throw InputError("empty batch");
    return losses_from(tally(forward_batch(params, batch), batch));
}

LossGradient loss_and_gradient(const PredictorParams& params, std::span<const Sample> batch,
                               std::span<const double> alphas)
{
    if (batch.empty())
        throw InputError("empty batch");
    auto acts = forward_all(params, batch);
    const Eigen::Matrix2Xd& y = acts.back();
    const auto t = tally(y, batch);
    const auto losses = losses_from(t);

    LossGradient out;
    out.report = report_from(losses, alphas);

    // dL/dy: L = (1/|E|) sum_e [alpha_e/n_e sum|r_a| + (1-alpha_e)/n_e sum|r_e|], sign(0) = 0.
    const auto n_epochs = static_cast<double>(t.size());
    Eigen::MatrixXd delta(2, y.cols());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        const auto& s = batch[i];
        const double a = alphas[static_cast<std::size_t>(s.epoch - 1)];
        const double n = static_cast<double>(t.at(s.epoch).count) * n_epochs;
        delta(0, c) = a / n * sign(y(0, c) - s.acc);
        delta(1, c) = (1.0 - a) / n * sign(y(1, c) - s.energy);
    }

    const auto off = layer_offsets(params.layer_spec);
    out.gradient = Eigen::VectorXd::Zero(params.theta.size());
    for (std::size_t l = layer_count(params); l-- > 0;) {
        const int in = params.layer_spec[l];
        const int outw = params.layer_spec[l + 1];
        double* base = out.gradient.data() + off[l];
        Eigen::Map<Eigen::MatrixXd> gw(base, outw, in);
        Eigen::Map<Eigen::VectorXd> gb(base + static_cast<std::ptrdiff_t>(outw) * in, outw);
        gw.noalias() = delta * acts[l].transpose();
        gb = delta.rowwise().sum();
        if (l > 0) {
            auto [w, b] = layer(params, off, l);
            (void)b;
            Eigen::MatrixXd prev = w.transpose() * delta;
            delta = prev.cwiseProduct((1.0 - acts[l].array().square()).matrix());
        }
    }
    if (!out.gradient.allFinite())
        throw NumericalError("non-finite gradient");
    return out;
}

Eigen::VectorXd gradient(const PredictorParams& params, std::span<const Sample> batch,
                         std::span<const double> alphas)
{
    return loss_and_gradient(params, batch, alphas).gradient;
}

std::string_view to_string(Optimizer o)
{
    return o == Optimizer::sgd ? "sgd" : "adam";
}

Optimizer parse_optimizer(std::string_view text)
{
    if (text == "sgd") return Optimizer::sgd;
    if (text == "adam") return Optimizer::adam;
    throw InputError("unknown optimizer '" + std::string(text) + "'");
}

void TrainConfig::validate() const
{
    if (steps < 0)
        throw InputError("steps must be non-negative");
    if (batch_size < 1)
        throw InputError("batch size must be positive");
    if (!(eta > 0.0) || !std::isfinite(eta))
        throw InputError("eta must be positive");
    if (max_epoch < 1)
        throw InputError("max_epoch must be positive");
}

TrainingDiverged::TrainingDiverged(int step)
    : NumericalError("non-finite loss at step " + std::to_string(step)), step_(step)
{
}

PredictorParams initial_params(const Corpus& corpus, const TrainConfig& cfg, std::uint64_t seed)
{
    if (corpus.empty())
        throw InputError("training corpus is empty");
    auto params = PredictorParams::initialize(corpus.feature_widths, cfg.hidden, cfg.max_epoch, seed);

    // Standardize inputs over every (record, epoch) sample.
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(params.input_width);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(params.input_width);
    double n = 0.0;
    for (const auto& r : corpus.records)
        for (const auto& s : record_samples(params, r)) {
            sum += s.input;
            sq += s.input.cwiseProduct(s.input);
            n += 1.0;
        }
    const Eigen::VectorXd mean = sum / n;
    const Eigen::VectorXd var = (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
    params.input_shift = mean;
    params.input_scale = var.cwiseSqrt().unaryExpr([](double s) { return s < 1e-8 ? 1.0 : s; });
    return params;
}

TrainResult train(const Corpus& corpus, const TrainConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    if (!corpus.normalized())
        throw InputError("training requires a normalized corpus");

    TrainResult res;
    res.params = initial_params(corpus, cfg, seed);
    auto& params = res.params;

    std::vector<std::vector<Sample>> per_record;
    per_record.reserve(corpus.size());
    for (const auto& r : corpus.records)
        per_record.push_back(record_samples(params, r));

    std::mt19937_64 rng(seed ^ 0xD1B54A32D192ED03ULL);
    std::vector<std::size_t> order(corpus.size());
    const auto batch_records = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), corpus.size());

    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(params.theta.size());
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(params.theta.size());
    std::vector<EpochLoss> prev_losses;
    std::vector<Sample> batch;
    res.history.reserve(static_cast<std::size_t>(cfg.steps));

    for (int step = 1; step <= cfg.steps; ++step) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (batch_records < order.size()) {
            for (std::size_t i = 0; i < batch_records; ++i) {
                const auto j = i + static_cast<std::size_t>(rng() % (order.size() - i));
                std::swap(order[i], order[j]);
            }
            std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(batch_records));
        }
        batch.clear();
        int batch_epochs = 0;
        for (std::size_t i = 0; i < batch_records; ++i) {
            const auto& samples = per_record[order[i]];
            batch.insert(batch.end(), samples.begin(), samples.end());
            batch_epochs = std::max(batch_epochs, static_cast<int>(samples.size()));
        }

        std::vector<double> alphas = prev_losses.empty() ? std::vector<double>{} : dynamic_alphas(prev_losses);
        alphas.resize(static_cast<std::size_t>(std::max(batch_epochs, cfg.max_epoch)), 0.5);

        LossGradient lg;
        try {
            lg = loss_and_gradient(params, batch, alphas);
        }
        catch (const NumericalError&) {
            throw TrainingDiverged(step);
        }
        if (!std::isfinite(lg.report.overall))
            throw TrainingDiverged(step);
        assert(lg.report.consistent());

        if (cfg.optimizer == Optimizer::sgd) {
            params.theta -= cfg.eta * lg.gradient;
        }
        else {
            constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
            m1 = b1 * m1 + (1.0 - b1) * lg.gradient;
            m2 = b2 * m2 + (1.0 - b2) * lg.gradient.cwiseProduct(lg.gradient);
            const double c1 = 1.0 - std::pow(b1, step);
            const double c2 = 1.0 - std::pow(b2, step);
            params.theta.array() -= cfg.eta * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
        }
        if (!params.theta.allFinite())
            throw TrainingDiverged(step);

        prev_losses.clear();
        for (const auto& r : lg.report.per_epoch)
            prev_losses.push_back({r.epoch, r.loss_a, r.loss_e});
        res.history.push_back(std::move(lg.report));
    }
    return res;
}

PredictorParams online_update(const PredictorParams& params, const ConfigRecord& realized, int e_star, double eta)
{
    if (e_star < 1)
        throw InputError("e* must be >= 1");
    if (e_star > realized.max_epoch())
        throw InputError("e* = " + std::to_string(e_star) + " exceeds the realized curve length "
                         + std::to_string(realized.max_epoch()));
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw InputError("eta must be a non-negative finite number");

    std::vector<Sample> samples;
    for (int e = 1; e <= e_star; ++e)
        samples.push_back(make_sample(params, realized, e));
    const auto alphas = dynamic_alphas(measure_losses(params, samples));

    Eigen::VectorXd total = Eigen::VectorXd::Zero(params.theta.size());
    for (const auto& s : samples)
        total += gradient(params, std::span(&s, 1), alphas);

    PredictorParams out = params;
    out.theta = params.theta - eta * total;
    return out;
}

std::vector<CandidatePoint> predict_curve(const PredictorParams& params, const std::string& config_id,
                                          const FeatureVector& features, const Hyperparams& hyperparams,
                                          int max_epoch)
{
    if (max_epoch < 1)
        throw InputError("epoch range must be non-empty");
    std::vector<Sample> batch;
    for (int e = 1; e <= max_epoch; ++e)
        batch.push_back({encode_input(params, features, hyperparams, e), e, 0.0, 0.0});
    const Eigen::Matrix2Xd y = forward_batch(params, batch);
    std::vector<CandidatePoint> out;
    out.reserve(batch.size());
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
        if (!std::isfinite(y(0, c)) || !std::isfinite(y(1, c)))
            throw NumericalError("non-finite prediction for '" + config_id + "'");
        out.emplace_back(config_id, static_cast<int>(c) + 1, y(0, c), y(1, c), Provenance::predicted);
    }
    return out;
}

} // namespace green
