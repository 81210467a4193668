// green: ingest, train, recommend, evaluate, update and synth commands.

#include "green/dataset.hpp"
#include "green/manifest.hpp"
#include "green/metrics.hpp"
#include "green/pareto.hpp"
#include "green/pipeline.hpp"
#include "green/predictor.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace green;

namespace {

enum Exit { ok = 0, input_error = 2, collision = 3, numerical = 4 };

struct Common {
    bool force = false;
};

void guard_output(const fs::path& out, bool force)
{
    if (fs::exists(out) && !force)
        throw OutputCollision("output '" + out.string() + "' exists (use --force to overwrite)");
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw InputError("cannot write '" + path.string() + "'");
    out << text;
    if (!out)
        throw InputError("failed writing '" + path.string() + "'");
}

std::uint64_t effective_seed(std::uint64_t flag)
{
    const char* env = std::getenv("GREEN_SEED");
    if (!env || !*env)
        return flag;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(env, &used);
        if (used != std::string(env).size())
            throw std::invalid_argument(env);
        return v;
    } catch (const std::logic_error&) {
        throw InputError(std::string("GREEN_SEED is not an unsigned integer: ") + env);
    }
}

std::string digest(const fs::path& p) { return "sha256:" + sha256_file(p); }

std::string join(const std::vector<int>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string pick_dataset(const Corpus& corpus, const std::string& requested)
{
    if (!requested.empty())
        return requested;
    const auto ids = corpus.dataset_ids();
    if (ids.size() != 1)
        throw InputError("corpus holds several datasets; pass --dataset-id");
    return *ids.begin();
}

// ---- ingest --------------------------------------------------------------------------------

struct IngestArgs {
    std::string input, output;
};

int run_ingest(const IngestArgs& a, const Common& c)
{
    guard_output(a.output, c.force);
    const Corpus raw = load_corpus(a.input);
    if (raw.normalized())
        throw InputError("input already carries scaling parameters");
    auto res = normalize_targets(raw);
    for (const auto& w : res.warnings)
        std::cerr << "warning: " << w << '\n';
    save_corpus(a.output, res.corpus);

    RunManifest m;
    m.command = "ingest";
    m.input_digests["input"] = digest(a.input);
    m.parameters["records"] = std::to_string(res.corpus.size());
    write_manifest(a.output, m);
    std::cerr << "ingested " << res.corpus.size() << " records into " << a.output << '\n';
    return ok;
}

// ---- train ---------------------------------------------------------------------------------

struct TrainArgs {
    std::string corpus, out, loss_csv, optimizer = "sgd";
    int steps = 2000;
    int batch_size = 16;
    double eta = 0.05;
    std::uint64_t seed = 0;
    std::vector<int> hidden{32, 32};
};

int run_train(const TrainArgs& a, const Common& c)
{
    const fs::path loss_path = a.loss_csv.empty() ? fs::path(a.out + ".loss.csv") : fs::path(a.loss_csv);
    guard_output(a.out, c.force);
    guard_output(loss_path, c.force);
    const Corpus corpus = load_corpus(a.corpus);
    if (!corpus.normalized())
        throw InputError("training needs an ingested (normalized) corpus");

    TrainConfig cfg;
    cfg.steps = a.steps;
    cfg.batch_size = a.batch_size;
    cfg.eta = a.eta;
    cfg.max_epoch = corpus.max_epoch();
    cfg.hidden = a.hidden;
    cfg.optimizer = parse_optimizer(a.optimizer);
    const std::uint64_t seed = effective_seed(a.seed);

    const TrainResult res = train(corpus, cfg, seed);
    save_checkpoint(a.out, res.params);
    std::ostringstream loss;
    write_loss_csv(loss, res.history);
    write_text(loss_path, loss.str());

    RunManifest m;
    m.command = "train";
    m.seed = seed;
    m.input_digests["corpus"] = digest(a.corpus);
    m.parameters = {{"steps", std::to_string(cfg.steps)},
                    {"batch_size", std::to_string(cfg.batch_size)},
                    {"eta", format_double(cfg.eta)},
                    {"hidden", join(cfg.hidden)},
                    {"optimizer", std::string(to_string(cfg.optimizer))},
                    {"max_epoch", std::to_string(cfg.max_epoch)}};
    write_manifest(a.out, m);
    if (!res.history.empty())
        std::cerr << "final loss " << format_double(res.history.back().overall) << '\n';
    return ok;
}

// ---- recommend -----------------------------------------------------------------------------

struct RecommendArgs {
    std::string corpus, model, dataset_id, strategy = "weighted_score", format = "json", out, front_csv;
    double omega_a = 0.5;
    double gamma = 0.0;
    int top_k = 10;
};

int run_recommend(const RecommendArgs& a, const Common& c)
{
    fs::path front_path = a.front_csv;
    if (front_path.empty() && !a.out.empty())
        front_path = a.out + ".front.csv";
    if (!a.out.empty())
        guard_output(a.out, c.force);
    if (!front_path.empty())
        guard_output(front_path, c.force);

    PreferenceSpec prefs = PreferenceSpec::from_omega_a(a.omega_a, a.gamma, a.top_k, parse_rank_strategy(a.strategy));
    prefs.validate();
    const Corpus corpus = load_corpus(a.corpus);
    const PredictorParams params = load_checkpoint(a.model);
    const std::string dataset = pick_dataset(corpus, a.dataset_id);
    const auto candidates = predicted_candidates(params, corpus, dataset);
    const Recommendation rec = recommend(candidates, prefs);

    std::string body;
    if (a.format == "json") {
        body = recommendation_json(rec, prefs, dataset, candidates.size()) + "\n";
    }
    else {
        std::ostringstream os;
        write_recommendation_csv(os, rec, prefs);
        body = os.str();
    }
    if (rec.empty())
        std::cerr << EmptyFrontError().what() << '\n';

    if (a.out.empty())
        std::cout << body;
    else
        write_text(a.out, body);
    if (!front_path.empty()) {
        std::ostringstream os;
        write_front_csv(os, candidates, rec.front);
        write_text(front_path, os.str());
    }

    if (!a.out.empty()) {
        RunManifest m;
        m.command = "recommend";
        m.input_digests["corpus"] = digest(a.corpus);
        m.input_digests["model"] = digest(a.model);
        m.parameters = {{"dataset_id", dataset},
                        {"omega_a", format_double(prefs.omega_a)},
                        {"gamma", format_double(prefs.gamma)},
                        {"top_k", std::to_string(prefs.top_k)},
                        {"strategy", std::string(to_string(prefs.strategy))},
                        {"format", a.format}};
        write_manifest(a.out, m);
    }
    return ok;
}

// ---- evaluate ------------------------------------------------------------------------------

struct EvaluateArgs {
    std::string true_corpus, pred, model, dataset_id, out;
    double omega_a = 0.5;
    double gamma = 0.0;
    std::vector<int> k_list{1, 5, 10};
    double lambda = 1.0;
    int epoch_tol = 5;
    int ndcg_k = 10;
};

int run_evaluate(const EvaluateArgs& a, const Common& c)
{
    if (a.pred.empty() == a.model.empty())
        throw InputError("pass exactly one of --pred or --model");
    if (!a.out.empty())
        guard_output(a.out, c.force);
    if (a.ndcg_k < 1)
        throw InputError("--ndcg-k must be >= 1");

    const Corpus corpus = load_corpus(a.true_corpus);
    if (!corpus.normalized())
        throw InputError("--true-corpus must be an ingested corpus with true curves");
    const std::string dataset = pick_dataset(corpus, a.dataset_id);
    const auto truth = true_candidates(corpus, dataset);

    std::vector<CandidatePoint> pred;
    if (!a.model.empty()) {
        pred = predicted_candidates(load_checkpoint(a.model), corpus, dataset);
    }
    else {
        std::ifstream in(a.pred);
        if (!in)
            throw InputError("cannot read '" + a.pred + "'");
        pred = read_candidates_csv(in);
    }

    EvalConfig cfg;
    cfg.omega_a = a.omega_a;
    cfg.gamma = a.gamma;
    cfg.k_list = a.k_list;
    cfg.lambda = a.lambda;
    cfg.epoch_tol = a.epoch_tol;
    cfg.ndcg_k = static_cast<std::size_t>(a.ndcg_k);
    const std::string report = to_json(evaluate(truth, pred, cfg)) + "\n";

    if (a.out.empty()) {
        std::cout << report;
        return ok;
    }
    write_text(a.out, report);
    RunManifest m;
    m.command = "evaluate";
    m.input_digests["true_corpus"] = digest(a.true_corpus);
    if (!a.model.empty())
        m.input_digests["model"] = digest(a.model);
    else
        m.input_digests["pred"] = digest(a.pred);
    m.parameters = {{"dataset_id", dataset},
                    {"omega_a", format_double(cfg.omega_a)},
                    {"gamma", format_double(cfg.gamma)},
                    {"k_list", join(cfg.k_list)},
                    {"lambda", format_double(cfg.lambda)},
                    {"epoch_tol", std::to_string(cfg.epoch_tol)},
                    {"ndcg_k", std::to_string(cfg.ndcg_k)}};
    write_manifest(a.out, m);
    return ok;
}

// ---- update --------------------------------------------------------------------------------

struct UpdateArgs {
    std::string model, realized, out;
    double eta = 0.01;
    int e_star = 0; // 0: whole realized curve
};

int run_update(const UpdateArgs& a, const Common& c)
{
    guard_output(a.out, c.force);
    const PredictorParams params = load_checkpoint(a.model);

    std::ifstream in(a.realized);
    if (!in)
        throw InputError("cannot read '" + a.realized + "'");
    std::string line, text;
    std::size_t lineno = 0, record_line = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        if (!text.empty())
            throw InputError("realized curve file must hold a single record");
        text = line;
        record_line = lineno;
    }
    if (text.empty())
        throw InputError("realized curve file is empty");
    ConfigRecord realized = parse_record(text, record_line);
    realized.features = realized.features.padded(params.feature_widths);

    const int e_star = a.e_star > 0 ? a.e_star : realized.max_epoch();
    if (a.e_star < 0)
        throw InputError("--e-star must be positive");
    const PredictorParams updated = online_update(params, realized, e_star, a.eta);
    save_checkpoint(a.out, updated);

    RunManifest m;
    m.command = "update";
    m.seed = params.seed;
    m.input_digests["model"] = digest(a.model);
    m.input_digests["realized"] = digest(a.realized);
    m.parameters = {{"eta", format_double(a.eta)}, {"e_star", std::to_string(e_star)}};
    write_manifest(a.out, m);
    return ok;
}

// ---- synth ---------------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    int n_configs = 20;
    int max_epoch = 20;
    double noise = 0.0;
    std::uint64_t seed = 0;
};

std::string sidecar_json(const SyntheticCorpus& synth, const SynthSpec& spec, const ScalingParams& scaling,
                         const PlantedTruth& planted)
{
    using nlohmann::json;
    json j;
    j["seed"] = spec.seed;
    j["spec"] = {{"n_configs", spec.n_configs}, {"max_epoch", spec.max_epoch}, {"noise_sigma", spec.noise_sigma}};
    json sc = json::object();
    for (const auto& [id, s] : scaling.per_dataset)
        sc[id] = {{"energy_min", s.energy_min}, {"energy_max", s.energy_max}, {"acc_min", s.acc_min},
                  {"acc_max", s.acc_max}, {"acc_scaled", s.acc_scaled}};
    j["scaling"] = sc;
    json curves = json::array();
    for (const auto& t : synth.truth)
        curves.push_back({{"config_id", t.config_id},
                          {"acc_max", t.acc_max},
                          {"rate", t.rate},
                          {"energy_per_epoch", t.energy_per_epoch}});
    j["curves"] = curves;
    json front = json::array();
    for (const auto& p : planted.front.points)
        front.push_back({{"config_id", p.config_id}, {"epoch", p.epoch}, {"acc", p.acc}, {"energy", p.energy}});
    j["planted_front"] = front;
    return j.dump(2) + "\n";
}

int run_synth(const SynthArgs& a, const Common& c)
{
    const fs::path sidecar = a.out + ".truth.json";
    guard_output(a.out, c.force);
    guard_output(sidecar, c.force);
    SynthSpec spec;
    spec.n_configs = a.n_configs;
    spec.max_epoch = a.max_epoch;
    spec.noise_sigma = a.noise;
    spec.seed = effective_seed(a.seed);
    spec.validate();

    const SyntheticCorpus synth = generate_synthetic(spec);
    // The sidecar front uses the scaling that ingesting this corpus will produce.
    const ScalingParams scaling = normalize_targets(synth.corpus).scaling;
    const PlantedTruth planted = planted_truth(synth, scaling);
    save_corpus(a.out, synth.corpus);
    write_text(sidecar, sidecar_json(synth, spec, scaling, planted));

    RunManifest m;
    m.command = "synth";
    m.seed = spec.seed;
    m.parameters = {{"n_configs", std::to_string(spec.n_configs)},
                    {"max_epoch", std::to_string(spec.max_epoch)},
                    {"noise", format_double(spec.noise_sigma)}};
    write_manifest(a.out, m);
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Energy-aware configuration recommender"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    Common common;
    app.add_flag("--force", common.force, "Overwrite existing outputs");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Normalize and pad a JSONL corpus");
    c_ingest->add_option("--input", ingest.input, "Raw JSONL corpus")->required()->check(CLI::ExistingFile);
    c_ingest->add_option("--output", ingest.output, "Normalized corpus")->required();
    c_ingest->add_flag("--force", common.force, "Overwrite existing outputs");

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "Fit the curve predictor");
    c_train->add_option("--corpus", tr.corpus, "Ingested corpus")->required()->check(CLI::ExistingFile);
    c_train->add_option("--steps", tr.steps, "Optimizer steps")->check(CLI::NonNegativeNumber)->capture_default_str();
    c_train->add_option("--batch-size", tr.batch_size, "Records per step")->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_train->add_option("--eta", tr.eta, "Step size")->capture_default_str();
    c_train->add_option("--seed", tr.seed, "Seed (GREEN_SEED overrides)")->capture_default_str();
    c_train->add_option("--hidden", tr.hidden, "Hidden layer widths")->delimiter(',')->capture_default_str();
    c_train->add_option("--optimizer", tr.optimizer, "sgd or adam")->capture_default_str();
    c_train->add_option("--out", tr.out, "Checkpoint path (.gpred)")->required();
    c_train->add_option("--loss-csv", tr.loss_csv, "Loss history CSV (default <out>.loss.csv)");
    c_train->add_flag("--force", common.force, "Overwrite existing outputs");

    RecommendArgs rc;
    auto* c_rec = app.add_subcommand("recommend", "Rank predicted Pareto-optimal configurations");
    c_rec->add_option("--corpus", rc.corpus, "Corpus holding the candidate configurations")->required()
        ->check(CLI::ExistingFile);
    c_rec->add_option("--model", rc.model, "Checkpoint")->required()->check(CLI::ExistingFile);
    c_rec->add_option("--dataset-id", rc.dataset_id, "Target dataset");
    c_rec->add_option("--omega-a", rc.omega_a, "Accuracy weight in [0,1]")->capture_default_str();
    c_rec->add_option("--gamma", rc.gamma, "Minimum accuracy")->capture_default_str();
    c_rec->add_option("--top-k", rc.top_k, "Number of recommendations")->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_rec->add_option("--strategy", rc.strategy, "weighted_score or distance_to_ideal")->capture_default_str();
    c_rec->add_option("--format", rc.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    c_rec->add_option("--out", rc.out, "Output file (default stdout)");
    c_rec->add_option("--front-csv", rc.front_csv, "Plot-ready front CSV (default <out>.front.csv)");
    c_rec->add_flag("--force", common.force, "Overwrite existing outputs");

    EvaluateArgs ev;
    auto* c_eval = app.add_subcommand("evaluate", "Score predicted fronts against true curves");
    c_eval->add_option("--true-corpus", ev.true_corpus, "Ingested corpus with true curves")->required()
        ->check(CLI::ExistingFile);
    c_eval->add_option("--pred", ev.pred, "Predicted candidates CSV")->check(CLI::ExistingFile);
    c_eval->add_option("--model", ev.model, "Checkpoint to predict with")->check(CLI::ExistingFile);
    c_eval->add_option("--dataset-id", ev.dataset_id, "Evaluated dataset");
    c_eval->add_option("--omega-a", ev.omega_a, "Accuracy weight in [0,1]")->capture_default_str();
    c_eval->add_option("--gamma", ev.gamma, "Minimum accuracy")->capture_default_str();
    c_eval->add_option("--k-list", ev.k_list, "SOVA cutoffs")->delimiter(',')->capture_default_str();
    c_eval->add_option("--lambda", ev.lambda, "SOVA rank decay")->capture_default_str();
    c_eval->add_option("--epoch-tol", ev.epoch_tol, "RE epoch tolerance")->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    c_eval->add_option("--ndcg-k", ev.ndcg_k, "NDCG cutoff")->capture_default_str();
    c_eval->add_option("--out", ev.out, "Report path (default stdout)");
    c_eval->add_flag("--force", common.force, "Overwrite existing outputs");

    UpdateArgs up;
    auto* c_up = app.add_subcommand("update", "Apply one online step from a realized curve");
    c_up->add_option("--model", up.model, "Input checkpoint")->required()->check(CLI::ExistingFile);
    c_up->add_option("--realized", up.realized, "Realized curve (one normalized JSON record)")->required()
        ->check(CLI::ExistingFile);
    c_up->add_option("--eta", up.eta, "Step size")->capture_default_str();
    c_up->add_option("--e-star", up.e_star, "Last realized epoch used (default: whole curve)");
    c_up->add_option("--out", up.out, "Updated checkpoint")->required();
    c_up->add_flag("--force", common.force, "Overwrite existing outputs");

    SynthArgs sy;
    auto* c_syn = app.add_subcommand("synth", "Generate a synthetic corpus with a planted front");
    c_syn->add_option("--n-configs", sy.n_configs, "Configurations")->capture_default_str();
    c_syn->add_option("--max-epoch", sy.max_epoch, "Epochs per curve")->capture_default_str();
    c_syn->add_option("--noise", sy.noise, "Accuracy noise sigma")->capture_default_str();
    c_syn->add_option("--seed", sy.seed, "Seed (GREEN_SEED overrides)")->capture_default_str();
    c_syn->add_option("--out", sy.out, "Raw corpus path")->required();
    c_syn->add_flag("--force", common.force, "Overwrite existing outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return input_error;
    }

    try {
        if (*c_ingest)
            return run_ingest(ingest, common);
        if (*c_train)
            return run_train(tr, common);
        if (*c_rec)
            return run_recommend(rc, common);
        if (*c_eval)
            return run_evaluate(ev, common);
        if (*c_up)
            return run_update(up, common);
        if (*c_syn)
            return run_synth(sy, common);
    } catch (const OutputCollision& e) {
        std::cerr << "error: " << e.what() << '\n';
        return collision;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return numerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return input_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return input_error;
}
