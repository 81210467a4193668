// Acceptance checks. One line per criterion; exit status is nonzero when a required check fails.

#include "green/dataset.hpp"
#include "green/metrics.hpp"
#include "green/pareto.hpp"
#include "green/pipeline.hpp"
#include "green/predictor.hpp"

#include "../oracles.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace green;

namespace {

struct Outcome {
    enum Kind { pass, fail, skip } kind = pass;
    std::string detail;
};

struct Criterion {
    std::string name;
    bool required = true;
    std::function<Outcome()> check;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Eigen::MatrixXd random_unit(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = u(rng);
    return m;
}

// ---------------------------------------------------------------------------------------------

Outcome sova_bounds()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int out_of_range = 0, nonzero_self = 0, bad_max = 0;
    double worst_max_err = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const int k = 1 + static_cast<int>(rng() % 20);
        const int m = 1 + static_cast<int>(rng() % 4);
        const double lambda = 3.0 * (1.0 - u(rng)); // (0, 3]
        std::vector<double> tau;
        for (int j = 0; j < m; ++j)
            tau.push_back(u(rng));
        tau[rng() % static_cast<std::size_t>(m)] += 1e-3; // not all zero
        const SovaSpec spec{k, lambda, tau};
        const auto x = random_unit(rng, k, m);
        const auto y = random_unit(rng, k, m);
        const double v = sova_at_k(x, y, spec);
        if (!(v >= 0.0 && v <= 1.0))
            ++out_of_range;
        if (sova_at_k(x, x, spec) != 0.0)
            ++nonzero_self;
        const double extreme = sova_at_k(Eigen::MatrixXd::Ones(k, m), Eigen::MatrixXd::Zero(k, m), spec);
        worst_max_err = std::max(worst_max_err, std::abs(extreme - 1.0));
        if (std::abs(extreme - 1.0) > 1e-12)
            ++bad_max;
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.kind = (out_of_range == 0 && nonzero_self == 0 && bad_max == 0 && secs < 10.0) ? Outcome::pass : Outcome::fail;
    o.detail = "10000 pairs, out-of-range " + std::to_string(out_of_range) + ", SOVA(X,X)!=0 "
               + std::to_string(nonzero_self) + ", max |SOVA(1,0)-1| " + fmt("%.2e", worst_max_err) + ", "
               + fmt("%.2f", secs) + " s";
    return o;
}

Outcome tie_consistency()
{
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int k = 1 + static_cast<int>(rng() % 20);
        const int m = 1 + static_cast<int>(rng() % 4);
        std::vector<double> tau;
        for (int j = 0; j < m; ++j)
            tau.push_back(0.01 + u(rng));
        const SovaSpec spec{k, 3.0 * (1.0 - u(rng)), tau};
        const auto x = random_unit(rng, k, m);
        const auto y = random_unit(rng, k, m);
        std::vector<Eigen::MatrixXd> groups;
        for (int i = 0; i < k; ++i)
            groups.push_back(y.row(i));
        worst = std::max(worst, std::abs(sova_with_ties(x, std::span<const Eigen::MatrixXd>(groups), spec)
                                         - sova_at_k(x, y, spec)));
    }
    return {worst <= 1e-15 ? Outcome::pass : Outcome::fail, "1000 pairs, max |diff| " + fmt("%.2e", worst)};
}

Outcome pareto_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int mismatches = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng() % 500;
        const bool coarse = t % 2 == 0;
        std::vector<CandidatePoint> pts;
        for (std::size_t i = 0; i < n; ++i) {
            double a = u(rng), e = u(rng);
            if (coarse) {
                a = std::round(a * 10.0) / 10.0;
                e = std::round(e * 10.0) / 10.0;
            }
            pts.emplace_back("c" + std::to_string(i), 1, a, e);
        }
        std::set<std::string> expected, got;
        for (auto i : oracle::nondominated(pts))
            expected.insert(pts[i].config_id);
        for (const auto& p : pareto_front(pts).points)
            got.insert(p.config_id);
        if (expected != got)
            ++mismatches;
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 30.0 ? Outcome::pass : Outcome::fail,
            "200 instances (n <= 500), mismatches " + std::to_string(mismatches) + ", " + fmt("%.2f", secs) + " s"};
}

Corpus synthetic_normalized(int n, int v, double noise, std::uint64_t seed)
{
    SynthSpec spec;
    spec.n_configs = n;
    spec.max_epoch = v;
    spec.noise_sigma = noise;
    spec.seed = seed;
    return normalize_targets(generate_synthetic(spec).corpus).corpus;
}

Outcome gradient_check()
{
    std::mt19937_64 rng(104);
    double worst = 0.0;
    for (int net = 0; net < 20; ++net) {
        const auto c = synthetic_normalized(3, 2 + static_cast<int>(rng() % 4), 0.05, rng());
        TrainConfig cfg;
        cfg.hidden = {2 + static_cast<int>(rng() % 5)};
        if (rng() % 2)
            cfg.hidden.push_back(2 + static_cast<int>(rng() % 4));
        cfg.max_epoch = c.max_epoch();
        auto p = initial_params(c, cfg, rng());
        std::normal_distribution<double> jitter(0.0, 0.3);
        for (Eigen::Index i = 0; i < p.theta.size(); ++i)
            p.theta[i] += jitter(rng);

        std::vector<Sample> batch;
        for (const auto& r : c.records)
            for (auto& s : record_samples(p, r))
                batch.push_back(std::move(s));
        auto prev = p;
        prev.theta *= 0.5;
        const auto alphas = dynamic_alphas(measure_losses(prev, batch)); // alpha_1 = 0.5 by rule
        const auto g = gradient(p, batch, alphas);
        const auto fd = oracle::finite_difference(
            [&](const Eigen::VectorXd& t) { return oracle::composite_loss(p, batch, alphas, t); }, p.theta, 1e-5);
        for (Eigen::Index i = 0; i < fd.size(); ++i) {
            const double scale = std::max({std::abs(fd[i]), std::abs(g[i]), 1e-6});
            worst = std::max(worst, std::abs(fd[i] - g[i]) / scale);
        }
    }
    return {worst < 1e-4 ? Outcome::pass : Outcome::fail, "20 nets, max relative error " + fmt("%.2e", worst)};
}

// Reference predictor used for the closed-loop run.
TrainConfig reference_config(int max_epoch)
{
    TrainConfig cfg;
    cfg.steps = 3000;
    cfg.batch_size = 8;
    cfg.eta = 0.05;
    cfg.hidden = {32, 32};
    cfg.optimizer = Optimizer::sgd;
    cfg.max_epoch = max_epoch;
    return cfg;
}

Outcome closed_loop()
{
    constexpr int kConfigs = 30, kEpochs = 20;
    std::ostringstream detail;
    bool ok = true;

    // Noise-free corpus, true curves injected as the predictor.
    {
        SynthSpec spec;
        spec.n_configs = kConfigs;
        spec.max_epoch = kEpochs;
        spec.seed = 2024;
        const auto synth = generate_synthetic(spec);
        const auto ingest = normalize_targets(synth.corpus);
        const auto planted = planted_truth(synth, ingest.scaling);
        EvalConfig cfg;
        cfg.k_list = {5};
        const auto r = evaluate(planted.candidates, true_candidates(ingest.corpus, kSyntheticDatasetId), cfg);
        const double recall = r.match.at(MatchRegime::ignored_epoch).recall;
        const double sova5 = r.sova.at(5);
        ok = ok && recall == 1.0 && sova5 == 0.0;
        detail << "oracle: recall_IE " << recall << ", SOVA@5 " << sova5;
    }

    // sigma = 0.02, trained reference predictor, five seeds.
    const auto t0 = std::chrono::steady_clock::now();
    double recall_sum = 0.0, ndcg_sum = 0.0;
    constexpr int kSeeds = 5;
    for (int s = 1; s <= kSeeds; ++s) {
        SynthSpec spec;
        spec.n_configs = kConfigs;
        spec.max_epoch = kEpochs;
        spec.noise_sigma = 0.02;
        spec.seed = static_cast<std::uint64_t>(s);
        const auto synth = generate_synthetic(spec);
        const auto ingest = normalize_targets(synth.corpus);
        const auto planted = planted_truth(synth, ingest.scaling);
        const auto trained = train(ingest.corpus, reference_config(kEpochs), static_cast<std::uint64_t>(s));
        const auto pred = predicted_candidates(trained.params, ingest.corpus, kSyntheticDatasetId);
        const auto r = evaluate(planted.candidates, pred, EvalConfig{});
        recall_sum += r.match.at(MatchRegime::ignored_epoch).recall;
        ndcg_sum += r.ndcg;
    }
    const double secs = seconds_since(t0);
    const double recall = recall_sum / kSeeds, ndcg = ndcg_sum / kSeeds;
    ok = ok && recall >= 0.8 && ndcg >= 0.9 && secs <= 300.0;
    detail << "; sigma 0.02 over " << kSeeds << " seeds: recall_IE " << fmt("%.3f", recall) << ", NDCG "
           << fmt("%.3f", ndcg) << ", " << fmt("%.1f", secs) << " s";
    return {ok ? Outcome::pass : Outcome::fail, detail.str()};
}

Outcome metric_bounds()
{
    std::mt19937_64 rng(106);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int bad_h = 0, bad_hv = 0;
    for (int t = 0; t < 1000; ++t) {
        const Eigen::MatrixX2d a = random_unit(rng, 1 + static_cast<Eigen::Index>(rng() % 20), 2);
        const Eigen::MatrixX2d b = random_unit(rng, 1 + static_cast<Eigen::Index>(rng() % 20), 2);
        const double h = hausdorff(a, b);
        if (!(h <= std::sqrt(2.0)) || h != hausdorff(b, a))
            ++bad_h;
        const double hv = hypervolume_2d(a, Eigen::Vector2d(1.0, 1.0));
        Eigen::MatrixX2d more(a.rows() + 1, 2);
        more << a, u(rng), u(rng);
        const double hv_more = hypervolume_2d(more, Eigen::Vector2d(1.0, 1.0));
        if (!(hv >= 0.0 && hv <= 1.0 && hv_more >= hv && hv_more <= 1.0))
            ++bad_hv;
    }

    double worst_mc = 0.0;
    for (int f = 0; f < 20; ++f) {
        auto fixture = [&](std::size_t n) {
            std::vector<CandidatePoint> pts;
            for (std::size_t i = 0; i < n; ++i)
                pts.emplace_back("p" + std::to_string(i), 1, u(rng), u(rng));
            return pareto_front(pts).points;
        };
        const auto truth = fixture(3 + rng() % 25);
        const auto pred = fixture(3 + rng() % 25);
        auto min_pairs = [](const std::vector<CandidatePoint>& pts) {
            std::vector<std::pair<double, double>> out;
            for (const auto& p : pts)
                out.emplace_back(1.0 - p.acc, p.energy);
            return out;
        };
        const double mc = oracle::monte_carlo_hv(min_pairs(truth), 1000000, 1000 + f)
                          - oracle::monte_carlo_hv(min_pairs(pred), 1000000, 2000 + f);
        worst_mc = std::max(worst_mc, std::abs(delta_hv(truth, pred) - mc));
    }
    const bool ok = bad_h == 0 && bad_hv == 0 && worst_mc <= 1e-2;
    return {ok ? Outcome::pass : Outcome::fail,
            "Hausdorff violations " + std::to_string(bad_h) + "/1000, HV violations " + std::to_string(bad_hv)
                + "/1000, max |dHV - MC| " + fmt("%.2e", worst_mc) + " over 20 fixtures"};
}

Outcome regime_monotonicity()
{
    std::mt19937_64 rng(107);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int violations = 0;
    for (int t = 0; t < 200; ++t) {
        const int configs = 2 + static_cast<int>(rng() % 10);
        const int epochs = 5 + static_cast<int>(rng() % 30);
        std::vector<CandidatePoint> truth, pred;
        for (int c = 0; c < configs; ++c) {
            double acc = 0.0, en = 0.0, pacc = 0.0, pen = 0.0;
            const double rate = 0.05 + 0.3 * u(rng), cost = 0.01 + 0.05 * u(rng);
            for (int e = 1; e <= epochs; ++e) {
                acc = 1.0 - std::exp(-rate * e);
                en = std::min(1.0, cost * e);
                pacc = std::clamp(acc + 0.1 * (u(rng) - 0.5), 0.0, 1.0);
                pen = std::clamp(en + 0.1 * (u(rng) - 0.5), 0.0, 1.0);
                truth.emplace_back("c" + std::to_string(c), e, acc, en);
                pred.emplace_back("c" + std::to_string(c), e, pacc, pen);
            }
        }
        const auto tf = pareto_front(truth);
        const auto pf = pareto_front(pred);
        const auto ee = pareto_match(tf, pf, {MatchRegime::exact_epoch, 5});
        const auto re = pareto_match(tf, pf, {MatchRegime::relaxed_epoch, 5});
        const auto ie = pareto_match(tf, pf, {MatchRegime::ignored_epoch, 5});
        if (!(ee.recall <= re.recall && re.recall <= ie.recall))
            ++violations;
    }
    return {violations == 0 ? Outcome::pass : Outcome::fail,
            "200 front pairs, ordering violations " + std::to_string(violations)};
}

std::string read_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int sh(const std::string& cmd)
{
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism()
{
    const fs::path dir = fs::temp_directory_path() / "green_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cli = GREEN_CLI_PATH;
    auto p = [&](const std::string& name) { return (dir / name).string(); };

    if (sh(cli + " synth --n-configs 15 --max-epoch 12 --noise 0.02 --seed 8 --out " + p("raw.jsonl")) != 0
        || sh(cli + " ingest --input " + p("raw.jsonl") + " --output " + p("corpus.jsonl")) != 0)
        return {Outcome::fail, "could not prepare corpus"};

    std::vector<std::string> differing;
    for (const char* run : {"1", "2"}) {
        const std::string model = p(std::string("m") + run + ".gpred");
        if (sh(cli + " train --corpus " + p("corpus.jsonl") + " --steps 200 --batch-size 4 --seed 11 --out " + model)
            != 0)
            return {Outcome::fail, "train failed"};
        if (sh(cli + " recommend --corpus " + p("corpus.jsonl") + " --model " + model
               + " --omega-a 0.6 --top-k 5 --out " + p(std::string("r") + run + ".json"))
            != 0)
            return {Outcome::fail, "recommend failed"};
    }
    for (const auto& [a, b] : std::vector<std::pair<std::string, std::string>>{
             {"m1.gpred", "m2.gpred"},
             {"m1.gpred.loss.csv", "m2.gpred.loss.csv"},
             {"r1.json", "r2.json"},
             {"r1.json.front.csv", "r2.json.front.csv"}})
        if (read_bytes(p(a)) != read_bytes(p(b)) || read_bytes(p(a)).empty())
            differing.push_back(a);
    fs::remove_all(dir);
    if (!differing.empty()) {
        std::string d = "differing outputs:";
        for (const auto& f : differing)
            d += " " + f;
        return {Outcome::fail, d};
    }
    return {Outcome::pass, "train checkpoint, loss CSV, recommendation JSON and front CSV byte-identical"};
}

Outcome dataset_sanity()
{
    const char* corpus_path = std::getenv("GREEN_HOLDOUT_CORPUS");
    if (!corpus_path || !*corpus_path || !fs::exists(corpus_path))
        return {Outcome::skip, "no ingested corpus (set GREEN_HOLDOUT_CORPUS to an ingested JSONL file)"};
    const Corpus corpus = load_corpus(corpus_path);
    if (!corpus.normalized())
        return {Outcome::fail, "corpus is not ingested"};
    const auto ids = corpus.dataset_ids();
    const char* holdout_env = std::getenv("GREEN_HOLDOUT");
    const std::string holdout = holdout_env && *holdout_env ? holdout_env : *ids.rbegin();
    const auto split = split_by_dataset(corpus, {holdout});
    if (split.train.empty())
        return {Outcome::fail, "no training datasets besides " + holdout};
    const auto trained = train(split.train, reference_config(corpus.max_epoch()), 1);
    const auto truth = true_candidates(split.test, holdout);
    const auto pred = predicted_candidates(trained.params, split.test, holdout);
    const auto r = evaluate(truth, pred, EvalConfig{});
    return {r.ndcg >= 0.85 ? Outcome::pass : Outcome::fail,
            "held-out '" + holdout + "': NDCG " + fmt("%.3f", r.ndcg)};
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {"SOVA bound suite", true, sova_bounds},
        {"tie-extension consistency", true, tie_consistency},
        {"Pareto oracle equivalence", true, pareto_oracle},
        {"gradient check", true, gradient_check},
        {"closed-loop synthetic recovery", true, closed_loop},
        {"metric bound suite", true, metric_bounds},
        {"regime monotonicity", true, regime_monotonicity},
        {"determinism", true, determinism},
        {"dataset-driven sanity (optional)", false, dataset_sanity},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {Outcome::fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.kind == Outcome::pass ? "PASS" : o.kind == Outcome::skip ? "SKIP" : "FAIL";
        std::cout << "[" << tag << "] " << c.name << ": " << o.detail << std::endl;
        if (o.kind == Outcome::fail && c.required)
            ++failed;
    }
    std::cout << (failed == 0 ? "all required criteria passed" : std::to_string(failed) + " required criteria failed")
              << std::endl;
    return failed == 0 ? 0 : 1;
}
