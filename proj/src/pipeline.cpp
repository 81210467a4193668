#include "green/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace green {

namespace {

using PointKey = std::pair<std::string, int>;

PointKey key(const CandidatePoint& p) { return {p.config_id, p.epoch}; }

std::vector<std::size_t> records_of(const Corpus& corpus, const std::string& dataset_id)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < corpus.records.size(); ++i)
        if (corpus.records[i].dataset_id == dataset_id)
            idx.push_back(i);
    if (idx.empty())
        throw InputError("dataset '" + dataset_id + "' has no records in the corpus");
    return idx;
}

std::string omega_label(double omega)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f", omega);
    return buf;
}

// True objective values of the leading k items of a ranked list, one row per rank.
Eigen::MatrixX2d true_rows(const std::vector<ScoredPoint>& ranked, std::size_t k,
                           const std::map<PointKey, CandidatePoint>& truth)
{
    Eigen::MatrixX2d m(static_cast<Eigen::Index>(k), 2);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& t = truth.at(key(ranked[i].point));
        m.row(static_cast<Eigen::Index>(i)) << t.acc, t.energy;
    }
    return m;
}

std::vector<PointKey> keys_of(const RankedSelection& r)
{
    std::vector<PointKey> out;
    for (const auto& s : r.ordered)
        out.push_back(key(s.point));
    return out;
}

} // namespace

std::vector<CandidateConfig> dataset_configs(const Corpus& corpus, const std::string& dataset_id)
{
    const auto idx = records_of(corpus, dataset_id);
    std::map<std::string, int> counts;
    for (auto i : idx)
        ++counts[corpus.records[i].config_id];
    std::vector<CandidateConfig> out;
    for (auto i : idx) {
        const auto& r = corpus.records[i];
        std::string id = r.config_id;
        if (counts[id] > 1)
            id += "|bs=" + std::to_string(r.hyperparams.batch_size) + "|lr=" + format_double(r.hyperparams.learning_rate)
                  + "|discard=" + format_double(r.discard_pct);
        out.push_back({std::move(id), i});
    }
    return out;
}

std::vector<CandidatePoint> true_candidates(const Corpus& corpus, const std::string& dataset_id)
{
    if (!corpus.normalized())
        throw InputError("true candidates need a normalized corpus");
    std::vector<CandidatePoint> out;
    for (const auto& c : dataset_configs(corpus, dataset_id))
        for (const auto& p : corpus.records[c.record_index].curve)
            out.emplace_back(c.candidate_id, p.epoch, p.accuracy, p.energy, Provenance::truth);
    return out;
}

std::vector<CandidatePoint> predicted_candidates(const PredictorParams& params, const Corpus& corpus,
                                                 const std::string& dataset_id)
{
    const auto configs = dataset_configs(corpus, dataset_id);
    int v = 0;
    for (const auto& c : configs)
        v = std::max(v, corpus.records[c.record_index].max_epoch());
    v = std::min(v, params.max_epoch);
    std::vector<CandidatePoint> out;
    for (const auto& c : configs) {
        const auto& r = corpus.records[c.record_index];
        auto curve = predict_curve(params, c.candidate_id, r.features.padded(params.feature_widths), r.hyperparams, v);
        out.insert(out.end(), curve.begin(), curve.end());
    }
    return out;
}

Recommendation recommend(std::span<const CandidatePoint> candidates, const PreferenceSpec& prefs)
{
    prefs.validate();
    Recommendation rec;
    rec.front = pareto_front(candidates);
    rec.filtered = filter_threshold(rec.front, prefs.gamma);
    if (!rec.filtered.empty())
        rec.ranking = rank(rec.filtered, prefs);
    return rec;
}

std::vector<double> omega_sweep()
{
    std::vector<double> out;
    for (int i = 0; i <= 10; ++i)
        out.push_back(static_cast<double>(i) / 10.0);
    return out;
}

std::map<std::pair<std::string, int>, double> graded_relevance(std::span<const CandidatePoint> pool,
                                                               const PreferenceSpec& prefs)
{
    std::map<PointKey, double> s;
    for (const auto& p : pool)
        s[key(p)] = score(p, prefs);
    if (s.empty())
        return s;
    auto [lo, hi] = std::minmax_element(s.begin(), s.end(),
                                        [](const auto& a, const auto& b) { return a.second < b.second; });
    const double min = lo->second;
    const double range = hi->second - min;
    for (auto& [k, v] : s)
        v = range > 0.0 ? std::round((v - min) / range * 12.0) / 4.0 : 0.0;
    return s;
}

MetricReport evaluate(std::span<const CandidatePoint> truth, std::span<const CandidatePoint> predicted,
                      const EvalConfig& cfg)
{
    if (truth.empty())
        throw InputError("evaluation needs true curves");
    if (cfg.k_list.empty())
        throw InputError("k-list must not be empty");
    for (int k : cfg.k_list)
        if (k < 1)
            throw InputError("every k must be >= 1");
    const auto prefs = PreferenceSpec::from_omega_a(cfg.omega_a, cfg.gamma);
    prefs.validate();

    std::map<PointKey, CandidatePoint> truth_by_key;
    for (const auto& t : truth)
        if (!truth_by_key.emplace(key(t), t).second)
            throw InputError("duplicate true point for '" + t.config_id + "' epoch " + std::to_string(t.epoch));
    std::vector<CandidatePoint> pred;
    for (const auto& p : predicted)
        if (truth_by_key.count(key(p)))
            pred.push_back(p);
    if (pred.empty())
        throw InputError("predictions share no (config, epoch) point with the true curves");

    MetricReport r;
    r.lambda = cfg.lambda;
    r.omega_a = cfg.omega_a;
    r.gamma = cfg.gamma;
    r.epoch_tol = cfg.epoch_tol;
    r.ndcg_k = cfg.ndcg_k;
    r.mae = prediction_mae(pred, truth);

    const ParetoFront true_front = filter_threshold(pareto_front(truth), cfg.gamma);
    const ParetoFront pred_front = filter_threshold(pareto_front(pred), cfg.gamma);
    r.true_front_size = true_front.size();
    r.pred_front_size = pred_front.size();
    if (true_front.empty() || pred_front.empty()) {
        r.status = "empty_front";
        return r;
    }

    std::vector<CandidatePoint> pool = true_front.points;
    for (const auto& p : pred_front.points)
        pool.push_back(truth_by_key.at(key(p)));

    auto sova_for = [&](const PreferenceSpec& pr, std::map<int, double>& values, std::map<int, int>* eff) {
        const auto true_ranked = rank(true_front, pr).ordered;
        const auto pred_ranked = rank(pred_front, pr).ordered;
        for (int k : cfg.k_list) {
            const std::size_t k_eff =
                std::min({static_cast<std::size_t>(k), true_ranked.size(), pred_ranked.size()});
            SovaSpec spec{static_cast<int>(k_eff), cfg.lambda, {pr.omega_a, pr.omega_e}};
            values[k] = sova_at_k(true_rows(true_ranked, k_eff, truth_by_key),
                                  true_rows(pred_ranked, k_eff, truth_by_key), spec);
            if (eff)
                (*eff)[k] = static_cast<int>(k_eff);
        }
    };
    sova_for(prefs, r.sova, &r.sova_effective_k);

    double ndcg_sum = 0.0;
    for (double omega : omega_sweep()) {
        const auto pr = PreferenceSpec::from_omega_a(omega, cfg.gamma);
        sova_for(pr, r.sova_by_omega[omega_label(omega)], nullptr);
        const auto rel = graded_relevance(pool, pr);
        const auto true_keys = keys_of(rank(true_front, pr));
        const auto pred_keys = keys_of(rank(pred_front, pr));
        const double v = ndcg_at_k<PointKey>(pred_keys, true_keys, [&](const PointKey& k) { return rel.at(k); },
                                             cfg.ndcg_k);
        r.ndcg_by_omega[omega_label(omega)] = v;
        ndcg_sum += v;
    }
    r.ndcg = ndcg_sum / static_cast<double>(omega_sweep().size());

    r.hausdorff = hausdorff(std::span<const CandidatePoint>(true_front.points),
                            std::span<const CandidatePoint>(pred_front.points));
    r.hv_true = hypervolume(true_front.points);
    r.hv_pred = hypervolume(pred_front.points);
    r.delta_hv = r.hv_true - r.hv_pred;
    for (auto regime : {MatchRegime::exact_epoch, MatchRegime::relaxed_epoch, MatchRegime::ignored_epoch})
        r.match[regime] = pareto_match(true_front, pred_front, {regime, cfg.epoch_tol});
    return r;
}

PlantedTruth planted_truth(const SyntheticCorpus& synth, const ScalingParams& scaling)
{
    PlantedTruth out;
    out.noiseless = apply_scaling(noiseless_corpus(synth), scaling);
    out.candidates = true_candidates(out.noiseless, kSyntheticDatasetId);
    out.front = pareto_front(out.candidates);
    return out;
}

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Prefer the shortest representation that still round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[32];
        std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
        if (std::strtod(shorter, nullptr) == v)
            return shorter;
    }
    return buf;
}

void write_front_csv(std::ostream& out, std::span<const CandidatePoint> candidates, const ParetoFront& front)
{
    std::map<PointKey, bool> on_front;
    for (const auto& p : front.points)
        on_front[key(p)] = true;
    out << "acc,energy,config_id,epoch,is_front\n";
    for (const auto& p : candidates) {
        if (p.config_id.find_first_of(",\"\n") != std::string::npos)
            throw InputError("config_id '" + p.config_id + "' cannot be written to CSV");
        out << format_double(p.acc) << ',' << format_double(p.energy) << ',' << p.config_id << ',' << p.epoch << ','
            << (on_front.count(key(p)) ? 1 : 0) << '\n';
    }
}

std::vector<CandidatePoint> read_candidates_csv(std::istream& in, Provenance provenance)
{
    std::string line;
    if (!std::getline(in, line))
        throw InputError("candidate CSV is empty");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');)
            header.push_back(cell);
    }
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw InputError("candidate CSV lacks column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto c_acc = column("acc"), c_energy = column("energy"), c_id = column("config_id"),
               c_epoch = column("epoch");

    std::vector<CandidatePoint> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');)
            cells.push_back(cell);
        if (cells.size() < header.size())
            throw InputError("candidate CSV line " + std::to_string(lineno) + ": too few columns");
        try {
            const double acc = std::stod(cells[c_acc]);
            const double energy = std::stod(cells[c_energy]);
            const int epoch = std::stoi(cells[c_epoch]);
            if (epoch < 1)
                throw InputError("epoch must be >= 1");
            out.emplace_back(cells[c_id], epoch, acc, energy, provenance);
        } catch (const std::logic_error&) {
            throw InputError("candidate CSV line " + std::to_string(lineno) + ": malformed number");
        } catch (const InputError& e) {
            throw InputError("candidate CSV line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (out.empty())
        throw InputError("candidate CSV has no rows");
    return out;
}

std::string recommendation_json(const Recommendation& rec, const PreferenceSpec& prefs,
                                const std::string& dataset_id, std::size_t n_candidates)
{
    using nlohmann::json;
    json j;
    j["dataset_id"] = dataset_id;
    j["omega_a"] = prefs.omega_a;
    j["omega_e"] = prefs.omega_e;
    j["gamma"] = prefs.gamma;
    j["top_k"] = prefs.top_k;
    j["strategy"] = std::string(to_string(prefs.strategy));
    j["n_candidates"] = n_candidates;
    j["front_size"] = rec.front.size();
    j["filtered_front_size"] = rec.filtered.size();
    if (rec.empty()) {
        j["status"] = "empty_front";
        j["message"] = EmptyFrontError().what();
        j["recommendations"] = json::array();
        return j.dump(2);
    }
    j["status"] = "ok";
    json items = json::array();
    int position = 1;
    for (const auto& s : rec.ranking->top(static_cast<std::size_t>(prefs.top_k)))
        items.push_back({{"rank", position++},
                         {"config_id", s.point.config_id},
                         {"epoch", s.point.epoch},
                         {"acc", s.point.acc},
                         {"energy", s.point.energy},
                         {"score", s.score}});
    j["recommendations"] = items;
    return j.dump(2);
}

void write_recommendation_csv(std::ostream& out, const Recommendation& rec, const PreferenceSpec& prefs)
{
    out << "rank,config_id,epoch,acc,energy,score\n";
    if (rec.empty())
        return;
    int position = 1;
    for (const auto& s : rec.ranking->top(static_cast<std::size_t>(prefs.top_k)))
        out << position++ << ',' << s.point.config_id << ',' << s.point.epoch << ',' << format_double(s.point.acc)
            << ',' << format_double(s.point.energy) << ',' << format_double(s.score) << '\n';
}

void write_loss_csv(std::ostream& out, std::span<const LossReport> history)
{
    out << "step,L,epoch,L_A_e,L_E_e,alpha_e\n";
    for (std::size_t step = 0; step < history.size(); ++step)
        for (const auto& e : history[step].per_epoch)
            out << step + 1 << ',' << format_double(history[step].overall) << ',' << e.epoch << ','
                << format_double(e.loss_a) << ',' << format_double(e.loss_e) << ',' << format_double(e.alpha) << '\n';
}

} // namespace green
