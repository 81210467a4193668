#include "green/metrics.hpp"

#include <map>
#include <set>
#include <tuple>

#include <json.hpp>

namespace green {

Eigen::MatrixX2d objective_matrix(std::span<const CandidatePoint> points)
{
    Eigen::MatrixX2d m(static_cast<Eigen::Index>(points.size()), 2);
    for (std::size_t i = 0; i < points.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) << points[i].acc, points[i].energy;
    return m;
}

Eigen::MatrixX2d minimization_matrix(std::span<const CandidatePoint> points)
{
    Eigen::MatrixX2d m = objective_matrix(points);
    m.col(0) = (1.0 - m.col(0).array()).matrix();
    return m;
}

double hypervolume(std::span<const CandidatePoint> points)
{
    return hypervolume_2d(minimization_matrix(points), Eigen::Vector2d(1.0, 1.0));
}

double delta_hv(std::span<const CandidatePoint> true_front, std::span<const CandidatePoint> pred_front)
{
    return hypervolume(true_front) - hypervolume(pred_front);
}

double hausdorff(std::span<const CandidatePoint> a, std::span<const CandidatePoint> b)
{
    return hausdorff(objective_matrix(a), objective_matrix(b));
}

std::string_view to_string(MatchRegime r)
{
    switch (r) {
    case MatchRegime::exact_epoch: return "EE";
    case MatchRegime::relaxed_epoch: return "RE";
    case MatchRegime::ignored_epoch: return "IE";
    }
    return "EE";
}

namespace {

using EpochsByConfig = std::map<std::string, std::vector<int>>;

EpochsByConfig group_epochs(const ParetoFront& front)
{
    EpochsByConfig g;
    for (const auto& p : front.points)
        g[p.config_id].push_back(p.epoch);
    for (auto& [id, epochs] : g)
        std::sort(epochs.begin(), epochs.end());
    return g;
}

// Greedy one-to-one pairing by |epoch difference|, then lower true epoch, then lower predicted epoch.
std::size_t relaxed_pairs(const std::vector<int>& truth, const std::vector<int>& pred, int tol)
{
    std::vector<std::tuple<int, int, int, std::size_t, std::size_t>> cand;
    for (std::size_t i = 0; i < truth.size(); ++i)
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const int d = std::abs(truth[i] - pred[j]);
            if (d <= tol)
                cand.emplace_back(d, truth[i], pred[j], i, j);
        }
    std::sort(cand.begin(), cand.end());
    std::vector<bool> used_t(truth.size(), false);
    std::vector<bool> used_p(pred.size(), false);
    std::size_t pairs = 0;
    for (const auto& [d, te, pe, i, j] : cand) {
        if (used_t[i] || used_p[j])
            continue;
        used_t[i] = used_p[j] = true;
        ++pairs;
    }
    return pairs;
}

} // namespace

MatchScores pareto_match(const ParetoFront& true_front, const ParetoFront& pred_front, MatchMode mode)
{
    if (true_front.empty())
        throw InputError("pareto_match: empty true front");
    if (mode.epoch_tol < 0)
        throw InputError("pareto_match: epoch tolerance must be non-negative");

    const auto truth = group_epochs(true_front);
    const auto pred = group_epochs(pred_front);
    MatchScores s;
    for (const auto& [id, t_epochs] : truth) {
        auto it = pred.find(id);
        if (it == pred.end())
            continue;
        const auto& p_epochs = it->second;
        switch (mode.regime) {
        case MatchRegime::exact_epoch: {
            std::vector<int> common;
            std::set_intersection(t_epochs.begin(), t_epochs.end(), p_epochs.begin(), p_epochs.end(),
                                  std::back_inserter(common));
            s.matched_true += common.size();
            s.matched_pred += common.size();
            break;
        }
        case MatchRegime::relaxed_epoch: {
            const auto pairs = relaxed_pairs(t_epochs, p_epochs, mode.epoch_tol);
            s.matched_true += pairs;
            s.matched_pred += pairs;
            break;
        }
        case MatchRegime::ignored_epoch:
            s.matched_true += t_epochs.size();
            s.matched_pred += p_epochs.size();
            break;
        }
    }
    s.recall = static_cast<double>(s.matched_true) / static_cast<double>(true_front.size());
    s.precision = pred_front.empty() ? 0.0
                                     : static_cast<double>(s.matched_pred) / static_cast<double>(pred_front.size());
    s.f1 = (s.recall + s.precision) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

PredictionMae prediction_mae(std::span<const CandidatePoint> pred, std::span<const CandidatePoint> truth)
{
    std::map<std::pair<std::string, int>, const CandidatePoint*> index;
    for (const auto& t : truth)
        index.emplace(std::pair{t.config_id, t.epoch}, &t);
    PredictionMae m;
    for (const auto& p : pred) {
        auto it = index.find({p.config_id, p.epoch});
        if (it == index.end())
            continue;
        m.acc += std::abs(p.acc - it->second->acc);
        m.energy += std::abs(p.energy - it->second->energy);
        ++m.aligned;
    }
    if (m.aligned == 0)
        throw InputError("prediction_mae: predictions and truth share no (config, epoch) pair");
    m.acc /= static_cast<double>(m.aligned);
    m.energy /= static_cast<double>(m.aligned);
    return m;
}

std::string to_json(const MetricReport& r)
{
    using nlohmann::json;
    json j;
    j["status"] = r.status;
    j["lambda"] = r.lambda;
    j["ref_point"] = {r.ref_point[0], r.ref_point[1]};
    j["omega_a"] = r.omega_a;
    j["gamma"] = r.gamma;
    j["epoch_tol"] = r.epoch_tol;
    j["true_front_size"] = r.true_front_size;
    j["pred_front_size"] = r.pred_front_size;
    j["mae_A"] = r.mae.acc;
    j["mae_E"] = r.mae.energy;
    j["mae_points"] = r.mae.aligned;
    if (r.status != "ok") {
        for (const char* key : {"sova@k", "hausdorff", "hv_true", "hv_pred", "delta_hv", "ndcg"})
            j[key] = nullptr;
        return j.dump(2);
    }

    json sova = json::object();
    json eff = json::object();
    for (const auto& [k, v] : r.sova) {
        sova[std::to_string(k)] = v;
        eff[std::to_string(k)] = r.sova_effective_k.at(k);
    }
    j["sova@k"] = sova;
    j["sova_effective_k"] = eff;
    json sweep = json::object();
    for (const auto& [omega, per_k] : r.sova_by_omega) {
        json row = json::object();
        for (const auto& [k, v] : per_k)
            row[std::to_string(k)] = v;
        sweep[omega] = row;
    }
    j["sova_by_omega"] = sweep;
    j["hausdorff"] = r.hausdorff;
    j["hv_true"] = r.hv_true;
    j["hv_pred"] = r.hv_pred;
    j["delta_hv"] = r.delta_hv;
    j["ndcg"] = r.ndcg;
    j["ndcg_k"] = r.ndcg_k;
    j["ndcg_by_omega"] = r.ndcg_by_omega;
    for (const auto& [regime, m] : r.match) {
        const std::string tag(to_string(regime));
        j["recall_" + tag] = m.recall;
        j["precision_" + tag] = m.precision;
        j["f1_" + tag] = m.f1;
    }
    return j.dump(2);
}

} // namespace green
