#include "green/pareto.hpp"

#include <algorithm>
#include <cmath>

namespace green {

ParetoFront pareto_front(std::span<const CandidatePoint> candidates)
{
    if (candidates.empty())
        throw InputError("pareto_front: no candidates");
    ParetoFront front;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < candidates.size() && !dominated; ++j)
            dominated = j != i && dominates(candidates[j], candidates[i]);
        if (!dominated)
            front.points.push_back(candidates[i]);
    }
    return front;
}

ParetoFront filter_threshold(const ParetoFront& front, double gamma)
{
    ParetoFront out;
    for (std::size_t i = 0; i < front.points.size(); ++i) {
        if (front.points[i].acc < gamma)
            continue;
        out.points.push_back(front.points[i]);
        if (!front.ranks.empty())
            out.ranks.push_back(front.ranks[i]);
    }
    return out;
}

double score(const CandidatePoint& p, const PreferenceSpec& prefs)
{
    const double energy_weight = prefs.literal_score ? 1.0 - prefs.omega_e : prefs.omega_e;
    return prefs.omega_a * p.acc - energy_weight * p.energy;
}

bool tie_break_before(const CandidatePoint& a, const CandidatePoint& b)
{
    if (a.acc != b.acc)
        return a.acc > b.acc;
    if (a.energy != b.energy)
        return a.energy < b.energy;
    if (a.epoch != b.epoch)
        return a.epoch < b.epoch;
    return a.config_id < b.config_id;
}

std::vector<ScoredPoint> RankedSelection::top(std::size_t k) const
{
    return {ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(std::min(k, ordered.size()))};
}

RankedSelection rank(const ParetoFront& front, const PreferenceSpec& prefs)
{
    prefs.validate();
    if (front.empty())
        throw EmptyFrontError();
    RankedSelection sel;
    sel.ordered.reserve(front.size());
    for (const auto& p : front.points) {
        const double s = prefs.strategy == RankStrategy::weighted_score
                             ? score(p, prefs)
                             : -std::hypot(1.0 - p.acc, p.energy);
        sel.ordered.push_back({p, s});
    }
    std::sort(sel.ordered.begin(), sel.ordered.end(), [](const ScoredPoint& a, const ScoredPoint& b) {
        if (a.score != b.score)
            return a.score > b.score;
        return tie_break_before(a.point, b.point);
    });
    return sel;
}

ParetoFront with_ranks(const RankedSelection& selection)
{
    ParetoFront out;
    int r = 0;
    for (const auto& sp : selection.ordered) {
        out.points.push_back(sp.point);
        out.ranks.push_back(++r);
    }
    return out;
}

} // namespace green
