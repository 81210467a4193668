#pragma once

#include "green/core.hpp"

#include <span>
#include <vector>

namespace green {

/// Non-dominated candidates. `ranks` is empty until the front is ranked; then ranks[i] >= 1 belongs to points[i].
struct ParetoFront {
    std::vector<CandidatePoint> points;
    std::vector<int> ranks;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

/// Exactly the non-dominated subset, in input order. Pairwise check, O(m * n^2).
/// Identical points do not dominate each other and are all kept. Throws on empty input.
ParetoFront pareto_front(std::span<const CandidatePoint> candidates);

/// Keeps points with acc >= gamma. The result may be empty; callers test `empty()`.
ParetoFront filter_threshold(const ParetoFront& front, double gamma);

/// omega_a * acc - omega_e * energy (or omega_a * acc - (1 - omega_e) * energy in literal mode).
double score(const CandidatePoint& p, const PreferenceSpec& prefs);

/// Deterministic order among equal scores: higher acc, lower energy, lower epoch, then config_id.
bool tie_break_before(const CandidatePoint& a, const CandidatePoint& b);

struct ScoredPoint {
    CandidatePoint point;
    double score = 0.0;
};

struct RankedSelection {
    std::vector<ScoredPoint> ordered; // non-increasing score

    const ScoredPoint& best() const { return ordered.front(); }
    /// At most k leading entries; no padding.
    std::vector<ScoredPoint> top(std::size_t k) const;
};

/// Raised when ranking is requested on a front that filtering left empty.
class EmptyFrontError : public InputError {
public:
    EmptyFrontError() : InputError("no configuration meets gamma") {}
    bool empty_result() const noexcept { return true; }
};

/// weighted_score: by score descending. distance_to_ideal: by Euclidean distance to (acc 1, energy 0)
/// ascending, reported as score = -distance.
RankedSelection rank(const ParetoFront& front, const PreferenceSpec& prefs);

/// Copy of the front ordered as in `selection`, with ranks 1..n attached.
ParetoFront with_ranks(const RankedSelection& selection);

} // namespace green
