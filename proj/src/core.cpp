#include "green/core.hpp"

#include <algorithm>
#include <cmath>

namespace green {

std::string_view to_string(DomainTag tag)
{
    switch (tag) {
    case DomainTag::vision: return "vision";
    case DomainTag::nlp: return "nlp";
    case DomainTag::recsys: return "recsys";
    case DomainTag::synthetic: return "synthetic";
    }
    return "synthetic";
}

DomainTag parse_domain_tag(std::string_view text)
{
    if (text == "vision") return DomainTag::vision;
    if (text == "nlp") return DomainTag::nlp;
    if (text == "recsys") return DomainTag::recsys;
    if (text == "synthetic") return DomainTag::synthetic;
    throw InputError("unknown domain_tag '" + std::string(text) + "'");
}

std::string_view to_string(Provenance p)
{
    return p == Provenance::predicted ? "predicted" : "true";
}

std::string_view to_string(RankStrategy s)
{
    return s == RankStrategy::weighted_score ? "weighted_score" : "distance_to_ideal";
}

RankStrategy parse_rank_strategy(std::string_view text)
{
    if (text == "weighted_score") return RankStrategy::weighted_score;
    if (text == "distance_to_ideal") return RankStrategy::distance_to_ideal;
    throw InputError("unknown ranking strategy '" + std::string(text) + "'");
}

FeatureWidths FeatureVector::widths() const
{
    FeatureWidths w{};
    for (std::size_t g = 0; g < kFeatureGroups; ++g)
        w[g] = values[g].size();
    return w;
}

FeatureVector FeatureVector::from_values(std::array<std::vector<double>, kFeatureGroups> vals)
{
    FeatureVector fv;
    for (std::size_t g = 0; g < kFeatureGroups; ++g) {
        fv.mask[g].assign(vals[g].size(), 1);
        fv.values[g] = std::move(vals[g]);
    }
    return fv;
}

FeatureVector FeatureVector::padded(const FeatureWidths& widths) const
{
    FeatureVector out = *this;
    for (std::size_t g = 0; g < kFeatureGroups; ++g) {
        if (out.values[g].size() > widths[g])
            throw InputError("feature group '" + std::string(kFeatureGroupNames[g]) + "' has "
                             + std::to_string(out.values[g].size()) + " values, expected at most "
                             + std::to_string(widths[g]));
        out.values[g].resize(widths[g], 0.0);
        out.mask[g].resize(widths[g], 0);
    }
    return out;
}

void Hyperparams::validate() const
{
    if (batch_size < 1)
        throw InputError("batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw InputError("learning_rate must be a positive finite number");
}

void ConfigRecord::validate() const
{
    hyperparams.validate();
    if (!(discard_pct >= 0.0 && discard_pct <= 1.0))
        throw InputError("discard_pct must lie in [0,1]");
    if (curve.empty())
        throw InputError("curve must be non-empty");
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const auto& p = curve[i];
        if (p.epoch != static_cast<int>(i) + 1)
            throw InputError("curve epochs must run 1..V consecutively");
        if (!std::isfinite(p.accuracy) || !std::isfinite(p.energy))
            throw InputError("curve values must be finite");
        if (p.energy < 0.0)
            throw InputError("curve energy must be non-negative");
        if (i > 0 && p.energy < curve[i - 1].energy)
            throw InputError("curve energy must be cumulative (non-decreasing)");
    }
    for (std::size_t g = 0; g < kFeatureGroups; ++g)
        if (features.values[g].size() != features.mask[g].size())
            throw InputError("feature mask width differs from value width");
}

RecordKey key_of(const ConfigRecord& r)
{
    return {r.config_id, r.dataset_id, r.hyperparams.batch_size, r.hyperparams.learning_rate, r.discard_pct};
}

double clamp_unit(double x)
{
    if (!std::isfinite(x))
        throw InputError("clamp_unit: non-finite value");
    return std::clamp(x, 0.0, 1.0);
}

CandidatePoint::CandidatePoint(std::string id, int ep, double a, double e, Provenance prov)
    : config_id(std::move(id)), epoch(ep), acc(clamp_unit(a)), energy(clamp_unit(e)), provenance(prov)
{
}

PreferenceSpec PreferenceSpec::from_omega_a(double omega_a, double gamma, int top_k, RankStrategy strategy)
{
    PreferenceSpec p;
    p.omega_a = omega_a;
    p.omega_e = 1.0 - omega_a;
    p.gamma = gamma;
    p.top_k = top_k;
    p.strategy = strategy;
    p.validate();
    return p;
}

void PreferenceSpec::validate() const
{
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(omega_a) || !in_unit(omega_e))
        throw InputError("preference weights must lie in [0,1]");
    if (std::abs(omega_a + omega_e - 1.0) > 1e-9)
        throw InputError("omega_a + omega_e must equal 1");
    if (!in_unit(gamma))
        throw InputError("gamma must lie in [0,1]");
    if (top_k < 1)
        throw InputError("top_k must be positive");
}

} // namespace green
