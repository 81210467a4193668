#pragma once

#include "green/core.hpp"
#include "green/pareto.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace green {

// ---------------------------------------------------------------------------------------------
// SOVA@k
// ---------------------------------------------------------------------------------------------

/// Exponentially decaying position weights w_i = exp(-lambda*i) / sum_l exp(-lambda*l), i = 1..k.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rank_weights(int k, Scalar lambda)
{
    if (k < 1)
        throw InputError("rank_weights: k must be >= 1");
    if (!(lambda > Scalar(0)) || !std::isfinite(static_cast<double>(lambda)))
        throw InputError("rank_weights: lambda must be positive");
    // exp(-lambda*(i-1)) differs from exp(-lambda*i) by a common factor that normalization removes.
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w(k);
    for (int i = 0; i < k; ++i)
        w[i] = std::exp(-lambda * Scalar(i));
    return w / w.sum();
}

struct SovaSpec {
    int k = 1;
    double lambda = 1.0;
    std::vector<double> tau; // one non-negative weight per objective, not all zero

    /// tau_j / sum_l tau_l. Throws unless tau has `m` non-negative entries with a positive sum.
    Eigen::VectorXd normalized_tau(Eigen::Index m) const
    {
        if (static_cast<Eigen::Index>(tau.size()) != m)
            throw InputError("SOVA: tau needs one weight per objective");
        Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(tau.data(), m);
        if ((t.array() < 0.0).any() || !t.allFinite() || !(t.sum() > 0.0))
            throw InputError("SOVA: tau must be non-negative and not all zero");
        return t / t.sum();
    }
};

namespace detail {

template <typename Derived>
void require_unit_box(const Eigen::MatrixBase<Derived>& m, const char* what)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = static_cast<double>(m(i, j));
            if (!(v >= 0.0 && v <= 1.0))
                throw InputError(std::string(what) + ": objective values must lie in [0,1]");
        }
}

} // namespace detail

/// Rank-weighted, objective-weighted absolute difference of two independently ranked lists.
/// Rows are ranks 1..k, columns objectives. Both inputs hold normalized true objective values.
template <typename DX, typename DY>
typename DX::Scalar sova_at_k(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y, const SovaSpec& spec)
{
    using Scalar = typename DX::Scalar;
    if (x.rows() != spec.k || y.rows() != spec.k)
        throw InputError("sova_at_k: both lists must hold exactly k ranked items");
    if (x.cols() != y.cols() || x.cols() < 1)
        throw InputError("sova_at_k: objective counts differ");
    detail::require_unit_box(x, "sova_at_k");
    detail::require_unit_box(y, "sova_at_k");
    const auto w = rank_weights<Scalar>(spec.k, static_cast<Scalar>(spec.lambda));
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> tau = spec.normalized_tau(x.cols()).template cast<Scalar>();

    Scalar total(0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Scalar per_rank(0);
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            per_rank += tau[j] * std::abs(x(i, j) - y(i, j));
        total += w[i] * per_rank;
    }
    return total;
}

/// Tie-aware SOVA@k: rank i of the second list is a group of tied items (rows of groups[i]);
/// the absolute differences against x_i are averaged within the group.
template <typename DX, typename Scalar = typename DX::Scalar>
Scalar sova_with_ties(const Eigen::MatrixBase<DX>& x,
                      std::span<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> groups,
                      const SovaSpec& spec)
{
    if (x.rows() != spec.k || static_cast<Eigen::Index>(groups.size()) != spec.k)
        throw InputError("sova_with_ties: need k ranks on both sides");
    detail::require_unit_box(x, "sova_with_ties");
    for (const auto& g : groups) {
        if (g.rows() == 0)
            throw InputError("sova_with_ties: empty rank group");
        if (g.cols() != x.cols())
            throw InputError("sova_with_ties: objective counts differ");
        detail::require_unit_box(g, "sova_with_ties");
    }
    const auto w = rank_weights<Scalar>(spec.k, static_cast<Scalar>(spec.lambda));
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> tau = spec.normalized_tau(x.cols()).template cast<Scalar>();

    Scalar total(0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto& group = groups[static_cast<std::size_t>(i)];
        Scalar per_rank(0);
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            Scalar diff(0);
            for (Eigen::Index p = 0; p < group.rows(); ++p)
                diff += std::abs(x(i, j) - group(p, j));
            per_rank += tau[j] * (diff / static_cast<Scalar>(group.rows()));
        }
        total += w[i] * per_rank;
    }
    return total;
}

// ---------------------------------------------------------------------------------------------
// Geometry of fronts
// ---------------------------------------------------------------------------------------------

/// Largest nearest-neighbour Euclidean distance in either direction. Rows are points.
template <typename DP, typename DQ>
typename DP::Scalar hausdorff(const Eigen::MatrixBase<DP>& p, const Eigen::MatrixBase<DQ>& q)
{
    using Scalar = typename DP::Scalar;
    if (p.rows() == 0 || q.rows() == 0)
        throw InputError("hausdorff: point sets must be non-empty");
    if (p.cols() != q.cols())
        throw InputError("hausdorff: dimension mismatch");
    auto directed = [](const auto& a, const auto& b) {
        Scalar worst(0);
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            Scalar nearest = std::numeric_limits<Scalar>::infinity();
            for (Eigen::Index j = 0; j < b.rows(); ++j)
                nearest = std::min(nearest, (a.row(i) - b.row(j)).squaredNorm());
            worst = std::max(worst, nearest);
        }
        return std::sqrt(worst);
    };
    return std::max(directed(p, q), directed(q, p));
}

/// Area weakly dominated by a set of minimization points (rows, 2 columns) and bounded by `ref`.
/// Sort-and-sweep. Throws if a point lies outside the box bounded by ref.
template <typename Derived>
typename Derived::Scalar hypervolume_2d(const Eigen::MatrixBase<Derived>& points,
                                        const Eigen::Matrix<typename Derived::Scalar, 2, 1>& ref)
{
    using Scalar = typename Derived::Scalar;
    if (points.rows() == 0)
        throw InputError("hypervolume: empty point set");
    if (points.cols() != 2)
        throw InputError("hypervolume: only two objectives are supported");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        if (!(points(i, 0) <= ref[0] && points(i, 1) <= ref[1]))
            throw InputError("hypervolume: point outside the reference box");
        order[static_cast<std::size_t>(i)] = i;
    }
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (points(a, 0) != points(b, 0))
            return points(a, 0) < points(b, 0);
        return points(a, 1) < points(b, 1);
    });
    // Sweep along the first objective; each new level of the second objective adds a slab.
    Scalar area(0);
    Scalar level = ref[1];
    for (auto idx : order) {
        const Scalar y = points(idx, 1);
        if (y < level) {
            area += (ref[0] - points(idx, 0)) * (level - y);
            level = y;
        }
    }
    return area;
}

/// (acc, energy) rows of the candidates.
Eigen::MatrixX2d objective_matrix(std::span<const CandidatePoint> points);

/// (1 - acc, energy) rows: both objectives minimized.
Eigen::MatrixX2d minimization_matrix(std::span<const CandidatePoint> points);

/// Hypervolume of candidates in minimization space with reference point (1, 1).
double hypervolume(std::span<const CandidatePoint> points);

/// HV(true) - HV(pred), reference (1, 1) in minimization space. Negative when pred covers more.
double delta_hv(std::span<const CandidatePoint> true_front, std::span<const CandidatePoint> pred_front);

double hausdorff(std::span<const CandidatePoint> a, std::span<const CandidatePoint> b);

// ---------------------------------------------------------------------------------------------
// Ranking quality
// ---------------------------------------------------------------------------------------------

/// NDCG@k with gains 2^rel - 1 and log2(i+1) discounts.
/// The ideal ordering sorts the relevances of every item in either list non-increasingly, so the
/// result stays in [0,1] even when the predicted list holds items missing from the reference list.
/// An all-zero ideal DCG yields 1.
template <typename Item, typename Relevance>
double ndcg_at_k(std::span<const Item> pred_rank, std::span<const Item> true_rank, Relevance&& relevance,
                 std::size_t k)
{
    if (k == 0)
        throw InputError("ndcg_at_k: k must be positive");
    auto dcg = [k](const std::vector<double>& rels) {
        double s = 0.0;
        for (std::size_t i = 0; i < std::min(k, rels.size()); ++i)
            s += (std::exp2(rels[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
        return s;
    };
    std::vector<double> pred_rels;
    for (const auto& item : pred_rank) {
        const double r = relevance(item);
        if (!(r >= 0.0))
            throw InputError("ndcg_at_k: relevance must be non-negative");
        pred_rels.push_back(r);
    }
    std::vector<Item> pool(true_rank.begin(), true_rank.end());
    for (const auto& item : pred_rank)
        if (std::find(pool.begin(), pool.end(), item) == pool.end())
            pool.push_back(item);
    std::vector<double> ideal;
    for (const auto& item : pool) {
        const double r = relevance(item);
        if (!(r >= 0.0))
            throw InputError("ndcg_at_k: relevance must be non-negative");
        ideal.push_back(r);
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    const double ideal_dcg = dcg(ideal);
    if (ideal_dcg <= 0.0)
        return 1.0;
    return dcg(pred_rels) / ideal_dcg;
}

// ---------------------------------------------------------------------------------------------
// Front matching
// ---------------------------------------------------------------------------------------------

enum class MatchRegime { exact_epoch, relaxed_epoch, ignored_epoch };

std::string_view to_string(MatchRegime r); // "EE", "RE", "IE"

struct MatchMode {
    MatchRegime regime = MatchRegime::exact_epoch;
    int epoch_tol = 5; // RE only
};

struct MatchScores {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    std::size_t matched_true = 0; // true points with a match
    std::size_t matched_pred = 0; // predicted points with a match
};

/// EE: (config_id, epoch) equality. RE: greedy one-to-one nearest-epoch pairing per config_id within
/// epoch_tol (ties: lower true epoch first). IE: a point matches when its config_id occurs on the other side.
/// Recall is over true points, precision over predicted points, F1 = 0 when both are 0.
MatchScores pareto_match(const ParetoFront& true_front, const ParetoFront& pred_front, MatchMode mode);

struct PredictionMae {
    double acc = 0.0;
    double energy = 0.0;
    std::size_t aligned = 0;
};

/// Mean absolute error over (config_id, epoch) pairs present in both lists.
PredictionMae prediction_mae(std::span<const CandidatePoint> pred, std::span<const CandidatePoint> truth);

// ---------------------------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------------------------

struct MetricReport {
    std::string status = "ok"; // "ok" or "empty_front"
    double lambda = 1.0;
    Eigen::Vector2d ref_point{1.0, 1.0};
    double omega_a = 0.5;
    double gamma = 0.0;
    int epoch_tol = 5;
    std::size_t ndcg_k = 10;
    std::size_t true_front_size = 0;
    std::size_t pred_front_size = 0;

    std::map<int, double> sova;                       // requested k -> SOVA at omega_a
    std::map<int, int> sova_effective_k;              // requested k -> k actually compared
    std::map<std::string, std::map<int, double>> sova_by_omega;
    std::map<std::string, double> ndcg_by_omega;
    double ndcg = 0.0;                                // mean over the omega sweep
    double hausdorff = 0.0;
    double hv_true = 0.0;
    double hv_pred = 0.0;
    double delta_hv = 0.0;
    std::map<MatchRegime, MatchScores> match;
    PredictionMae mae;
};

/// Flat JSON object with keys such as "sova@k", "hausdorff", "delta_hv", "recall_EE", "lambda", "ref_point".
std::string to_json(const MetricReport& report);

} // namespace green
