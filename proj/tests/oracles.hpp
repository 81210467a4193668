#pragma once

// Reference implementations used only by tests. Each one is written directly from the definition,
// without calling into the library routine it checks.

#include "green/core.hpp"
#include "green/predictor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using green::CandidatePoint;

// Indices of points that no other point beats in one objective without losing in the other.
inline std::vector<std::size_t> nondominated(const std::vector<CandidatePoint>& pts)
{
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool beaten = false;
        for (std::size_t j = 0; j < pts.size() && !beaten; ++j) {
            if (i == j)
                continue;
            const bool no_worse = !(pts[j].acc < pts[i].acc) && !(pts[j].energy > pts[i].energy);
            const bool better = pts[j].acc != pts[i].acc || pts[j].energy != pts[i].energy;
            beaten = no_worse && better;
        }
        if (!beaten)
            keep.push_back(i);
    }
    return keep;
}

// Fraction of uniform samples of [0,1]^2 dominated (in minimization space) by some point.
inline double monte_carlo_hv(const std::vector<std::pair<double, double>>& min_points, int samples,
                             std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    long hits = 0;
    for (int s = 0; s < samples; ++s) {
        const double x = u(rng), y = u(rng);
        for (const auto& [px, py] : min_points)
            if (px <= x && py <= y) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / samples;
}

inline double hausdorff(const std::vector<std::pair<double, double>>& a,
                        const std::vector<std::pair<double, double>>& b)
{
    auto directed = [](const auto& from, const auto& to) {
        double worst = 0.0;
        for (const auto& p : from) {
            double best = 1e300;
            for (const auto& q : to)
                best = std::min(best, std::hypot(p.first - q.first, p.second - q.second));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

// SOVA straight from the weighted double sum, rank index starting at 1.
inline double sova(const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y,
                   double lambda, const std::vector<double>& tau)
{
    const std::size_t k = x.size();
    double wsum = 0.0;
    for (std::size_t l = 1; l <= k; ++l)
        wsum += std::exp(-lambda * static_cast<double>(l));
    double tsum = 0.0;
    for (double t : tau)
        tsum += t;
    double total = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
        const double w = std::exp(-lambda * static_cast<double>(i)) / wsum;
        for (std::size_t j = 0; j < tau.size(); ++j)
            total += w * (tau[j] / tsum) * std::fabs(x[i - 1][j] - y[i - 1][j]);
    }
    return total;
}

inline double dcg(const std::vector<double>& rels, std::size_t k)
{
    double s = 0.0;
    for (std::size_t i = 1; i <= std::min(k, rels.size()); ++i)
        s += (std::pow(2.0, rels[i - 1]) - 1.0) / std::log2(static_cast<double>(i) + 1.0);
    return s;
}

// Central differences of f at theta.
template <typename F>
Eigen::VectorXd finite_difference(F&& f, const Eigen::VectorXd& theta, double h)
{
    Eigen::VectorXd g(theta.size());
    Eigen::VectorXd t = theta;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        t[i] = theta[i] + h;
        const double up = f(t);
        t[i] = theta[i] - h;
        const double down = f(t);
        t[i] = theta[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

// Small MLP evaluated without the library: standardize, tanh hidden layers, linear output.
inline std::pair<double, double> mlp(const green::PredictorParams& p, const Eigen::VectorXd& raw,
                                     const Eigen::VectorXd& theta)
{
    std::vector<double> a(static_cast<std::size_t>(raw.size()));
    for (Eigen::Index i = 0; i < raw.size(); ++i)
        a[static_cast<std::size_t>(i)] = (raw[i] - p.input_shift[i]) / p.input_scale[i];
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < p.layer_spec.size(); ++l) {
        const auto in = static_cast<std::size_t>(p.layer_spec[l]);
        const auto out = static_cast<std::size_t>(p.layer_spec[l + 1]);
        std::vector<double> z(out, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            for (std::size_t i = 0; i < in; ++i)
                z[o] += theta[static_cast<Eigen::Index>(off + i * out + o)] * a[i];
            z[o] += theta[static_cast<Eigen::Index>(off + in * out + o)];
        }
        off += in * out + out;
        if (l + 2 < p.layer_spec.size())
            for (auto& v : z)
                v = std::tanh(v);
        a = std::move(z);
    }
    return {a[0], a[1]};
}

// Composite loss recomputed from scratch: per-epoch MAE, alpha mixing, mean over the epochs present.
inline double composite_loss(const green::PredictorParams& p, const std::vector<green::Sample>& batch,
                             const std::vector<double>& alphas, const Eigen::VectorXd& theta)
{
    std::map<int, std::vector<double>> acc_err, en_err;
    for (const auto& s : batch) {
        const auto [a, e] = mlp(p, s.input, theta);
        acc_err[s.epoch].push_back(std::fabs(a - s.acc));
        en_err[s.epoch].push_back(std::fabs(e - s.energy));
    }
    double total = 0.0;
    for (const auto& [epoch, errs] : acc_err) {
        double la = 0.0, le = 0.0;
        for (double v : errs)
            la += v;
        for (double v : en_err[epoch])
            le += v;
        la /= static_cast<double>(errs.size());
        le /= static_cast<double>(errs.size());
        const double alpha = alphas[static_cast<std::size_t>(epoch - 1)];
        total += alpha * la + (1.0 - alpha) * le;
    }
    return total / static_cast<double>(acc_err.size());
}

} // namespace oracle
