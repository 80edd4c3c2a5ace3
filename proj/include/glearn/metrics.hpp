// Edge-recovery and reconstruction metrics. All edge counting is over the
// strict upper triangle (undirected, hollow) so each pair enters once.
#pragma once

#include <algorithm>
#include <vector>

#include "core.hpp"

namespace glearn {

struct EdgeMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auprc = 0.0;
    double relative_frobenius_error = 0.0;
    double mse = 0.0;
    double threshold = 0.0;
    int sample_count = 0;
};

/// Target binarized by > 0, estimate by > tau.
inline EdgeMetrics edge_metrics(const AdjacencyMatrix& estimate,
                                const AdjacencyMatrix& target, double tau) {
    if (estimate.n != target.n)
        throw dimension_error("edge_metrics: dimension mismatch");
    long tp = 0, fp = 0, fn = 0, pos = 0;
    for (int i = 0; i < target.n; ++i)
        for (int j = i + 1; j < target.n; ++j) {
            const bool truth = target.w(i, j) > 0.0;
            const bool pred = estimate.w(i, j) > tau;
            pos += truth;
            tp += truth && pred;
            fp += !truth && pred;
            fn += truth && !pred;
        }
    EdgeMetrics m;
    if (tp + fp > 0)
        m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    else
        m.precision = pos == 0 ? 1.0 : 0.0;
    m.recall = pos == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(pos);
    m.f1 = (m.precision + m.recall > 0.0)
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

/// Area under the precision-recall curve over all score thresholds, step
/// interpolation. A target with zero edges scores 1 when the estimate is all
/// zero, otherwise 0.
inline double auprc(const AdjacencyMatrix& estimate, const AdjacencyMatrix& target) {
    if (estimate.n != target.n) throw dimension_error("auprc: dimension mismatch");
    std::vector<std::pair<double, bool>> scored;
    long pos = 0;
    for (int i = 0; i < target.n; ++i)
        for (int j = i + 1; j < target.n; ++j) {
            scored.emplace_back(estimate.w(i, j), target.w(i, j) > 0.0);
            pos += target.w(i, j) > 0.0;
        }
    if (pos == 0) {
        for (auto& [s, t] : scored)
            if (s != 0.0) return 0.0;
        return 1.0;
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    double area = 0.0;
    long tp = 0, seen = 0, prev_tp = 0;
    std::size_t k = 0;
    while (k < scored.size()) {
        // process one distinct-score group at a time
        const double score = scored[k].first;
        while (k < scored.size() && scored[k].first == score) {
            ++seen;
            tp += scored[k].second;
            ++k;
        }
        const double prec = static_cast<double>(tp) / static_cast<double>(seen);
        const double recall_step = static_cast<double>(tp - prev_tp) / static_cast<double>(pos);
        area += prec * recall_step;
        prev_tp = tp;
    }
    return area;
}

inline double relative_error(const AdjacencyMatrix& estimate, const AdjacencyMatrix& target) {
    if (estimate.n != target.n)
        throw dimension_error("relative_error: dimension mismatch");
    return (estimate.w - target.w).norm() / std::max(target.w.norm(), 1e-12);
}

/// Normalized squared error, matching the training mse loss.
inline double normalized_mse(const AdjacencyMatrix& estimate, const AdjacencyMatrix& target) {
    if (estimate.n != target.n) throw dimension_error("normalized_mse: dimension mismatch");
    return (estimate.w - target.w).squaredNorm() / std::max(target.w.squaredNorm(), 1.0);
}

inline EvalReport single_eval(const AdjacencyMatrix& estimate, const AdjacencyMatrix& target,
                              double tau) {
    EvalReport r;
    EdgeMetrics em = edge_metrics(estimate, target, tau);
    r.precision = em.precision;
    r.recall = em.recall;
    r.f1 = em.f1;
    r.auprc = auprc(estimate, target);
    r.relative_frobenius_error = relative_error(estimate, target);
    r.mse = normalized_mse(estimate, target);
    r.threshold = tau;
    r.sample_count = 1;
    return r;
}

}  // namespace glearn
