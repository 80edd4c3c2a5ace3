// Random graph ensembles, generative signal models, similarity transforms,
// and dataset assembly.
//
// Ensemble parameterizations:
//   er   — each node pair independently an edge with probability p
//   ba   — preferential attachment; starts from m isolated seed nodes, each
//          new node attaches m edges via the repeated-endpoints scheme
//   ws   — ring lattice with k neighbors (k even), each edge rewired with
//          probability p
//   sbm  — block memberships from the size list, pair probability from the
//          block matrix
//   grid — rows x cols 4-neighbor lattice
//
// Signal models (all zero-mean, sampled as x = U diag(lambda)^{-1/2} z with a
// standard normal z where a covariance factor is needed):
//   smooth   — x ~ N(0, (L + eps I)^{-1})
//   diffuse  — x = poly(A, alpha) w + noise_sigma * eta, w and eta white
//   gaussian — x ~ N(0, Theta^{-1}), Theta = A + (|lambda_min(A)| + eps_pd) I
#pragma once

#include <cstdint>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace glearn {

enum class GraphEnsemble { er, ba, ws, sbm, grid };

inline const char* to_string(GraphEnsemble e) {
    switch (e) {
        case GraphEnsemble::er: return "er";
        case GraphEnsemble::ba: return "ba";
        case GraphEnsemble::ws: return "ws";
        case GraphEnsemble::sbm: return "sbm";
        case GraphEnsemble::grid: return "grid";
    }
    return "?";
}

inline GraphEnsemble graph_ensemble_from_string(const std::string& s) {
    if (s == "er") return GraphEnsemble::er;
    if (s == "ba") return GraphEnsemble::ba;
    if (s == "ws") return GraphEnsemble::ws;
    if (s == "sbm") return GraphEnsemble::sbm;
    if (s == "grid") return GraphEnsemble::grid;
    throw parameter_error("unknown graph ensemble: " + s);
}

struct GraphEnsembleSpec {
    GraphEnsemble ensemble = GraphEnsemble::er;
    int n = 0;
    double er_p = 0.5;
    int ba_m = 2;
    int ws_k = 4;
    double ws_p = 0.1;
    std::vector<int> sbm_sizes;
    Matrix sbm_probs;
    int grid_rows = 0, grid_cols = 0;
    std::uint64_t seed = 0;
};

enum class SignalModel { smooth, diffuse, gaussian };

inline const char* to_string(SignalModel m) {
    switch (m) {
        case SignalModel::smooth: return "smooth";
        case SignalModel::diffuse: return "diffuse";
        case SignalModel::gaussian: return "gaussian";
    }
    return "?";
}

inline SignalModel signal_model_from_string(const std::string& s) {
    if (s == "smooth") return SignalModel::smooth;
    if (s == "diffuse") return SignalModel::diffuse;
    if (s == "gaussian") return SignalModel::gaussian;
    throw parameter_error("unknown signal model: " + s);
}

struct SignalModelSpec {
    SignalModel model = SignalModel::smooth;
    int p_signals = 100;
    double eps = 0.01;  // smooth covariance regularizer
    Vector diffuse_alpha = (Vector(2) << 1.0, 0.5).finished();
    double noise_sigma = 0.0;
    double eps_pd = 0.05;  // gaussian diagonal loading
    std::uint64_t seed = 0;
};

struct Sample {
    AdjacencyMatrix a;
    SignalMatrix x;
    SimilarityMatrix s;
};

struct Dataset {
    std::vector<Sample> samples;
    int n_train = 0, n_val = 0, n_test = 0;
    GraphEnsembleSpec gspec;
    SignalModelSpec sspec;
    SimilarityKind simkind = SimilarityKind::covariance;
    std::uint64_t master_seed = 0;

    int train_begin() const { return 0; }
    int val_begin() const { return n_train; }
    int test_begin() const { return n_train + n_val; }
    int size() const { return static_cast<int>(samples.size()); }
};

namespace detail {

inline AdjacencyMatrix finalize_binary(int n, const std::vector<std::pair<int, int>>& edges) {
    Matrix w = Matrix::Zero(n, n);
    for (auto [i, j] : edges) {
        w(i, j) = 1.0;
        w(j, i) = 1.0;
    }
    return AdjacencyMatrix{n, w};
}

inline AdjacencyMatrix sample_er(int n, double p, Rng& rng) {
    Matrix w = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < p) w(i, j) = w(j, i) = 1.0;
    return AdjacencyMatrix{n, w};
}

inline AdjacencyMatrix sample_ba(int n, int m, Rng& rng) {
    // repeated-endpoints preferential attachment
    Matrix w = Matrix::Zero(n, n);
    std::vector<int> repeated;
    std::vector<int> targets(m);
    for (int i = 0; i < m; ++i) targets[i] = i;
    for (int v = m; v < n; ++v) {
        for (int t : targets) {
            w(v, t) = w(t, v) = 1.0;
            repeated.push_back(v);
            repeated.push_back(t);
        }
        // m distinct targets for the next node, degree-proportional
        targets.clear();
        while (static_cast<int>(targets.size()) < m && v + 1 < n) {
            int cand = repeated[rng.below(repeated.size())];
            bool dup = false;
            for (int t : targets) dup = dup || (t == cand);
            if (!dup) targets.push_back(cand);
        }
    }
    return AdjacencyMatrix{n, w};
}

inline AdjacencyMatrix sample_ws(int n, int k, double p, Rng& rng) {
    Matrix w = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int d = 1; d <= k / 2; ++d) {
            int j = (i + d) % n;
            w(i, j) = w(j, i) = 1.0;
        }
    // rewire each original lattice edge with probability p
    for (int i = 0; i < n; ++i)
        for (int d = 1; d <= k / 2; ++d) {
            int j = (i + d) % n;
            if (rng.uniform() >= p) continue;
            int t = static_cast<int>(rng.below(n));
            int attempts = 0;
            while ((t == i || w(i, t) > 0.0) && attempts++ < 16)
                t = static_cast<int>(rng.below(n));
            if (t == i || w(i, t) > 0.0) continue;  // saturated neighborhood
            w(i, j) = w(j, i) = 0.0;
            w(i, t) = w(t, i) = 1.0;
        }
    return AdjacencyMatrix{n, w};
}

inline AdjacencyMatrix sample_sbm(const std::vector<int>& sizes, const Matrix& probs, Rng& rng) {
    int n = 0;
    for (int s : sizes) n += s;
    std::vector<int> block(n);
    int idx = 0;
    for (int b = 0; b < static_cast<int>(sizes.size()); ++b)
        for (int s = 0; s < sizes[b]; ++s) block[idx++] = b;
    Matrix w = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < probs(block[i], block[j])) w(i, j) = w(j, i) = 1.0;
    return AdjacencyMatrix{n, w};
}

inline AdjacencyMatrix sample_grid(int rows, int cols) {
    const int n = rows * cols;
    Matrix w = Matrix::Zero(n, n);
    auto id = [cols](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) w(id(r, c), id(r, c + 1)) = w(id(r, c + 1), id(r, c)) = 1.0;
            if (r + 1 < rows) w(id(r, c), id(r + 1, c)) = w(id(r + 1, c), id(r, c)) = 1.0;
        }
    return AdjacencyMatrix{n, w};
}

/// Draw an N x P matrix of standard normals column by column.
inline Matrix white_matrix(int n, int p, Rng& rng) {
    Matrix m(n, p);
    for (int c = 0; c < p; ++c)
        for (int r = 0; r < n; ++r) m(r, c) = rng.normal();
    return m;
}

/// x = U Lambda^{-1/2} z for covariance Theta^{-1}, Theta = U Lambda U^T.
inline Matrix sample_from_precision(const Matrix& theta, int p, Rng& rng) {
    EigenDecomposition d = sym_eig(theta);
    if (d.lambda.minCoeff() <= 0.0)
        throw contract_error("signal precision matrix is not positive definite");
    Matrix z = white_matrix(static_cast<int>(theta.rows()), p, rng);
    return d.u * d.lambda.cwiseSqrt().cwiseInverse().asDiagonal() * z;
}

}  // namespace detail

inline void validate(const GraphEnsembleSpec& spec) {
    if (spec.ensemble == GraphEnsemble::grid) {
        if (spec.grid_rows < 1 || spec.grid_cols < 1)
            throw parameter_error("grid ensemble needs rows, cols >= 1");
        return;
    }
    if (spec.n < 1) throw parameter_error("graph ensemble needs n >= 1");
    switch (spec.ensemble) {
        case GraphEnsemble::er:
            if (spec.er_p < 0.0 || spec.er_p > 1.0)
                throw parameter_error("er: p must be in [0, 1]");
            break;
        case GraphEnsemble::ba:
            if (spec.ba_m < 1 || spec.ba_m >= spec.n)
                throw parameter_error("ba: need 1 <= m < n");
            break;
        case GraphEnsemble::ws:
            if (spec.ws_k < 2 || spec.ws_k % 2 != 0 || spec.ws_k >= spec.n)
                throw parameter_error("ws: k must be even, 2 <= k < n");
            if (spec.ws_p < 0.0 || spec.ws_p > 1.0)
                throw parameter_error("ws: rewire probability must be in [0, 1]");
            break;
        case GraphEnsemble::sbm: {
            if (spec.sbm_sizes.empty())
                throw parameter_error("sbm: need at least one block");
            const int b = static_cast<int>(spec.sbm_sizes.size());
            if (spec.sbm_probs.rows() != b || spec.sbm_probs.cols() != b)
                throw parameter_error("sbm: probability matrix must be blocks x blocks");
            for (int s : spec.sbm_sizes)
                if (s < 1) throw parameter_error("sbm: block sizes must be >= 1");
            if (spec.sbm_probs.minCoeff() < 0.0 || spec.sbm_probs.maxCoeff() > 1.0)
                throw parameter_error("sbm: probabilities must be in [0, 1]");
            break;
        }
        default: break;
    }
}

inline void validate(const SignalModelSpec& spec) {
    if (spec.p_signals < 1) throw parameter_error("signal model needs p_signals >= 1");
    switch (spec.model) {
        case SignalModel::smooth:
            if (spec.eps <= 0.0) throw parameter_error("smooth: eps must be > 0");
            break;
        case SignalModel::diffuse:
            if (spec.diffuse_alpha.size() == 0)
                throw parameter_error("diffuse: alpha must be nonempty");
            if (spec.noise_sigma < 0.0)
                throw parameter_error("diffuse: noise_sigma must be >= 0");
            break;
        case SignalModel::gaussian:
            if (spec.eps_pd <= 0.0) throw parameter_error("gaussian: eps_pd must be > 0");
            break;
    }
}

inline AdjacencyMatrix sample_graph(const GraphEnsembleSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);
    switch (spec.ensemble) {
        case GraphEnsemble::er: return detail::sample_er(spec.n, spec.er_p, rng);
        case GraphEnsemble::ba: return detail::sample_ba(spec.n, spec.ba_m, rng);
        case GraphEnsemble::ws: return detail::sample_ws(spec.n, spec.ws_k, spec.ws_p, rng);
        case GraphEnsemble::sbm: return detail::sample_sbm(spec.sbm_sizes, spec.sbm_probs, rng);
        case GraphEnsemble::grid: return detail::sample_grid(spec.grid_rows, spec.grid_cols);
    }
    throw parameter_error("sample_graph: unknown ensemble");
}

inline SignalMatrix generate_signals(const AdjacencyMatrix& a, const SignalModelSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);
    const int n = a.n;
    const int p = spec.p_signals;
    Matrix x;
    switch (spec.model) {
        case SignalModel::smooth: {
            Matrix theta = laplacian(a) + spec.eps * Matrix::Identity(n, n);
            x = detail::sample_from_precision(theta, p, rng);
            break;
        }
        case SignalModel::diffuse: {
            Matrix h = matrix_polynomial(a, spec.diffuse_alpha);
            Matrix w = detail::white_matrix(n, p, rng);
            x = h * w;
            if (spec.noise_sigma > 0.0)
                x += spec.noise_sigma * detail::white_matrix(n, p, rng);
            break;
        }
        case SignalModel::gaussian: {
            const double lmin = sym_eig(a.w).lambda.minCoeff();
            Matrix theta = a.w + (std::abs(lmin) + spec.eps_pd) * Matrix::Identity(n, n);
            x = detail::sample_from_precision(theta, p, rng);
            break;
        }
    }
    return SignalMatrix{n, p, x};
}

inline SimilarityMatrix similarity(const SignalMatrix& x, SimilarityKind kind,
                                   bool center = false) {
    const int n = x.n;
    Matrix data = x.x;
    if (center) data.colwise() -= data.rowwise().mean();
    switch (kind) {
        case SimilarityKind::covariance: {
            Matrix c = (data * data.transpose()) / static_cast<double>(x.p);
            return SimilarityMatrix{n, 0.5 * (c + c.transpose()), kind};
        }
        case SimilarityKind::correlation: {
            if (x.p < 2) throw parameter_error("correlation needs p >= 2");
            Matrix c = (data * data.transpose()) / static_cast<double>(x.p);
            Vector d = c.diagonal();
            for (int i = 0; i < n; ++i)
                if (d[i] <= 0.0)
                    throw numeric_error("correlation: zero-variance row " + std::to_string(i));
            Vector inv_sd = d.cwiseSqrt().cwiseInverse();
            Matrix r = inv_sd.asDiagonal() * c * inv_sd.asDiagonal();
            r = 0.5 * (r + r.transpose()).eval();
            r.diagonal().setOnes();
            return SimilarityMatrix{n, r, kind};
        }
        case SimilarityKind::distance: {
            Matrix z = Matrix::Zero(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    const double d2 = (data.row(i) - data.row(j)).squaredNorm();
                    z(i, j) = z(j, i) = d2;
                }
            return SimilarityMatrix{n, z, kind};
        }
    }
    throw parameter_error("similarity: unknown kind");
}

inline Dataset build_dataset(const GraphEnsembleSpec& gspec, const SignalModelSpec& sspec,
                             SimilarityKind simkind, int n_train, int n_val, int n_test) {
    if (n_train < 0 || n_val < 0 || n_test < 0)
        throw parameter_error("build_dataset: split sizes must be >= 0");
    const int total = n_train + n_val + n_test;
    if (total == 0) throw parameter_error("build_dataset: at least one split must be nonzero");
    validate(gspec);
    validate(sspec);

    Dataset ds;
    ds.n_train = n_train;
    ds.n_val = n_val;
    ds.n_test = n_test;
    ds.gspec = gspec;
    ds.sspec = sspec;
    ds.simkind = simkind;
    ds.master_seed = gspec.seed;
    ds.samples.reserve(total);
    for (int i = 0; i < total; ++i) {
        GraphEnsembleSpec g = gspec;
        g.seed = child_seed(ds.master_seed, 2 * static_cast<std::uint64_t>(i));
        SignalModelSpec s = sspec;
        s.seed = child_seed(ds.master_seed, 2 * static_cast<std::uint64_t>(i) + 1);
        AdjacencyMatrix a = sample_graph(g);
        SignalMatrix x = generate_signals(a, s);
        SimilarityMatrix sim = similarity(x, simkind);
        ds.samples.push_back(Sample{std::move(a), std::move(x), std::move(sim)});
    }
    return ds;
}

}  // namespace glearn
