// Unrolled trainable counterparts of the model-based solvers: one layer per
// iteration with learnable per-layer parameters, a shared forward engine,
// hand-derived layer-wise vector-Jacobian products, and an Adam trainer.
//
// Layer math is identical to the corresponding model-based step with one
// deviation: gdn layers use a fixed learnable step t_i instead of the line
// search (backtracking is not differentiable).
//
// Positivity-constrained parameters are stored as unconstrained reals mapped
// through softplus; gdn polynomial coefficients stay unconstrained.
//
// Effective parameter layout per layer:
//   glad (gaussian): [lambda, rho]
//   l2g  (smooth):   [alpha, beta, gamma]
//   gdn  (diffusion): [alpha_0 .. alpha_K, beta, t]
//
// Gradient conventions: all state and similarity gradients are full-matrix
// cotangents such that the directional derivative along a symmetric
// perturbation D equals <grad, D>_F.
//
// The glad layer's spectral matrix function is differentiated with the
// divided-difference rule in the eigenbasis: the sensitivity of U f(G) U^T is
// U (U^T Gbar U .* f[g_i, g_j]) U^T with f[g, g] = f'(g); eigenvalue pairs
// closer than 1e-12 fall back to f' at the midpoint.
#pragma once

#include <chrono>
#include <numeric>
#include <variant>
#include <vector>

#include "metrics.hpp"
#include "rng.hpp"
#include "solvers.hpp"
#include "synth.hpp"

namespace glearn {

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double softplus_inv(double y) {
    if (y <= 0.0) throw parameter_error("softplus_inv: needs y > 0");
    return y > 30.0 ? y : std::log(std::expm1(y));
}
inline double softplus_grad(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// model

enum class LossKind { mse, nll_logistic };

inline const char* to_string(LossKind k) {
    return k == LossKind::mse ? "mse" : "nll_logistic";
}

inline LossKind loss_kind_from_string(const std::string& s) {
    if (s == "mse") return LossKind::mse;
    if (s == "nll_logistic") return LossKind::nll_logistic;
    throw parameter_error("unknown loss kind: " + s);
}

struct UnrollingModel {
    Method method = Method::diffusion;
    int depth = 1;
    int poly_order = 1;  // gdn only: K
    bool tie_layers = false;
    std::vector<Vector> raw;  // depth rows (1 row when tied), pre-softplus

    int layer_arity() const {
        switch (method) {
            case Method::gaussian: return 2;
            case Method::smooth: return 3;
            case Method::diffusion: return poly_order + 3;
        }
        return 0;
    }

    int stored_layers() const { return tie_layers ? 1 : depth; }

    const Vector& raw_layer(int i) const { return raw[tie_layers ? 0 : i]; }
    Vector& raw_layer(int i) { return raw[tie_layers ? 0 : i]; }

    /// true for raw entries mapped through softplus
    bool is_positive_param(int k) const {
        if (method == Method::diffusion) return k > poly_order;
        return true;
    }

    Vector effective(int layer) const {
        const Vector& r = raw_layer(layer);
        Vector e(r.size());
        for (Eigen::Index k = 0; k < r.size(); ++k)
            e[k] = is_positive_param(static_cast<int>(k)) ? softplus(r[k]) : r[k];
        return e;
    }

    /// Chain rule through the softplus reparameterization.
    Vector raw_gradient(int layer, const Vector& grad_effective) const {
        const Vector& r = raw_layer(layer);
        Vector g(r.size());
        for (Eigen::Index k = 0; k < r.size(); ++k)
            g[k] = is_positive_param(static_cast<int>(k))
                       ? grad_effective[k] * softplus_grad(r[k])
                       : grad_effective[k];
        return g;
    }
};

/// Effective initial values: the model-based defaults perturbed by +-5%
/// uniform noise per layer.
inline UnrollingModel make_model(Method method, int depth, std::uint64_t seed,
                                 int poly_order = 1, bool tie_layers = false) {
    if (depth < 1) throw parameter_error("make_model: depth must be >= 1");
    if (method == Method::diffusion && poly_order < 0)
        throw parameter_error("make_model: poly_order must be >= 0");
    UnrollingModel m;
    m.method = method;
    m.depth = depth;
    m.poly_order = poly_order;
    m.tie_layers = tie_layers;
    Rng rng(seed);

    Vector base;
    switch (method) {
        case Method::gaussian: base = (Vector(2) << 1.0, 0.01).finished(); break;
        case Method::smooth: base = (Vector(3) << 1.0, 1.0, 0.05).finished(); break;
        case Method::diffusion: {
            base = Vector::Zero(poly_order + 3);
            base[0] = 1.0;
            for (int i = 1; i <= poly_order; ++i) base[i] = 0.5;
            base[poly_order + 1] = 0.1;  // beta
            base[poly_order + 2] = 0.5;  // step
            break;
        }
    }
    m.raw.resize(m.stored_layers());
    for (int l = 0; l < m.stored_layers(); ++l) {
        Vector r(base.size());
        for (Eigen::Index k = 0; k < base.size(); ++k) {
            const double eff = base[k] * (1.0 + 0.05 * (2.0 * rng.uniform() - 1.0));
            r[k] = m.is_positive_param(static_cast<int>(k)) ? softplus_inv(eff) : eff;
        }
        m.raw[l] = std::move(r);
    }
    return m;
}

// ---------------------------------------------------------------------------
// layer caches

struct GladCache {
    Matrix z_in;       // incoming sparse copy
    Matrix u;          // eigenvectors of M = S - Z/lambda
    Vector gamma;      // eigenvalues of M
    Vector mapped;     // f(gamma)
    Matrix theta;      // Theta' = U f U^T
    Matrix soft_mask;  // 1 where |Theta'| > rho*lambda
    Matrix soft_sign;  // sign(Theta')
    double lambda = 0.0, rho = 0.0;
};

struct L2gCache {
    int n = 0;
    Vector w, dbar, z;
    Vector y, ybar, p, pbar, root;  // root = sqrt(ybar^2 + 4 alpha gamma)
    Vector prox_mask;               // 1 where y - 2 gamma z > 0
    double alpha = 0.0, beta = 0.0, gamma = 0.0;
};

struct GdnCache {
    std::vector<Matrix> powers;  // A^0 .. A^K
    Matrix r;                    // -2 (S - H)
    Matrix grad;                 // gradient of the smooth term at A
    Matrix b;                    // A - t * grad
    Matrix mask;                 // 1 where the entry survives threshold+projection
    Vector alpha;
    double beta = 0.0, t = 0.0;
};

using LayerCache = std::variant<GladCache, L2gCache, GdnCache>;

struct ForwardTrace {
    Method method = Method::diffusion;
    std::vector<SolverState> states;  // depth + 1, includes initialization
    std::vector<LayerCache> caches;   // depth
};

// ---------------------------------------------------------------------------
// layer forward

inline std::pair<SolverState, LayerCache> layer_forward(Method method,
                                                        const SolverState& state,
                                                        const SimilarityMatrix& s,
                                                        const Vector& theta) {
    switch (method) {
        case Method::gaussian: {
            const auto& st = std::get<GaussianState>(state);
            GladCache c;
            c.lambda = theta[0];
            c.rho = theta[1];
            c.z_in = st.z;
            Matrix m = s.s - st.z / c.lambda;
            EigenDecomposition d = sym_eig(m);
            c.u = d.u;
            c.gamma = d.lambda;
            c.mapped = d.lambda.unaryExpr(
                [&](double g) { return glasso_eigen_map(g, c.lambda, 1.0); });
            c.theta = c.u * c.mapped.asDiagonal() * c.u.transpose();
            c.theta = 0.5 * (c.theta + c.theta.transpose()).eval();
            const double tau = c.rho * c.lambda;
            c.soft_mask = c.theta.unaryExpr(
                [tau](double x) { return std::abs(x) > tau ? 1.0 : 0.0; });
            c.soft_sign = c.theta.unaryExpr(
                [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
            Matrix z = soft_threshold(c.theta, tau);
            return {GaussianState{c.theta, std::move(z)}, std::move(c)};
        }
        case Method::smooth: {
            if (s.kind != SimilarityKind::distance)
                throw parameter_error("l2g layer requires a distance similarity");
            const auto& st = std::get<SmoothState>(state);
            L2gCache c;
            c.n = st.w.n;
            c.alpha = theta[0];
            c.beta = theta[1];
            c.gamma = theta[2];
            if (c.gamma <= 0.0 || c.gamma >= 1.0)
                throw parameter_error("l2g layer: gamma must be in (0, 1)");
            c.w = st.w.w;
            c.dbar = st.dbar;
            c.z = vec_upper(s.s);
            c.y = c.w - c.gamma * (2.0 * c.beta * c.w + degree_adjoint(c.n, c.dbar));
            c.ybar = c.dbar + c.gamma * degree_forward(c.n, c.w);
            c.prox_mask = (c.y - 2.0 * c.gamma * c.z)
                              .unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; });
            c.p = (c.y - 2.0 * c.gamma * c.z).cwiseMax(0.0);
            c.root = (c.ybar.array().square() + 4.0 * c.alpha * c.gamma).sqrt().matrix();
            c.pbar = 0.5 * (c.ybar - c.root);
            Vector q = c.p - c.gamma * (2.0 * c.beta * c.p + degree_adjoint(c.n, c.pbar));
            Vector qbar = c.pbar + c.gamma * degree_forward(c.n, c.p);
            SmoothState next;
            next.w = EdgeVector{c.n, c.w - c.y + q};
            next.dbar = c.dbar - c.ybar + qbar;
            return {std::move(next), std::move(c)};
        }
        case Method::diffusion: {
            const auto& st = std::get<DiffusionState>(state);
            GdnCache c;
            const int k = static_cast<int>(theta.size()) - 3;
            c.alpha = theta.head(k + 1);
            c.beta = theta[k + 1];
            c.t = theta[k + 2];
            const int n = st.a.n;
            c.powers.resize(k + 1);
            c.powers[0] = Matrix::Identity(n, n);
            for (int i = 1; i <= k; ++i) c.powers[i] = c.powers[i - 1] * st.a.w;
            Matrix h = Matrix::Zero(n, n);
            for (int i = 0; i <= k; ++i) h += c.alpha[i] * c.powers[i];
            c.r = -2.0 * (s.s - h);
            c.grad = Matrix::Zero(n, n);
            for (int i = 1; i <= k; ++i)
                for (int j = 0; j <= i - 1; ++j)
                    c.grad += c.alpha[i] * c.powers[j] * c.r * c.powers[i - 1 - j];
            c.grad = 0.5 * (c.grad + c.grad.transpose()).eval();
            c.b = st.a.w - c.t * c.grad;
            const double tau = c.t * c.beta;
            c.mask = c.b.unaryExpr([tau](double x) { return x > tau ? 1.0 : 0.0; });
            c.mask.diagonal().setZero();
            Matrix next = (c.b.array() - tau).matrix().cwiseProduct(c.mask);
            return {DiffusionState{AdjacencyMatrix{n, std::move(next)}, c.t},
                    std::move(c)};
        }
    }
    throw parameter_error("layer_forward: unknown method");
}

// ---------------------------------------------------------------------------
// layer backward

struct LayerGrads {
    SolverState state;  // cotangent for the incoming state
    Vector theta;       // cotangent for the effective layer parameters
    Matrix s;           // cotangent for the similarity matrix
};

/// Divided difference of the glad eigenvalue map (equal arguments use f').
inline double glasso_divided_difference(double g1, double g2, double lambda) {
    auto fprime = [lambda](double g) {
        const double r = std::sqrt(g * g + 4.0 / lambda);
        return 0.5 * lambda * (g / r - 1.0);
    };
    if (std::abs(g1 - g2) < 1e-12) return fprime(0.5 * (g1 + g2));
    return (glasso_eigen_map(g1, lambda, 1.0) - glasso_eigen_map(g2, lambda, 1.0)) /
           (g1 - g2);
}

namespace detail {

inline Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Cotangent of A -> A^i at symmetric A: sum_l A^l V A^{i-1-l}.
inline Matrix power_chain_vjp(const std::vector<Matrix>& powers, int i, const Matrix& v) {
    Matrix acc = Matrix::Zero(v.rows(), v.cols());
    for (int l = 0; l <= i - 1; ++l) acc += powers[l] * v * powers[i - 1 - l];
    return acc;
}

}  // namespace detail

inline LayerGrads layer_vjp(Method method, const LayerCache& cache,
                            const SolverState& upstream) {
    switch (method) {
        case Method::gaussian: {
            const auto& c = std::get<GladCache>(cache);
            const auto& up = std::get<GaussianState>(upstream);
            Matrix g_theta_out = detail::sym(up.theta);
            Matrix g_z_out = detail::sym(up.z);

            double g_lambda = 0.0, g_rho = 0.0;
            // Z' = soft_threshold(Theta', rho*lambda)
            Matrix g_theta_total = g_theta_out + g_z_out.cwiseProduct(c.soft_mask);
            const double g_tau =
                -(g_z_out.cwiseProduct(c.soft_sign).cwiseProduct(c.soft_mask)).sum();
            g_rho += c.lambda * g_tau;
            g_lambda += c.rho * g_tau;

            // Theta' = U f(Gamma; lambda) U^T via divided differences
            Matrix ghat = c.u.transpose() * detail::sym(g_theta_total) * c.u;
            const Eigen::Index n = c.gamma.size();
            Matrix scaled(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    scaled(i, j) = ghat(i, j) *
                                   glasso_divided_difference(c.gamma[i], c.gamma[j], c.lambda);
            Matrix g_m = c.u * scaled * c.u.transpose();
            g_m = detail::sym(g_m);
            // direct lambda dependence of the eigenvalue map
            for (Eigen::Index i = 0; i < n; ++i) {
                const double g = c.gamma[i];
                const double r = std::sqrt(g * g + 4.0 / c.lambda);
                g_lambda += ghat(i, i) * (0.5 * (r - g) - 1.0 / (c.lambda * r));
            }

            // M = S - Z/lambda
            Matrix g_s = g_m;
            Matrix g_z_in = -g_m / c.lambda;
            g_lambda += (g_m.cwiseProduct(c.z_in)).sum() / (c.lambda * c.lambda);

            LayerGrads out;
            out.state = GaussianState{Matrix::Zero(g_m.rows(), g_m.cols()),
                                      std::move(g_z_in)};
            out.theta = (Vector(2) << g_lambda, g_rho).finished();
            out.s = std::move(g_s);
            return out;
        }
        case Method::smooth: {
            const auto& c = std::get<L2gCache>(cache);
            const auto& up = std::get<SmoothState>(upstream);
            const Vector& gw_out = up.w.w;
            const Vector& gd_out = up.dbar;
            const int n = c.n;
            const double a = c.alpha, b = c.beta, g = c.gamma;

            double g_alpha = 0.0, g_beta = 0.0, g_gamma = 0.0;
            // w' = w - y + q ; dbar' = dbar - ybar + qbar
            Vector g_w = gw_out;
            Vector g_y = -gw_out;
            Vector g_q = gw_out;
            Vector g_d = gd_out;
            Vector g_ybar = -gd_out;
            Vector g_qbar = gd_out;

            // qbar = pbar + gamma K p
            Vector g_pbar = g_qbar;
            Vector g_p = g * degree_adjoint(n, g_qbar);
            g_gamma += g_qbar.dot(degree_forward(n, c.p));
            // q = (1 - 2 beta gamma) p - gamma K^T pbar
            g_p += (1.0 - 2.0 * b * g) * g_q;
            g_pbar += -g * degree_forward(n, g_q);
            g_gamma += g_q.dot(-(2.0 * b * c.p + degree_adjoint(n, c.pbar)));
            g_beta += g_q.dot(-2.0 * g * c.p);
            // pbar = (ybar - sqrt(ybar^2 + 4 alpha gamma)) / 2
            g_ybar += g_pbar.cwiseProduct(
                (0.5 * (1.0 - (c.ybar.array() / c.root.array()))).matrix());
            g_alpha += -g * g_pbar.cwiseQuotient(c.root).sum();
            g_gamma += -a * g_pbar.cwiseQuotient(c.root).sum();
            // p = max(0, y - 2 gamma z)
            Vector g_p_masked = g_p.cwiseProduct(c.prox_mask);
            g_y += g_p_masked;
            g_gamma += g_p_masked.dot(-2.0 * c.z);
            Vector g_z = -2.0 * g * g_p_masked;
            // ybar = dbar + gamma K w
            g_d += g_ybar;
            g_w += g * degree_adjoint(n, g_ybar);
            g_gamma += g_ybar.dot(degree_forward(n, c.w));
            // y = (1 - 2 beta gamma) w - gamma K^T dbar
            g_w += (1.0 - 2.0 * b * g) * g_y;
            g_d += -g * degree_forward(n, g_y);
            g_gamma += g_y.dot(-(2.0 * b * c.w + degree_adjoint(n, c.dbar)));
            g_beta += g_y.dot(-2.0 * g * c.w);

            // fold the edge-vector z cotangent back into a symmetric matrix
            Matrix g_s = Matrix::Zero(n, n);
            int e = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    g_s(i, j) = 0.5 * g_z[e];
                    g_s(j, i) = 0.5 * g_z[e];
                    ++e;
                }

            LayerGrads out;
            SmoothState gst;
            gst.w = EdgeVector{n, std::move(g_w)};
            gst.dbar = std::move(g_d);
            out.state = std::move(gst);
            out.theta = (Vector(3) << g_alpha, g_beta, g_gamma).finished();
            out.s = std::move(g_s);
            return out;
        }
        case Method::diffusion: {
            const auto& c = std::get<GdnCache>(cache);
            const auto& up = std::get<DiffusionState>(upstream);
            Matrix ga_out = detail::sym(up.a.w);
            const int k = static_cast<int>(c.alpha.size()) - 1;
            const int n = static_cast<int>(c.b.rows());

            Vector g_alpha = Vector::Zero(k + 1);
            double g_beta = 0.0, g_t = 0.0;
            // A' = mask .* (B - t*beta), mask from threshold + projection
            Matrix g_b = ga_out.cwiseProduct(c.mask);
            const double g_tau = -(ga_out.cwiseProduct(c.mask)).sum();
            g_t += c.beta * g_tau;
            g_beta += c.t * g_tau;
            // B = A - t * grad
            Matrix g_a = g_b;
            g_t += -(g_b.cwiseProduct(c.grad)).sum();
            Matrix g_grad = -c.t * g_b;

            // grad = sum_{i>=1} alpha_i sum_{j+m=i-1} A^j R A^m
            Matrix g_r = Matrix::Zero(n, n);
            for (int i = 1; i <= k; ++i) {
                Matrix ci = Matrix::Zero(n, n);
                for (int j = 0; j <= i - 1; ++j) {
                    const int m = i - 1 - j;
                    ci += c.powers[j] * c.r * c.powers[m];
                    g_r += c.alpha[i] * c.powers[j] * g_grad * c.powers[m];
                    g_a += c.alpha[i] *
                           detail::power_chain_vjp(c.powers, j, g_grad * c.powers[m] * c.r);
                    g_a += c.alpha[i] *
                           detail::power_chain_vjp(c.powers, m, c.r * c.powers[j] * g_grad);
                }
                g_alpha[i] += (g_grad.cwiseProduct(ci)).sum();
            }
            // R = 2H - 2S, H = sum_i alpha_i A^i
            Matrix g_h = 2.0 * g_r;
            Matrix g_s = -2.0 * g_r;
            for (int i = 0; i <= k; ++i) g_alpha[i] += (g_h.cwiseProduct(c.powers[i])).sum();
            for (int i = 1; i <= k; ++i)
                g_a += c.alpha[i] * detail::power_chain_vjp(c.powers, i, g_h);
            g_a = detail::sym(g_a);

            LayerGrads out;
            out.state = DiffusionState{AdjacencyMatrix{n, std::move(g_a)}, 0.0};
            out.theta = Vector(k + 3);
            out.theta.head(k + 1) = g_alpha;
            out.theta[k + 1] = g_beta;
            out.theta[k + 2] = g_t;
            out.s = std::move(g_s);
            return out;
        }
    }
    throw parameter_error("layer_vjp: unknown method");
}

// ---------------------------------------------------------------------------
// forward engine

inline std::pair<AdjacencyMatrix, ForwardTrace> unroll_forward(const UnrollingModel& model,
                                                               const SimilarityMatrix& s) {
    MBHyperparams hp = default_hyperparams(model.method);
    ForwardTrace trace;
    trace.method = model.method;
    trace.states.push_back(initial_state(model.method, s, hp));
    for (int l = 0; l < model.depth; ++l) {
        try {
            auto [next, cache] =
                layer_forward(model.method, trace.states.back(), s, model.effective(l));
            trace.states.push_back(std::move(next));
            trace.caches.push_back(std::move(cache));
        } catch (const error& e) {
            throw numeric_error("layer " + std::to_string(l) + ": " + e.what());
        }
    }
    return {state_estimate(trace.states.back()), std::move(trace)};
}

/// Cotangent of state_estimate: maps a gradient on the adjacency estimate to a
/// gradient on the final solver state.
inline SolverState estimate_vjp(Method method, const SolverState& final_state,
                                const Matrix& g_estimate) {
    Matrix ge = detail::sym(g_estimate);
    switch (method) {
        case Method::gaussian: {
            const auto& st = std::get<GaussianState>(final_state);
            Matrix g_theta = ge.cwiseProduct(st.theta.unaryExpr(
                [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }));
            g_theta.diagonal().setZero();
            return GaussianState{std::move(g_theta),
                                 Matrix::Zero(ge.rows(), ge.cols())};
        }
        case Method::smooth: {
            const auto& st = std::get<SmoothState>(final_state);
            const int n = st.w.n;
            Vector g_w(EdgeVector::edge_count(n));
            int e = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    // the estimate clamps negative weights, so they get no gradient
                    g_w[e] = st.w.w[e] > 0.0 ? ge(i, j) + ge(j, i) : 0.0;
                    ++e;
                }
            SmoothState g;
            g.w = EdgeVector{n, std::move(g_w)};
            g.dbar = Vector::Zero(n);
            return g;
        }
        case Method::diffusion: {
            const int n = static_cast<int>(ge.rows());
            Matrix g = ge;
            g.diagonal().setZero();
            return DiffusionState{AdjacencyMatrix{n, std::move(g)}, 0.0};
        }
    }
    throw parameter_error("estimate_vjp: unknown method");
}

// ---------------------------------------------------------------------------
// loss

struct LossValueGrad {
    double value = 0.0;
    Matrix grad;  // w.r.t. the estimate
};

inline LossValueGrad loss(const AdjacencyMatrix& estimate, const AdjacencyMatrix& target,
                          LossKind kind) {
    if (estimate.n != target.n) throw dimension_error("loss: dimension mismatch");
    LossValueGrad out;
    if (kind == LossKind::mse) {
        const double denom = std::max(target.w.squaredNorm(), 1.0);
        Matrix diff = estimate.w - target.w;
        out.value = diff.squaredNorm() / denom;
        out.grad = 2.0 * diff / denom;
        return out;
    }
    // logistic surrogate on binarized edges, fixed squash sigma(k (x - b))
    const double k = 10.0, b = 0.5;
    const int n = target.n;
    const double pairs = static_cast<double>(EdgeVector::edge_count(n));
    out.grad = Matrix::Zero(n, n);
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double t = target.w(i, j) > 0.0 ? 1.0 : 0.0;
            const double p = 1.0 / (1.0 + std::exp(-k * (estimate.w(i, j) - b)));
            const double pc = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
            total += -(t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc));
            const double g = (p - t) * k / pairs;
            out.grad(i, j) += 0.5 * g;
            out.grad(j, i) += 0.5 * g;
        }
    out.value = total / pairs;
    return out;
}

// ---------------------------------------------------------------------------
// sample-level backward

struct SampleGrads {
    double loss_value = 0.0;
    std::vector<Vector> raw_theta;  // per stored layer, raw-space
};

/// Full forward + reverse sweep for one sample; returns the loss and the
/// raw-parameter gradient.
inline SampleGrads backprop_sample(const UnrollingModel& model, const SimilarityMatrix& s,
                                   const AdjacencyMatrix& target, LossKind kind) {
    auto [estimate, trace] = unroll_forward(model, s);
    LossValueGrad lv = loss(estimate, target, kind);

    SampleGrads out;
    out.loss_value = lv.value;
    out.raw_theta.assign(model.stored_layers(),
                         Vector::Zero(model.layer_arity()));

    SolverState g_state = estimate_vjp(model.method, trace.states.back(), lv.grad);
    for (int l = model.depth - 1; l >= 0; --l) {
        LayerGrads lg = layer_vjp(model.method, trace.caches[l], g_state);
        const int slot = model.tie_layers ? 0 : l;
        out.raw_theta[slot] += model.raw_gradient(l, lg.theta);
        g_state = std::move(lg.state);
    }
    return out;
}

// ---------------------------------------------------------------------------
// trainer

struct TrainConfig {
    int epochs = 200;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 32;
    LossKind loss_kind = LossKind::mse;
    std::uint64_t seed = 0;
    int patience = 0;  // 0 disables early stopping
    double eval_tau = 0.5;
};

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> epoch_seconds;  // cumulative wall time at each epoch end
    int best_epoch = -1;  // 0-based
    double best_val_loss = std::numeric_limits<double>::infinity();
    EvalReport test_metrics;
    double wall_seconds = 0.0;
};

inline double split_loss(const UnrollingModel& model, const Dataset& ds, int begin,
                         int count, LossKind kind) {
    double total = 0.0;
    for (int i = begin; i < begin + count; ++i) {
        auto [estimate, trace] = unroll_forward(model, ds.samples[i].s);
        total += loss(estimate, ds.samples[i].a, kind).value;
    }
    return total / std::max(count, 1);
}

inline EvalReport evaluate(const UnrollingModel& model, const Dataset& ds, int begin,
                           int count, double tau = 0.5) {
    if (count < 1) throw parameter_error("evaluate: split is empty");
    EvalReport acc;
    for (int i = begin; i < begin + count; ++i) {
        auto [estimate, trace] = unroll_forward(model, ds.samples[i].s);
        EvalReport r = single_eval(estimate, ds.samples[i].a, tau);
        acc.precision += r.precision;
        acc.recall += r.recall;
        acc.f1 += r.f1;
        acc.auprc += r.auprc;
        acc.relative_frobenius_error += r.relative_frobenius_error;
        acc.mse += r.mse;
    }
    const double c = static_cast<double>(count);
    acc.precision /= c;
    acc.recall /= c;
    acc.f1 /= c;
    acc.auprc /= c;
    acc.relative_frobenius_error /= c;
    acc.mse /= c;
    acc.threshold = tau;
    acc.sample_count = count;
    return acc;
}

inline TrainReport train(UnrollingModel& model, const Dataset& ds, const TrainConfig& cfg) {
    if (ds.n_train < 1 || ds.n_val < 1)
        throw parameter_error("train: train and val splits must be nonempty");
    if (cfg.epochs < 1) throw parameter_error("train: epochs must be >= 1");
    if (cfg.batch_size < 1) throw parameter_error("train: batch_size must be >= 1");

    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);
    TrainReport report;

    std::vector<Vector> m1(model.stored_layers()), m2(model.stored_layers());
    for (int l = 0; l < model.stored_layers(); ++l) {
        m1[l] = Vector::Zero(model.layer_arity());
        m2[l] = Vector::Zero(model.layer_arity());
    }
    long adam_step = 0;

    std::vector<Vector> best_params = model.raw;
    int since_best = 0;

    std::vector<int> order(ds.n_train);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // seeded Fisher-Yates shuffle
        for (int i = ds.n_train - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[i], order[j]);
        }
        double epoch_loss = 0.0;
        for (int start = 0; start < ds.n_train; start += cfg.batch_size) {
            const int end = std::min(start + cfg.batch_size, ds.n_train);
            std::vector<Vector> grad(model.stored_layers(),
                                     Vector::Zero(model.layer_arity()));
            for (int b = start; b < end; ++b) {
                const Sample& sample = ds.samples[order[b]];
                SampleGrads sg = backprop_sample(model, sample.s, sample.a, cfg.loss_kind);
                if (!std::isfinite(sg.loss_value))
                    throw numeric_error("train: non-finite loss at epoch " +
                                        std::to_string(epoch) + ", batch starting " +
                                        std::to_string(start));
                epoch_loss += sg.loss_value;
                for (int l = 0; l < model.stored_layers(); ++l) grad[l] += sg.raw_theta[l];
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            ++adam_step;
            const double bc1 = 1.0 - std::pow(cfg.adam_beta1, adam_step);
            const double bc2 = 1.0 - std::pow(cfg.adam_beta2, adam_step);
            for (int l = 0; l < model.stored_layers(); ++l) {
                Vector g = grad[l] * scale;
                m1[l] = cfg.adam_beta1 * m1[l] + (1.0 - cfg.adam_beta1) * g;
                m2[l] = cfg.adam_beta2 * m2[l] +
                        (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
                Vector mhat = m1[l] / bc1;
                Vector vhat = m2[l] / bc2;
                model.raw[l] -= cfg.learning_rate *
                                mhat.cwiseQuotient(
                                    (vhat.cwiseSqrt().array() + cfg.adam_eps).matrix());
            }
        }
        report.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        report.train_loss.push_back(epoch_loss / ds.n_train);
        const double vloss =
            split_loss(model, ds, ds.val_begin(), ds.n_val, cfg.loss_kind);
        report.val_loss.push_back(vloss);
        if (vloss < report.best_val_loss) {
            report.best_val_loss = vloss;
            report.best_epoch = epoch;
            best_params = model.raw;
            since_best = 0;
        } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
            break;
        }
    }

    model.raw = best_params;  // "best checkpoint" semantics
    if (ds.n_test > 0)
        report.test_metrics = evaluate(model, ds, ds.test_begin(), ds.n_test, cfg.eval_tau);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// finite-difference gradient validation

namespace detail {

/// Flatten a state into a single coordinate vector (matrices column-major).
inline Vector flatten_state(const SolverState& s) {
    if (const auto* g = std::get_if<GaussianState>(&s)) {
        Vector v(g->theta.size() + g->z.size());
        v << Eigen::Map<const Vector>(g->theta.data(), g->theta.size()),
            Eigen::Map<const Vector>(g->z.data(), g->z.size());
        return v;
    }
    if (const auto* m = std::get_if<SmoothState>(&s)) {
        Vector v(m->w.w.size() + m->dbar.size());
        v << m->w.w, m->dbar;
        return v;
    }
    const auto& d = std::get<DiffusionState>(s);
    return Eigen::Map<const Vector>(d.a.w.data(), d.a.w.size());
}

inline double state_dot(const SolverState& a, const SolverState& b) {
    return flatten_state(a).dot(flatten_state(b));
}

inline Matrix random_symmetric(int n, Rng& rng) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
    return 0.5 * (m + m.transpose());
}

inline Matrix random_hollow_symmetric(int n, Rng& rng) {
    Matrix m = random_symmetric(n, rng);
    m.diagonal().setZero();
    return m;
}

}  // namespace detail

struct FiniteDiffResult {
    double max_rel_error = 0.0;
    int checks = 0;
};

/// Compares every layer_vjp output against central finite differences of the
/// scalar phi(x) = <upstream, layer_forward(x)> along random directions.
/// Inputs landing within 1e-4 of a kink (soft-threshold/clamp boundaries,
/// eigenvalue collisions for glad) are re-sampled.
inline FiniteDiffResult finite_diff_check(Method method, int n, int seeds,
                                          double h = 1e-6) {
    if (n > 8) throw parameter_error("finite_diff_check: n must be <= 8");
    FiniteDiffResult result;

    for (int seed = 0; seed < seeds; ++seed) {
        Rng rng(0x5eedULL + 7919ULL * static_cast<std::uint64_t>(seed));

        SimilarityMatrix s;
        SolverState state;
        Vector theta;
        SolverState upstream;

        // rejection-sample inputs away from kinks
        for (int attempt = 0;; ++attempt) {
            if (attempt > 200)
                throw numeric_error("finite_diff_check: could not sample away from kinks");
            switch (method) {
                case Method::gaussian: {
                    Matrix base = detail::random_symmetric(n, rng);
                    s = SimilarityMatrix{n, base, SimilarityKind::covariance};
                    Matrix z = 0.5 * detail::random_symmetric(n, rng);
                    state = GaussianState{Matrix::Identity(n, n), std::move(z)};
                    theta = (Vector(2) << 0.5 + rng.uniform(), 0.05 + 0.1 * rng.uniform())
                                .finished();
                    break;
                }
                case Method::smooth: {
                    Matrix d(n, n);
                    d.setZero();
                    for (int i = 0; i < n; ++i)
                        for (int j = i + 1; j < n; ++j)
                            d(i, j) = d(j, i) = 0.1 + rng.uniform();
                    s = SimilarityMatrix{n, d, SimilarityKind::distance};
                    SmoothState st;
                    st.w = EdgeVector{n, Vector::Zero(EdgeVector::edge_count(n))};
                    for (Eigen::Index e = 0; e < st.w.w.size(); ++e)
                        st.w.w[e] = 0.1 + rng.uniform();
                    st.dbar = Vector::Zero(n);
                    for (int i = 0; i < n; ++i) st.dbar[i] = rng.normal();
                    state = std::move(st);
                    theta = (Vector(3) << 0.5 + rng.uniform(), 0.5 + rng.uniform(),
                             0.02 + 0.05 * rng.uniform())
                                .finished();
                    break;
                }
                case Method::diffusion: {
                    s = SimilarityMatrix{n, detail::random_symmetric(n, rng),
                                         SimilarityKind::covariance};
                    Matrix a = detail::random_hollow_symmetric(n, rng).cwiseAbs();
                    state = DiffusionState{AdjacencyMatrix{n, std::move(a)}, 0.0};
                    theta = Vector(4);
                    theta[0] = rng.normal() * 0.3;
                    theta[1] = 0.5 + rng.uniform();
                    theta[2] = 0.05 + 0.2 * rng.uniform();  // beta
                    theta[3] = 0.1 + 0.3 * rng.uniform();   // t
                    break;
                }
            }
            // kink-margin screening
            auto [next, cache] = layer_forward(method, state, s, theta);
            bool ok = true;
            const double margin = 1e-4;
            if (const auto* c = std::get_if<GladCache>(&cache)) {
                for (Eigen::Index i = 0; i + 1 < c->gamma.size(); ++i)
                    ok = ok && (c->gamma[i + 1] - c->gamma[i] > margin);
                const double tau = c->rho * c->lambda;
                ok = ok && ((c->theta.cwiseAbs().array() - tau).abs() > margin).all();
            } else if (const auto* c = std::get_if<L2gCache>(&cache)) {
                ok = ok &&
                     ((c->y - 2.0 * c->gamma * c->z).array().abs() > margin).all();
            } else if (const auto* c = std::get_if<GdnCache>(&cache)) {
                const double tau = c->t * c->beta;
                Matrix gap = (c->b.array() - tau).abs().matrix();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        if (i != j) ok = ok && gap(i, j) > margin;
            }
            if (ok) break;
        }

        // random upstream cotangent
        switch (method) {
            case Method::gaussian:
                upstream = GaussianState{detail::random_symmetric(n, rng),
                                         detail::random_symmetric(n, rng)};
                break;
            case Method::smooth: {
                SmoothState u;
                u.w = EdgeVector{n, Vector::Zero(EdgeVector::edge_count(n))};
                for (Eigen::Index e = 0; e < u.w.w.size(); ++e) u.w.w[e] = rng.normal();
                u.dbar = Vector(n);
                for (int i = 0; i < n; ++i) u.dbar[i] = rng.normal();
                upstream = std::move(u);
                break;
            }
            case Method::diffusion:
                upstream = DiffusionState{
                    AdjacencyMatrix{n, detail::random_symmetric(n, rng)}, 0.0};
                break;
        }

        auto phi = [&](const SolverState& st, const SimilarityMatrix& sim,
                       const Vector& th) {
            auto [next, cache] = layer_forward(method, st, sim, th);
            return detail::state_dot(upstream, next);
        };

        auto [next, cache] = layer_forward(method, state, s, theta);
        LayerGrads grads = layer_vjp(method, cache, upstream);

        auto record = [&](double analytic, double numeric) {
            const double denom =
                std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            result.max_rel_error =
                std::max(result.max_rel_error, std::abs(analytic - numeric) / denom);
            ++result.checks;
        };

        // state direction
        {
            SolverState dir;
            SolverState plus = state, minus = state;
            if (auto* g = std::get_if<GaussianState>(&state)) {
                Matrix dt = detail::random_symmetric(n, rng);
                Matrix dz = detail::random_symmetric(n, rng);
                std::get<GaussianState>(plus).theta += h * dt;
                std::get<GaussianState>(plus).z += h * dz;
                std::get<GaussianState>(minus).theta -= h * dt;
                std::get<GaussianState>(minus).z -= h * dz;
                dir = GaussianState{std::move(dt), std::move(dz)};
            } else if (auto* m = std::get_if<SmoothState>(&state)) {
                SmoothState d;
                d.w = EdgeVector{n, Vector::Zero(m->w.w.size())};
                for (Eigen::Index e = 0; e < d.w.w.size(); ++e) d.w.w[e] = rng.normal();
                d.dbar = Vector(n);
                for (int i = 0; i < n; ++i) d.dbar[i] = rng.normal();
                std::get<SmoothState>(plus).w.w += h * d.w.w;
                std::get<SmoothState>(plus).dbar += h * d.dbar;
                std::get<SmoothState>(minus).w.w -= h * d.w.w;
                std::get<SmoothState>(minus).dbar -= h * d.dbar;
                dir = std::move(d);
            } else {
                Matrix da = detail::random_hollow_symmetric(n, rng);
                std::get<DiffusionState>(plus).a.w += h * da;
                std::get<DiffusionState>(minus).a.w -= h * da;
                dir = DiffusionState{AdjacencyMatrix{n, std::move(da)}, 0.0};
            }
            const double numeric =
                (phi(plus, s, theta) - phi(minus, s, theta)) / (2.0 * h);
            record(detail::state_dot(grads.state, dir), numeric);
        }

        // each parameter coordinate
        for (Eigen::Index k = 0; k < theta.size(); ++k) {
            Vector tp = theta, tm = theta;
            tp[k] += h;
            tm[k] -= h;
            const double numeric = (phi(state, s, tp) - phi(state, s, tm)) / (2.0 * h);
            record(grads.theta[k], numeric);
        }

        // similarity direction (symmetric, hollow for distance kind)
        {
            Matrix ds = method == Method::smooth ? detail::random_hollow_symmetric(n, rng)
                                                 : detail::random_symmetric(n, rng);
            SimilarityMatrix sp{n, s.s + h * ds, s.kind};
            SimilarityMatrix sm{n, s.s - h * ds, s.kind};
            const double numeric = (phi(state, sp, theta) - phi(state, sm, theta)) / (2.0 * h);
            record((grads.s.cwiseProduct(ds)).sum(), numeric);
        }
    }
    return result;
}

}  // namespace glearn
