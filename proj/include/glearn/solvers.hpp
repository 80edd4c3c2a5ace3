// Model-based iterative solvers: one single-iteration map per data model plus
// a generic fixed-point engine with objective and optimality diagnostics.
//
// gaussian — alternating minimization with quadratic coupling on
//   min  Tr(S Theta) - beta log det Theta + rho ||Z||_1 + (1/(2 lambda)) ||Theta - Z||_F^2
//   Theta-update is closed form through the eigendecomposition of
//   M = S - Z/lambda (per-eigenvalue map (lambda/2)(-g + sqrt(g^2 + 4 beta/lambda)));
//   Z-update is soft-thresholding at rho * lambda.
//
// smooth — monotone forward-backward-forward primal-dual iteration on the
//   edge-weight vectorization
//   min_{w >= 0}  2 z^T w - alpha 1^T log(K w) + beta ||w||^2
//   with z the upper triangle of the distance similarity and K the degree map.
//
// diffusion — proximal gradient with backtracking line search on
//   min_{A in C}  || S - sum_i alpha_i A^i ||_F^2 + beta ||A||_1.
//
// Convergence of the fixed-point engine is measured by the relative Frobenius
// change of the full state bundle.
#pragma once

#include <limits>
#include <variant>
#include <vector>

#include "core.hpp"

namespace glearn {

enum class Method { gaussian, smooth, diffusion };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::gaussian: return "gaussian";
        case Method::smooth: return "smooth";
        case Method::diffusion: return "diffusion";
    }
    return "?";
}

inline Method method_from_string(const std::string& s) {
    if (s == "gaussian" || s == "glad") return Method::gaussian;
    if (s == "smooth" || s == "l2g") return Method::smooth;
    if (s == "diffusion" || s == "gdn") return Method::diffusion;
    throw parameter_error("unknown method: " + s);
}

struct MBHyperparams {
    Method method = Method::diffusion;
    double alpha = 1.0;   // smooth: log-barrier weight
    double beta = 1.0;    // gaussian: log det weight; smooth: ||w||^2; diffusion: l1
    double gamma = 0.05;  // smooth: primal-dual step; diffusion: initial step
    Vector poly_alpha = (Vector(2) << 1.0, 0.5).finished();  // diffusion filter
    double lambda_pen = 1.0;  // gaussian quadratic-coupling weight
    double rho_l1 = 0.01;     // gaussian l1 weight
    double fixed_step = 0.0;  // diffusion: > 0 disables backtracking, uses this step
};

inline MBHyperparams default_hyperparams(Method m) {
    MBHyperparams hp;
    hp.method = m;
    switch (m) {
        case Method::gaussian:
            hp.beta = 1.0;
            hp.lambda_pen = 1.0;
            hp.rho_l1 = 0.01;
            break;
        case Method::smooth:
            hp.alpha = 1.0;
            hp.beta = 1.0;
            hp.gamma = 0.05;
            break;
        case Method::diffusion:
            hp.beta = 0.1;
            hp.gamma = 1.0;
            break;
    }
    return hp;
}

struct SolverConfig {
    double tol = 1e-6;
    int max_iter = 5000;
    bool record_trace = false;
};

struct GaussianState {
    Matrix theta;  // precision estimate, SPD
    Matrix z;      // auxiliary sparse copy
};

struct SmoothState {
    EdgeVector w;  // primal edge weights, >= 0 after each prox
    Vector dbar;   // dual, length N
};

struct DiffusionState {
    AdjacencyMatrix a;
    double step = 1.0;
};

using SolverState = std::variant<GaussianState, SmoothState, DiffusionState>;

enum class Termination { converged, max_iter };

struct SolveResult {
    AdjacencyMatrix estimate;
    Matrix raw_theta;  // gaussian only: converged precision matrix
    int iterations = 0;
    std::vector<double> residual_trace;
    std::vector<double> objective_trace;
    Termination terminated = Termination::max_iter;
    double final_residual = std::numeric_limits<double>::infinity();
    SolverState final_state;
};

// ---------------------------------------------------------------------------
// objectives

inline double gaussian_objective(const Matrix& theta, const Matrix& s, double beta,
                                 double rho) {
    EigenDecomposition d = sym_eig(theta);
    if (d.lambda.minCoeff() <= 0.0)
        throw numeric_error("gaussian objective: precision not positive definite");
    const double logdet = d.lambda.array().log().sum();
    return (s * theta).trace() + rho * theta.cwiseAbs().sum() - beta * logdet;
}

inline double smooth_objective(const Vector& w, const Vector& z, int n, double alpha,
                               double beta) {
    Vector d = degree_forward(n, w);
    if (d.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 * z.dot(w) - alpha * d.array().log().sum() + beta * w.squaredNorm();
}

inline double diffusion_objective(const AdjacencyMatrix& a, const Matrix& s,
                                  const Vector& poly_alpha, double beta) {
    Matrix resid = s - matrix_polynomial(a, poly_alpha);
    return resid.squaredNorm() + beta * a.w.cwiseAbs().sum();
}

inline double objective(const SolverState& state, const SimilarityMatrix& s,
                        const MBHyperparams& hp) {
    switch (hp.method) {
        case Method::gaussian:
            return gaussian_objective(std::get<GaussianState>(state).theta, s.s, hp.beta,
                                      hp.rho_l1);
        case Method::smooth: {
            const auto& st = std::get<SmoothState>(state);
            return smooth_objective(st.w.w, vec_upper(s.s), st.w.n, hp.alpha, hp.beta);
        }
        case Method::diffusion: {
            const auto& st = std::get<DiffusionState>(state);
            return diffusion_objective(st.a, s.s, hp.poly_alpha, hp.beta);
        }
    }
    throw parameter_error("objective: unknown method");
}

// ---------------------------------------------------------------------------
// gaussian

/// Per-eigenvalue map of the closed-form Theta update.
inline double glasso_eigen_map(double g, double lambda, double beta) {
    return 0.5 * lambda * (-g + std::sqrt(g * g + 4.0 * beta / lambda));
}

inline GaussianState glasso_am_step(const GaussianState& state, const Matrix& s,
                                    const MBHyperparams& hp) {
    const double lambda = hp.lambda_pen;
    Matrix m = s - state.z / lambda;
    EigenDecomposition d = sym_eig(m);
    Vector mapped = d.lambda.unaryExpr(
        [&](double g) { return glasso_eigen_map(g, lambda, hp.beta); });
    Matrix theta = d.u * mapped.asDiagonal() * d.u.transpose();
    theta = 0.5 * (theta + theta.transpose()).eval();
    Matrix z = soft_threshold(theta, hp.rho_l1 * lambda);
    return GaussianState{std::move(theta), std::move(z)};
}

// ---------------------------------------------------------------------------
// smooth

/// One forward-backward-forward primal-dual iteration.
inline SmoothState smooth_pds_step(const SmoothState& state, const Vector& z,
                                   const MBHyperparams& hp) {
    const double gamma = hp.gamma;
    if (gamma <= 0.0 || gamma >= 1.0)
        throw parameter_error("smooth_pds_step: gamma must be in (0, 1)");
    const int n = state.w.n;
    const Vector& w = state.w.w;
    const Vector& dbar = state.dbar;

    Vector y = w - gamma * (2.0 * hp.beta * w + degree_adjoint(n, dbar));
    Vector ybar = dbar + gamma * degree_forward(n, w);
    Vector p = (y - 2.0 * gamma * z).cwiseMax(0.0);
    Vector pbar =
        (0.5 * (ybar.array() - (ybar.array().square() + 4.0 * hp.alpha * gamma).sqrt()))
            .matrix();
    Vector q = p - gamma * (2.0 * hp.beta * p + degree_adjoint(n, pbar));
    Vector qbar = pbar + gamma * degree_forward(n, p);
    SmoothState next;
    next.w = EdgeVector{n, w - y + q};
    next.dbar = dbar - ybar + qbar;
    return next;
}

// ---------------------------------------------------------------------------
// diffusion

/// Gradient of g(A) = ||S - sum_i alpha_i A^i||_F^2.
inline Matrix diffusion_gradient(const AdjacencyMatrix& a, const Matrix& s,
                                 const Vector& alpha) {
    const int k = static_cast<int>(alpha.size()) - 1;
    std::vector<Matrix> powers(k + 1);
    powers[0] = Matrix::Identity(a.n, a.n);
    for (int i = 1; i <= k; ++i) powers[i] = powers[i - 1] * a.w;
    Matrix h = Matrix::Zero(a.n, a.n);
    for (int i = 0; i <= k; ++i) h += alpha[i] * powers[i];
    Matrix r = -2.0 * (s - h);
    Matrix grad = Matrix::Zero(a.n, a.n);
    for (int i = 1; i <= k; ++i)
        for (int j = 0; j <= i - 1; ++j)
            grad += alpha[i] * powers[j] * r * powers[i - 1 - j];
    return 0.5 * (grad + grad.transpose());
}

/// One fixed-step proximal gradient update (shared with the unrolled layer).
inline AdjacencyMatrix diffusion_prox_step(const AdjacencyMatrix& a, const Matrix& grad,
                                           double step, double beta) {
    Matrix b = a.w - step * grad;
    return project_constraints(soft_threshold(b, step * beta));
}

inline DiffusionState diffusion_pgd_step(const DiffusionState& state, const Matrix& s,
                                         const MBHyperparams& hp) {
    const Vector& alpha = hp.poly_alpha;
    auto smooth_part = [&](const AdjacencyMatrix& a) {
        return (s - matrix_polynomial(a, alpha)).squaredNorm();
    };
    Matrix grad = diffusion_gradient(state.a, s, alpha);
    const double g0 = smooth_part(state.a);

    if (hp.fixed_step > 0.0) {
        AdjacencyMatrix next = diffusion_prox_step(state.a, grad, hp.fixed_step, hp.beta);
        return DiffusionState{std::move(next), hp.fixed_step};
    }

    double t = state.step;
    for (int halvings = 0; halvings <= 60; ++halvings) {
        AdjacencyMatrix cand = diffusion_prox_step(state.a, grad, t, hp.beta);
        Matrix delta = cand.w - state.a.w;
        const double quad = g0 + grad.cwiseProduct(delta).sum() +
                            delta.squaredNorm() / (2.0 * t);
        if (smooth_part(cand) <= quad + 1e-12 * std::max(1.0, std::abs(quad)))
            return DiffusionState{std::move(cand), t * 1.25};
        t *= 0.5;
    }
    throw numeric_error("diffusion_pgd_step: backtracking exhausted 60 halvings");
}

// ---------------------------------------------------------------------------
// fixed-point engine

inline SolverState initial_state(Method method, const SimilarityMatrix& s,
                                 const MBHyperparams& hp) {
    switch (method) {
        case Method::gaussian: {
            Matrix theta = Matrix::Zero(s.n, s.n);
            for (int i = 0; i < s.n; ++i) theta(i, i) = 1.0 / (s.s(i, i) + 1e-2);
            return GaussianState{std::move(theta), Matrix::Zero(s.n, s.n)};
        }
        case Method::smooth: {
            SmoothState st;
            st.w = EdgeVector{s.n, Vector::Constant(EdgeVector::edge_count(s.n),
                                                    1.0 / static_cast<double>(s.n))};
            st.dbar = degree_forward(s.n, st.w.w);
            return st;
        }
        case Method::diffusion:
            return DiffusionState{AdjacencyMatrix::zero(s.n), hp.gamma > 0.0 ? hp.gamma : 1.0};
    }
    throw parameter_error("initial_state: unknown method");
}

namespace detail {

inline double state_norm(const SolverState& s) {
    if (const auto* g = std::get_if<GaussianState>(&s))
        return std::sqrt(g->theta.squaredNorm() + g->z.squaredNorm());
    if (const auto* m = std::get_if<SmoothState>(&s))
        return std::sqrt(m->w.w.squaredNorm() + m->dbar.squaredNorm());
    const auto& d = std::get<DiffusionState>(s);
    return d.a.w.norm();
}

inline double state_diff_norm(const SolverState& a, const SolverState& b) {
    if (const auto* g = std::get_if<GaussianState>(&a)) {
        const auto& h = std::get<GaussianState>(b);
        return std::sqrt((g->theta - h.theta).squaredNorm() + (g->z - h.z).squaredNorm());
    }
    if (const auto* m = std::get_if<SmoothState>(&a)) {
        const auto& o = std::get<SmoothState>(b);
        return std::sqrt((m->w.w - o.w.w).squaredNorm() + (m->dbar - o.dbar).squaredNorm());
    }
    return (std::get<DiffusionState>(a).a.w - std::get<DiffusionState>(b).a.w).norm();
}

}  // namespace detail

/// Extract the adjacency estimate from a state: gaussian uses the projected
/// off-diagonal magnitude pattern of Theta; smooth de-vectorizes w.
inline AdjacencyMatrix state_estimate(const SolverState& state) {
    if (const auto* g = std::get_if<GaussianState>(&state)) {
        Matrix m = g->theta.cwiseAbs();
        m.diagonal().setZero();
        return project_constraints(m);
    }
    if (const auto* s = std::get_if<SmoothState>(&state))
        return devec_upper(EdgeVector{s->w.n, s->w.w.cwiseMax(0.0)});
    return std::get<DiffusionState>(state).a;
}

inline SolverState solver_step(const SolverState& state, const SimilarityMatrix& s,
                               const MBHyperparams& hp) {
    switch (hp.method) {
        case Method::gaussian:
            return glasso_am_step(std::get<GaussianState>(state), s.s, hp);
        case Method::smooth: {
            if (s.kind != SimilarityKind::distance)
                throw parameter_error("smooth solver requires a distance similarity");
            return smooth_pds_step(std::get<SmoothState>(state), vec_upper(s.s), hp);
        }
        case Method::diffusion:
            return diffusion_pgd_step(std::get<DiffusionState>(state), s.s, hp);
    }
    throw parameter_error("solver_step: unknown method");
}

inline SolveResult fixed_point_solve(Method method, const SimilarityMatrix& s,
                                     const MBHyperparams& hp_in, const SolverConfig& cfg) {
    if (cfg.max_iter < 1) throw parameter_error("fixed_point_solve: max_iter must be >= 1");
    if (cfg.tol <= 0.0) throw parameter_error("fixed_point_solve: tol must be > 0");
    MBHyperparams hp = hp_in;
    hp.method = method;

    SolverState state = initial_state(method, s, hp);
    SolveResult result;
    result.terminated = Termination::max_iter;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        SolverState next;
        try {
            next = solver_step(state, s, hp);
        } catch (const error& e) {
            throw numeric_error("iteration " + std::to_string(it) + ": " + e.what());
        }
        const double resid =
            detail::state_diff_norm(next, state) / std::max(detail::state_norm(state), 1.0);
        if (resid > 1e12) throw numeric_error("fixed_point_solve: iterates diverged");
        state = std::move(next);
        result.iterations = it;
        result.final_residual = resid;
        if (cfg.record_trace) {
            result.residual_trace.push_back(resid);
            result.objective_trace.push_back(objective(state, s, hp));
        }
        if (resid <= cfg.tol) {
            result.terminated = Termination::converged;
            break;
        }
    }
    result.estimate = state_estimate(state);
    if (const auto* g = std::get_if<GaussianState>(&state)) result.raw_theta = g->theta;
    result.final_state = std::move(state);
    return result;
}

// ---------------------------------------------------------------------------
// optimality diagnostics

/// Max-norm KKT residual of the original problem at the solver's fixed point.
/// For gaussian the l1 subgradient is taken at the sparse copy Z.
inline double kkt_residual(const SolverState& state, const SimilarityMatrix& s,
                           const MBHyperparams& hp) {
    switch (hp.method) {
        case Method::gaussian: {
            const auto& st = std::get<GaussianState>(state);
            EigenDecomposition d = sym_eig(st.theta);
            if (d.lambda.minCoeff() <= 0.0)
                throw numeric_error("kkt_residual: precision not positive definite");
            Matrix inv = d.u * d.lambda.cwiseInverse().asDiagonal() * d.u.transpose();
            Matrix r = s.s - hp.beta * inv;
            double worst = 0.0;
            for (int i = 0; i < st.theta.rows(); ++i)
                for (int j = 0; j < st.theta.cols(); ++j) {
                    double v;
                    if (st.z(i, j) != 0.0)
                        v = std::abs(r(i, j) + hp.rho_l1 * (st.z(i, j) > 0.0 ? 1.0 : -1.0));
                    else
                        v = std::max(0.0, std::abs(r(i, j)) - hp.rho_l1);
                    worst = std::max(worst, v);
                }
            return worst;
        }
        case Method::smooth: {
            // FBF iterates carry roundoff-size residue on inactive edges, so the
            // complementarity split is taken at the exactly-sparse prox output.
            const auto& st = std::get<SmoothState>(state);
            const int n = st.w.n;
            Vector z = vec_upper(s.s);
            Vector y = st.w.w -
                       hp.gamma * (2.0 * hp.beta * st.w.w + degree_adjoint(n, st.dbar));
            Vector p = (y - 2.0 * hp.gamma * z).cwiseMax(0.0);
            Vector deg = degree_forward(n, p);
            if (deg.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
            Vector grad = 2.0 * z - hp.alpha * degree_adjoint(n, deg.cwiseInverse()) +
                          2.0 * hp.beta * p;
            double worst = 0.0;
            for (Eigen::Index e = 0; e < grad.size(); ++e) {
                const double v = p[e] > 0.0 ? std::abs(grad[e]) : std::max(0.0, -grad[e]);
                worst = std::max(worst, v);
            }
            return worst;
        }
        case Method::diffusion: {
            const auto& st = std::get<DiffusionState>(state);
            Matrix grad = diffusion_gradient(st.a, s.s, hp.poly_alpha);
            const double t = st.step > 0.0 ? st.step : 1.0;
            AdjacencyMatrix next = diffusion_prox_step(st.a, grad, t, hp.beta);
            return (next.w - st.a.w).norm() / t;
        }
    }
    throw parameter_error("kkt_residual: unknown method");
}

}  // namespace glearn
