#include <catch2/catch_amalgamated.hpp>

#include <glearn/solvers.hpp>
#include <glearn/synth.hpp>

using namespace glearn;

namespace {

Matrix random_spd(int n, Rng& rng, double load = 0.5) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
    return m * m.transpose() / n + load * Matrix::Identity(n, n);
}

SimilarityMatrix random_distance(int n, Rng& rng) {
    Matrix d = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = 0.2 + rng.uniform();
    return SimilarityMatrix{n, d, SimilarityKind::distance};
}

}  // namespace

TEST_CASE("objective examples") {
    // gaussian: Theta = I, S = I, rho = 0, beta = 1 -> Tr(I) - log det I = N
    const int n = 4;
    CHECK(gaussian_objective(Matrix::Identity(n, n), Matrix::Identity(n, n), 1.0, 0.0) ==
          Catch::Approx(static_cast<double>(n)));

    // diffusion: A = 0, alpha = (0,1), beta = 0 -> ||S||_F^2
    Matrix s = (Matrix(2, 2) << 1, 2, 2, 3).finished();
    CHECK(diffusion_objective(AdjacencyMatrix::zero(2), s,
                              (Vector(2) << 0, 1).finished(), 0.0) ==
          Catch::Approx(s.squaredNorm()));

    // smooth: w = 1 on N=3, z = 0, alpha = 1, beta = 0 -> -3 log 2
    CHECK(smooth_objective(Vector::Ones(3), Vector::Zero(3), 3, 1.0, 0.0) ==
          Catch::Approx(-3.0 * std::log(2.0)));

    // zero degree hits the +inf sentinel
    CHECK(std::isinf(smooth_objective(Vector::Zero(3), Vector::Zero(3), 3, 1.0, 0.0)));
}

TEST_CASE("glasso step: identity case and zero-threshold case") {
    const int n = 3;
    MBHyperparams hp = default_hyperparams(Method::gaussian);
    hp.lambda_pen = 1.0;
    hp.rho_l1 = 0.0;
    GaussianState st{Matrix::Identity(n, n), Matrix::Zero(n, n)};
    GaussianState next = glasso_am_step(st, Matrix::Identity(n, n), hp);
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    CHECK((next.theta - golden * Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
    // rho = 0 -> Z' = Theta'
    CHECK((next.z - next.theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("glasso step preserves positive definiteness") {
    Rng rng(41);
    MBHyperparams hp = default_hyperparams(Method::gaussian);
    hp.rho_l1 = 0.1;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5;
        Matrix s(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s(i, j) = rng.normal();
        s = 0.5 * (s + s.transpose()).eval();
        Matrix z(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) z(i, j) = rng.normal();
        z = 0.5 * (z + z.transpose()).eval();
        GaussianState st{Matrix::Identity(n, n), z};
        GaussianState next = glasso_am_step(st, s, hp);
        CHECK(sym_eig(next.theta).lambda.minCoeff() > 0.0);
    }
}

TEST_CASE("glasso with vanishing l1 converges to the scaled inverse") {
    Rng rng(42);
    const int n = 5;
    Matrix s = random_spd(n, rng);
    MBHyperparams hp = default_hyperparams(Method::gaussian);
    hp.rho_l1 = 0.0;
    hp.beta = 1.0;
    hp.lambda_pen = 1.0;
    SolverConfig cfg;
    cfg.tol = 1e-13;
    cfg.max_iter = 50000;
    SolveResult r = fixed_point_solve(Method::gaussian,
                                      SimilarityMatrix{n, s, SimilarityKind::covariance},
                                      hp, cfg);
    CHECK(r.terminated == Termination::converged);
    CHECK((r.raw_theta - s.inverse()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("smooth prox pieces") {
    // dual prox at ybar = 0, alpha = 1, gamma = 1 -> -1  (checked via formula)
    const double ybar = 0.0, alpha = 1.0, gamma = 1.0;
    const double pbar = 0.5 * (ybar - std::sqrt(ybar * ybar + 4.0 * alpha * gamma));
    CHECK(pbar == -1.0);
    // primal prox: max(0, y - 2 gamma z) at y = 1, z = 1, gamma = 0.25
    CHECK(std::max(0.0, 1.0 - 2.0 * 0.25 * 1.0) == 0.5);

    // out-of-range step size
    SmoothState st;
    st.w = EdgeVector{3, Vector::Ones(3)};
    st.dbar = Vector::Zero(3);
    MBHyperparams hp = default_hyperparams(Method::smooth);
    hp.gamma = 1.5;
    CHECK_THROWS_AS(smooth_pds_step(st, Vector::Ones(3), hp), parameter_error);
}

TEST_CASE("smooth solver keeps weights nonnegative and converges") {
    Rng rng(55);
    SimilarityMatrix s = random_distance(6, rng);
    MBHyperparams hp = default_hyperparams(Method::smooth);
    SolverConfig cfg;
    cfg.tol = 1e-10;
    cfg.max_iter = 50000;
    SolveResult r = fixed_point_solve(Method::smooth, s, hp, cfg);
    CHECK(r.terminated == Termination::converged);
    CHECK(r.estimate.w.minCoeff() >= 0.0);
    // optimality at the converged state
    CHECK(kkt_residual(r.final_state, s, hp) < 1e-6);
}

TEST_CASE("diffusion gradient examples and finite differences") {
    // K=1, alpha = (0,1): grad = 2(A - S)
    Matrix s = (Matrix(2, 2) << 0, 1, 1, 0).finished();
    Matrix g = diffusion_gradient(AdjacencyMatrix::zero(2), s, (Vector(2) << 0, 1).finished());
    CHECK(g(0, 1) == -2.0);
    CHECK(g(1, 0) == -2.0);

    // K=2 against central differences
    Rng rng(60);
    const int n = 4;
    Vector alpha = (Vector(3) << 0.3, 1.0, 0.4).finished();
    Matrix raw(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) raw(i, j) = rng.uniform();
    AdjacencyMatrix a = project_constraints(raw);
    Matrix sim(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sim(i, j) = rng.normal();
    sim = 0.5 * (sim + sim.transpose()).eval();
    Matrix grad = diffusion_gradient(a, sim, alpha);
    auto gfun = [&](const Matrix& m) {
        return (sim - matrix_polynomial(AdjacencyMatrix{n, m}, alpha)).squaredNorm();
    };
    const double h = 1e-6;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            Matrix dp = a.w, dm = a.w;
            dp(i, j) += h;
            dp(j, i) += h;
            dm(i, j) -= h;
            dm(j, i) -= h;
            const double numeric = (gfun(dp) - gfun(dm)) / (2.0 * h);
            const double analytic = grad(i, j) + grad(j, i);
            CHECK(std::abs(numeric - analytic) <
                  1e-6 * std::max(1.0, std::abs(analytic)));
        }
}

TEST_CASE("diffusion solver: exact recovery of the similarity support") {
    Matrix s = (Matrix(2, 2) << 0, 1, 1, 0).finished();
    MBHyperparams hp = default_hyperparams(Method::diffusion);
    hp.poly_alpha = (Vector(2) << 0, 1).finished();
    hp.beta = 0.0;
    SolverConfig cfg;
    cfg.tol = 1e-10;
    SolveResult r = fixed_point_solve(Method::diffusion,
                                      SimilarityMatrix{2, s, SimilarityKind::covariance},
                                      hp, cfg);
    CHECK((r.estimate.w - s).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("diffusion backtracking is monotone in the objective") {
    Rng rng(71);
    const int n = 6;
    Matrix sim(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sim(i, j) = rng.normal();
    sim = 0.5 * (sim + sim.transpose()).eval();
    SimilarityMatrix s{n, sim, SimilarityKind::covariance};
    MBHyperparams hp = default_hyperparams(Method::diffusion);
    hp.beta = 0.05;
    DiffusionState st{AdjacencyMatrix::zero(n), 1.0};
    double prev = diffusion_objective(st.a, sim, hp.poly_alpha, hp.beta);
    for (int it = 0; it < 100; ++it) {
        st = diffusion_pgd_step(st, sim, hp);
        const double cur = diffusion_objective(st.a, sim, hp.poly_alpha, hp.beta);
        CHECK(cur <= prev + 1e-9 * std::max(1.0, std::abs(prev)));
        prev = cur;
    }
}

TEST_CASE("fixed_point_solve termination contract") {
    Rng rng(81);
    Matrix s = random_spd(4, rng);
    MBHyperparams hp = default_hyperparams(Method::gaussian);
    SimilarityMatrix sim{4, s, SimilarityKind::covariance};

    SolverConfig huge;
    huge.tol = 1e9;
    SolveResult r = fixed_point_solve(Method::gaussian, sim, hp, huge);
    CHECK(r.iterations == 1);
    CHECK(r.terminated == Termination::converged);

    SolverConfig bad;
    bad.max_iter = 0;
    CHECK_THROWS_AS(fixed_point_solve(Method::gaussian, sim, hp, bad), parameter_error);
}

TEST_CASE("fixed_point_solve is deterministic") {
    Rng rng(91);
    Matrix s = random_spd(6, rng);
    MBHyperparams hp = default_hyperparams(Method::gaussian);
    hp.rho_l1 = 0.05;
    SimilarityMatrix sim{6, s, SimilarityKind::covariance};
    SolverConfig cfg;
    cfg.record_trace = true;
    SolveResult a = fixed_point_solve(Method::gaussian, sim, hp, cfg);
    SolveResult b = fixed_point_solve(Method::gaussian, sim, hp, cfg);
    CHECK(a.iterations == b.iterations);
    CHECK((a.estimate.w - b.estimate.w).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.objective_trace == b.objective_trace);
}

TEST_CASE("gaussian kkt residual") {
    Rng rng(101);
    const int n = 5;
    Matrix s = random_spd(n, rng);
    MBHyperparams hp = default_hyperparams(Method::gaussian);
    hp.rho_l1 = 0.0;
    // exact stationary point Theta = beta * S^{-1}
    Matrix theta = hp.beta * s.inverse();
    theta = 0.5 * (theta + theta.transpose()).eval();
    GaussianState st{theta, theta};
    CHECK(kkt_residual(SolverState{st}, SimilarityMatrix{n, s, SimilarityKind::covariance},
                       hp) < 1e-10);

    // a random non-stationary state has a visibly nonzero residual
    GaussianState bad{Matrix::Identity(n, n) * 3.0, Matrix::Identity(n, n) * 3.0};
    CHECK(kkt_residual(SolverState{bad}, SimilarityMatrix{n, s, SimilarityKind::covariance},
                       hp) > 1e-3);
}

TEST_CASE("converged gaussian run with l1 has small kkt residual") {
    Rng rng(111);
    const int n = 8;
    Matrix s = random_spd(n, rng);
    MBHyperparams hp = default_hyperparams(Method::gaussian);
    hp.rho_l1 = 0.05;
    SolverConfig cfg;
    cfg.tol = 1e-12;
    cfg.max_iter = 100000;
    SolveResult r = fixed_point_solve(Method::gaussian,
                                      SimilarityMatrix{n, s, SimilarityKind::covariance},
                                      hp, cfg);
    REQUIRE(r.terminated == Termination::converged);
    GaussianState st{r.raw_theta, soft_threshold(r.raw_theta, hp.rho_l1 * hp.lambda_pen)};
    CHECK(kkt_residual(SolverState{st}, SimilarityMatrix{n, s, SimilarityKind::covariance},
                       hp) < 1e-6);
}
