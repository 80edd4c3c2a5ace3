#include <catch2/catch_amalgamated.hpp>

#include <glearn/core.hpp>
#include <glearn/rng.hpp>

using namespace glearn;

namespace {
Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}
}  // namespace

TEST_CASE("laplacian on small graphs") {
    AdjacencyMatrix path = AdjacencyMatrix::from_matrix(mat2(0, 1, 1, 0));
    Matrix l = laplacian(path);
    CHECK(l(0, 0) == 1.0);
    CHECK(l(0, 1) == -1.0);
    CHECK(l(1, 0) == -1.0);
    CHECK(l(1, 1) == 1.0);

    CHECK(laplacian(AdjacencyMatrix::zero(2)).isZero(0.0));

    Matrix a(3, 3);
    a << 0, 2, 0, 2, 0, 1, 0, 1, 0;
    Matrix expect(3, 3);
    expect << 2, -2, 0, -2, 3, -1, 0, -1, 1;
    CHECK(laplacian(AdjacencyMatrix::from_matrix(a)).isApprox(expect, 0.0));
}

TEST_CASE("laplacian row sums and positive semidefiniteness") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(8));
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = rng.uniform();
        AdjacencyMatrix a = project_constraints(m);
        Matrix l = laplacian(a);
        CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
        CHECK(sym_eig(l).lambda.minCoeff() >= -1e-10);
    }
}

TEST_CASE("project_constraints examples") {
    AdjacencyMatrix p = project_constraints(mat2(1, -2, 3, 4));
    CHECK(p.w(0, 1) == 0.5);
    CHECK(p.w(1, 0) == 0.5);
    CHECK(p.w(0, 0) == 0.0);
    CHECK(p.w(1, 1) == 0.0);

    CHECK(project_constraints(mat2(0, -1, -1, 0)).w.isZero(0.0));
    CHECK_THROWS_AS(project_constraints(Matrix::Zero(2, 3)), dimension_error);
}

TEST_CASE("project_constraints is idempotent and nonexpansive") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(6));
        Matrix x(n, n), y(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                x(i, j) = rng.normal();
                y(i, j) = rng.normal();
            }
        AdjacencyMatrix px = project_constraints(x);
        AdjacencyMatrix py = project_constraints(y);
        CHECK((project_constraints(px.w).w - px.w).cwiseAbs().maxCoeff() == 0.0);
        CHECK((px.w - py.w).norm() <= (x - y).norm() + 1e-12);
    }
}

TEST_CASE("soft_threshold") {
    CHECK(soft_threshold(1.5, 1.0) == 0.5);
    CHECK(soft_threshold(-0.3, 0.5) == 0.0);
    CHECK(soft_threshold(-2.0, 0.5) == -1.5);
    CHECK(soft_threshold(0.7, 0.0) == 0.7);
    CHECK_THROWS_AS(soft_threshold(1.0, -0.1), parameter_error);
    Matrix m = mat2(1.5, -0.3, 0.3, -1.5);
    Matrix t = soft_threshold(m, 1.0);
    CHECK(t(0, 0) == 0.5);
    CHECK(t(0, 1) == 0.0);
    CHECK(t(1, 1) == -0.5);
}

TEST_CASE("vec_upper ordering and exact round trip") {
    Matrix a(3, 3);
    a << 0, 1, 2, 1, 0, 3, 2, 3, 0;
    AdjacencyMatrix adj = AdjacencyMatrix::from_matrix(a);
    EdgeVector e = vec_upper(adj);
    REQUIRE(e.w.size() == 3);
    CHECK(e.w[0] == 1.0);
    CHECK(e.w[1] == 2.0);
    CHECK(e.w[2] == 3.0);
    CHECK((devec_upper(e).w - a).cwiseAbs().maxCoeff() == 0.0);

    AdjacencyMatrix two = AdjacencyMatrix::from_matrix(mat2(0, 5, 5, 0));
    CHECK(vec_upper(two).w[0] == 5.0);

    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(9));
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = rng.uniform();
        AdjacencyMatrix adj2 = project_constraints(m);
        CHECK((devec_upper(vec_upper(adj2)).w - adj2.w).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK_THROWS_AS(devec_upper(EdgeVector{3, Vector::Zero(2)}), dimension_error);
}

TEST_CASE("degree map forward, adjoint, and adjoint identity") {
    Vector w(3);
    w << 1, 2, 3;
    Vector d = degree_forward(3, w);
    CHECK(d[0] == 3.0);
    CHECK(d[1] == 4.0);
    CHECK(d[2] == 5.0);

    Vector v = Vector::Ones(3);
    Vector adj = degree_adjoint(3, v);
    CHECK((adj.array() == 2.0).all());

    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(49));
        Vector we(EdgeVector::edge_count(n)), vn(n);
        for (Eigen::Index i = 0; i < we.size(); ++i) we[i] = rng.normal();
        for (int i = 0; i < n; ++i) vn[i] = rng.normal();
        const double lhs = degree_forward(n, we).dot(vn);
        const double rhs = we.dot(degree_adjoint(n, vn));
        CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
    }
    CHECK_THROWS_AS(degree_forward(3, Vector::Zero(2)), dimension_error);
    CHECK_THROWS_AS(degree_adjoint(3, Vector::Zero(2)), dimension_error);
}

TEST_CASE("matrix_polynomial examples and linearity") {
    AdjacencyMatrix swap = AdjacencyMatrix::from_matrix(mat2(0, 1, 1, 0));
    CHECK(matrix_polynomial(swap, Vector::Ones(1)).isApprox(Matrix::Identity(2, 2), 0.0));
    CHECK(matrix_polynomial(swap, (Vector(2) << 0, 1).finished()).isApprox(swap.w, 0.0));
    CHECK(matrix_polynomial(swap, (Vector(3) << 0, 0, 1).finished())
              .isApprox(Matrix::Identity(2, 2), 0.0));
    CHECK_THROWS_AS(matrix_polynomial(swap, Vector()), parameter_error);

    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4;
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = rng.uniform();
        AdjacencyMatrix a = project_constraints(m);
        Vector a1(3), a2(3);
        for (int k = 0; k < 3; ++k) {
            a1[k] = rng.normal();
            a2[k] = rng.normal();
        }
        Matrix sum = matrix_polynomial(a, a1 + a2);
        Matrix parts = matrix_polynomial(a, a1) + matrix_polynomial(a, a2);
        CHECK((sum - parts).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("sym_eig invariants and examples") {
    EigenDecomposition id = sym_eig(Matrix::Identity(3, 3));
    CHECK((id.lambda.array() - 1.0).abs().maxCoeff() < 1e-12);

    EigenDecomposition sw = sym_eig(mat2(0, 1, 1, 0));
    CHECK(std::abs(sw.lambda[0] + 1.0) < 1e-12);
    CHECK(std::abs(sw.lambda[1] - 1.0) < 1e-12);

    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << 3, 1, 2;
    EigenDecomposition de = sym_eig(d);
    CHECK(std::abs(de.lambda[0] - 1.0) < 1e-12);
    CHECK(std::abs(de.lambda[1] - 2.0) < 1e-12);
    CHECK(std::abs(de.lambda[2] - 3.0) < 1e-12);

    Rng rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 5;
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
        Matrix s = 0.5 * (m + m.transpose());
        EigenDecomposition e = sym_eig(s);
        CHECK((e.u.transpose() * e.u - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10);
        Matrix recon = e.u * e.lambda.asDiagonal() * e.u.transpose();
        CHECK((recon - s).norm() <= 1e-9 * std::max(1.0, s.norm()));
        for (Eigen::Index i = 0; i + 1 < e.lambda.size(); ++i)
            CHECK(e.lambda[i] <= e.lambda[i + 1]);
        // determinism incl. sign convention
        EigenDecomposition e2 = sym_eig(s);
        CHECK((e.u - e2.u).cwiseAbs().maxCoeff() == 0.0);
    }

    Matrix asym = mat2(0, 1, 2, 0);
    CHECK_THROWS_AS(sym_eig(asym), contract_error);
}
