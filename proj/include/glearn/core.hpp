// Core dense graph linear algebra: domain types, shift operators, constraint
// projection, edge vectorization, and the deterministic symmetric
// eigendecomposition used by the solvers and unrolled layers.
//
// Conventions fixed here and relied on everywhere else:
//   * adjacency matrices are symmetric, nonnegative, hollow (zero diagonal)
//   * edge vectors enumerate the strict upper triangle row-major:
//     (0,1),(0,2),...,(0,N-1),(1,2),...
//   * sym_eig sorts eigenvalues ascending and fixes each eigenvector's sign
//     so its largest-magnitude component is positive
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace glearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct dimension_error : error {
    using error::error;
};
struct parameter_error : error {
    using error::error;
};
struct contract_error : error {
    using error::error;
};
struct numeric_error : error {
    using error::error;
};

enum class SimilarityKind { covariance, correlation, distance };

inline const char* to_string(SimilarityKind k) {
    switch (k) {
        case SimilarityKind::covariance: return "covariance";
        case SimilarityKind::correlation: return "correlation";
        case SimilarityKind::distance: return "distance";
    }
    return "?";
}

inline SimilarityKind similarity_kind_from_string(const std::string& s) {
    if (s == "covariance") return SimilarityKind::covariance;
    if (s == "correlation") return SimilarityKind::correlation;
    if (s == "distance") return SimilarityKind::distance;
    throw parameter_error("unknown similarity kind: " + s);
}

/// Symmetric nonnegative hollow edge-weight matrix. Construct via
/// from_matrix (validates) or project_constraints (projects).
struct AdjacencyMatrix {
    int n = 0;
    Matrix w;

    static AdjacencyMatrix from_matrix(const Matrix& m) {
        if (m.rows() != m.cols())
            throw dimension_error("adjacency must be square");
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (m(i, i) != 0.0)
                throw contract_error("adjacency diagonal must be zero");
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (!std::isfinite(m(i, j)))
                    throw contract_error("adjacency entries must be finite");
                if (m(i, j) < 0.0)
                    throw contract_error("adjacency entries must be nonnegative");
                if (m(i, j) != m(j, i))
                    throw contract_error("adjacency must be exactly symmetric");
            }
        }
        return AdjacencyMatrix{static_cast<int>(m.rows()), m};
    }

    static AdjacencyMatrix zero(int n) {
        return AdjacencyMatrix{n, Matrix::Zero(n, n)};
    }
};

/// N x P data matrix, one graph signal per column.
struct SignalMatrix {
    int n = 0;
    int p = 0;
    Matrix x;

    static SignalMatrix from_matrix(const Matrix& m) {
        if (m.cols() < 1) throw parameter_error("signal matrix needs p >= 1");
        if (!m.allFinite()) throw contract_error("signal entries must be finite");
        return SignalMatrix{static_cast<int>(m.rows()),
                            static_cast<int>(m.cols()), m};
    }
};

/// Symmetric N x N observed-similarity matrix.
struct SimilarityMatrix {
    int n = 0;
    Matrix s;
    SimilarityKind kind = SimilarityKind::covariance;

    static SimilarityMatrix from_matrix(const Matrix& m, SimilarityKind kind) {
        if (m.rows() != m.cols())
            throw dimension_error("similarity must be square");
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw contract_error("similarity must be symmetric to 1e-12");
        if (kind == SimilarityKind::distance) {
            if (m.diagonal().cwiseAbs().maxCoeff() > 0.0)
                throw contract_error("distance similarity must have zero diagonal");
            if (m.minCoeff() < 0.0)
                throw contract_error("distance similarity must be nonnegative");
        }
        return SimilarityMatrix{static_cast<int>(m.rows()), m, kind};
    }
};

/// Compact upper-triangle edge-weight vector of length N(N-1)/2.
struct EdgeVector {
    int n = 0;
    Vector w;

    static int edge_count(int n) { return n * (n - 1) / 2; }

    static EdgeVector zero(int n) {
        return EdgeVector{n, Vector::Zero(edge_count(n))};
    }
};

/// Result of sym_eig: columns of u are eigenvectors, lambda ascending.
struct EigenDecomposition {
    Matrix u;
    Vector lambda;
};

inline Matrix laplacian(const AdjacencyMatrix& a) {
    Matrix l = -a.w;
    l.diagonal() = a.w.rowwise().sum();
    return l;
}

/// Euclidean projection onto the constraint set (symmetric, nonnegative,
/// hollow): symmetrize, clamp negatives, zero the diagonal.
inline AdjacencyMatrix project_constraints(const Matrix& m) {
    if (m.rows() != m.cols())
        throw dimension_error("project_constraints: matrix must be square");
    Matrix p = 0.5 * (m + m.transpose());
    p = p.cwiseMax(0.0);
    p.diagonal().setZero();
    return AdjacencyMatrix{static_cast<int>(p.rows()), p};
}

inline double soft_threshold(double x, double tau) {
    if (tau < 0.0) throw parameter_error("soft_threshold: tau must be >= 0");
    const double m = std::abs(x) - tau;
    return m > 0.0 ? (x > 0.0 ? m : -m) : 0.0;
}

inline Matrix soft_threshold(const Matrix& m, double tau) {
    if (tau < 0.0) throw parameter_error("soft_threshold: tau must be >= 0");
    return m.unaryExpr([tau](double x) {
        const double v = std::abs(x) - tau;
        return v > 0.0 ? (x > 0.0 ? v : -v) : 0.0;
    });
}

inline Vector soft_threshold(const Vector& v, double tau) {
    if (tau < 0.0) throw parameter_error("soft_threshold: tau must be >= 0");
    return v.unaryExpr([tau](double x) {
        const double m = std::abs(x) - tau;
        return m > 0.0 ? (x > 0.0 ? m : -m) : 0.0;
    });
}

inline EdgeVector vec_upper(const AdjacencyMatrix& a) {
    EdgeVector e = EdgeVector::zero(a.n);
    int k = 0;
    for (int i = 0; i < a.n; ++i)
        for (int j = i + 1; j < a.n; ++j) e.w[k++] = a.w(i, j);
    return e;
}

/// Upper-triangle vectorization of any square matrix (used for distance
/// similarities feeding the smoothness solver).
inline Vector vec_upper(const Matrix& m) {
    if (m.rows() != m.cols()) throw dimension_error("vec_upper: square input required");
    const int n = static_cast<int>(m.rows());
    Vector v(EdgeVector::edge_count(n));
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) v[k++] = m(i, j);
    return v;
}

inline AdjacencyMatrix devec_upper(const EdgeVector& e) {
    if (e.w.size() != EdgeVector::edge_count(e.n))
        throw dimension_error("devec_upper: edge vector length != n(n-1)/2");
    Matrix m = Matrix::Zero(e.n, e.n);
    int k = 0;
    for (int i = 0; i < e.n; ++i)
        for (int j = i + 1; j < e.n; ++j) {
            m(i, j) = e.w[k];
            m(j, i) = e.w[k];
            ++k;
        }
    return AdjacencyMatrix{e.n, m};
}

/// Forward degree map d = Kw: d[i] = sum of weights of edges incident to i.
inline Vector degree_forward(int n, const Vector& w) {
    if (w.size() != EdgeVector::edge_count(n))
        throw dimension_error("degree_forward: edge vector length mismatch");
    Vector d = Vector::Zero(n);
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            d[i] += w[k];
            d[j] += w[k];
            ++k;
        }
    return d;
}

/// Adjoint degree map (K^T v)_{ij} = v_i + v_j.
inline Vector degree_adjoint(int n, const Vector& v) {
    if (v.size() != n)
        throw dimension_error("degree_adjoint: node vector length mismatch");
    Vector w(EdgeVector::edge_count(n));
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) w[k++] = v[i] + v[j];
    return w;
}

/// sum_i alpha[i] * A^i with A^0 = I.
inline Matrix matrix_polynomial(const AdjacencyMatrix& a, const Vector& alpha) {
    if (alpha.size() == 0)
        throw parameter_error("matrix_polynomial: empty coefficient vector");
    Matrix acc = alpha[0] * Matrix::Identity(a.n, a.n);
    Matrix power = Matrix::Identity(a.n, a.n);
    for (Eigen::Index i = 1; i < alpha.size(); ++i) {
        power = power * a.w;
        acc += alpha[i] * power;
    }
    return acc;
}

/// Deterministic symmetric eigendecomposition. Eigenvalues ascending; each
/// eigenvector's largest-magnitude component made positive (earliest index
/// wins ties).
inline EigenDecomposition sym_eig(const Matrix& m) {
    if (m.rows() != m.cols()) throw dimension_error("sym_eig: square input required");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw contract_error("sym_eig: input asymmetric beyond 1e-9");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    if (es.info() != Eigen::Success)
        throw numeric_error("sym_eig: eigendecomposition failed");
    EigenDecomposition d{es.eigenvectors(), es.eigenvalues()};
    for (Eigen::Index c = 0; c < d.u.cols(); ++c) {
        Eigen::Index imax = 0;
        double amax = -1.0;
        for (Eigen::Index r = 0; r < d.u.rows(); ++r) {
            const double a = std::abs(d.u(r, c));
            if (a > amax) {
                amax = a;
                imax = r;
            }
        }
        if (d.u(imax, c) < 0.0) d.u.col(c) = -d.u.col(c);
    }
    return d;
}

}  // namespace glearn
