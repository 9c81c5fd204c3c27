#ifndef XDCTRL_GSVD_HPP
#define XDCTRL_GSVD_HPP

///
/// \file gsvd.hpp
///
/// Generalized singular value decomposition of a pair (A, B), A q x q and
/// B q x m with m < q,
///
///   A = X diag(S_A, I_{q-m}) U_A^H,    B = X [S_B; 0] U_B^H,
///
/// with S_A^2 + S_B^2 = I_m, unitary U_A, U_B and a shared left factor X.
/// The factorization is built from the SVD of the stacked matrix
/// C = [A^H; B^H] = Q [Sigma; 0] Psi^H followed by a CS decomposition of
/// the orthonormal columns of Q, and X = Psi Sigma V.
///
/// Output ordering: S_B descending. Sign convention: the largest-magnitude
/// entry of each column of U_B is real and positive.
///

#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "xdctrl/common.hpp"

namespace xdctrl
{

template <typename Scalar>
using DynMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// S_A split point below which U_A columns come from orthogonal completion
/// instead of division by S_A.
inline constexpr double cs_split_threshold = 0.70710678118654752440;

template <typename Scalar>
struct CsFactors
{
    DynMatrix<Scalar> U_A;  ///< q x q unitary
    DynMatrix<Scalar> U_B;  ///< m x m unitary
    VectorXd S_A;           ///< length m, cosines
    VectorXd S_B;           ///< length m, sines, descending
    DynMatrix<Scalar> V;    ///< r x r unitary
};

///
/// CS decomposition of a stacked matrix [Q11; Q21] (Q11 q x r, Q21 m x r)
/// with orthonormal columns:
///
///   Q11 = U_A D_A V^H,  Q21 = U_B D_B V^H,
///
/// where D_A is the leading q x r part of diag(S_A, I_{q-m}) and D_B the
/// leading m x r part of [diag(S_B) 0].
///
template <typename Scalar>
CsFactors<Scalar> cs_decompose(const DynMatrix<Scalar>& Q11, const DynMatrix<Scalar>& Q21,
                               double split = cs_split_threshold)
{
    using Matrix = DynMatrix<Scalar>;
    const Index q = Q11.rows();
    const Index r = Q11.cols();
    const Index m = Q21.rows();
    if (Q21.cols() != r || r > q || r < 1)
        throw ShapeError("cs_decompose: Q11 must be q x r and Q21 m x r with 1 <= r <= q");

    {
        const Matrix gram = Q11.adjoint() * Q11 + Q21.adjoint() * Q21;
        const double res = (gram - Matrix::Identity(r, r)).cwiseAbs().maxCoeff();
        if (!(res <= 1e-8))
            throw PreconditionError("cs_decompose: stacked input does not have orthonormal columns (residual " +
                                    std::to_string(res) + ")");
    }

    CsFactors<Scalar> cs;
    const Index k = std::min(m, r);
    cs.S_B = VectorXd::Zero(m);
    if (m == 0)
    {
        cs.U_B.resize(0, 0);
        cs.V = Matrix::Identity(r, r);
    }
    else
    {
        Eigen::JacobiSVD<Matrix> svd(Q21, Eigen::ComputeFullU | Eigen::ComputeFullV);
        cs.U_B = svd.matrixU();
        cs.V = svd.matrixV();
        cs.S_B.head(k) = svd.singularValues().head(k).cwiseMin(1.0);
        for (Index j = 0; j < m; ++j)
        {
            Index imax = 0;
            cs.U_B.col(j).cwiseAbs().maxCoeff(&imax);
            const Scalar pivot = cs.U_B(imax, j);
            const double mag = std::abs(pivot);
            if (mag == 0.0)
                continue;
            const Scalar phase = Eigen::numext::conj(pivot) / mag;
            cs.U_B.col(j) *= phase;
            if (j < k)
                cs.V.col(j) *= phase;
        }
    }
    cs.S_A = (1.0 - cs.S_B.array().square()).max(0.0).sqrt().matrix();

    // W = Q11 V has orthogonal columns with norms d_j
    const Matrix W = Q11 * cs.V;
    auto d = [&](Index j) { return j < m ? cs.S_A(j) : 1.0; };

    cs.U_A = Matrix::Zero(q, q);
    std::vector<Index> stable, unstable;
    for (Index j = 0; j < r; ++j)
        (d(j) >= split ? stable : unstable).push_back(j);
    // largest cosine first when completing
    std::sort(unstable.begin(), unstable.end(), [&](Index a, Index b) { return d(a) > d(b); });

    const Index ks = static_cast<Index>(stable.size());
    Matrix Ustable(q, ks);
    for (Index t = 0; t < ks; ++t)
        Ustable.col(t) = W.col(stable[static_cast<std::size_t>(t)]) / d(stable[static_cast<std::size_t>(t)]);
    for (Index t = 0; t < ks; ++t)
        cs.U_A.col(stable[static_cast<std::size_t>(t)]) = Ustable.col(t);

    if (ks < q)
    {
        Matrix N;
        if (ks == 0)
        {
            N = Matrix::Identity(q, q);
        }
        else
        {
            Eigen::HouseholderQR<Matrix> qr(Ustable);
            const Matrix Qh = qr.householderQ();
            N = Qh.rightCols(q - ks);
        }
        const Index ku = static_cast<Index>(unstable.size());
        Matrix P(N.cols(), ku);
        for (Index t = 0; t < ku; ++t)
            P.col(t) = N.adjoint() * W.col(unstable[static_cast<std::size_t>(t)]);
        Matrix Qp = Matrix::Identity(N.cols(), N.cols());
        Matrix R;
        if (ku > 0)
        {
            Eigen::HouseholderQR<Matrix> qr(P);
            Qp = qr.householderQ();
            R = qr.matrixQR().template triangularView<Eigen::Upper>();
        }
        const Matrix basis = N * Qp;
        for (Index t = 0; t < ku; ++t)
        {
            const Scalar rt = R(t, t);
            const double mag = std::abs(rt);
            const Scalar phase = mag > 0.0 ? rt / mag : Scalar(1);
            cs.U_A.col(unstable[static_cast<std::size_t>(t)]) = basis.col(t) * phase;
        }
        for (Index t = ku; t < basis.cols(); ++t)
            cs.U_A.col(r + (t - ku)) = basis.col(t);
    }
    return cs;
}

template <typename Scalar>
struct GsvdFactors
{
    using Matrix = DynMatrix<Scalar>;

    Index q = 0;
    Index m = 0;
    Index rank_C = 0;
    Matrix X;    ///< q x q; columns beyond rank_C are zero
    Matrix U_A;  ///< q x q
    Matrix U_B;  ///< m x m
    VectorXd S_A;
    VectorXd S_B;

    // intermediates of the construction
    Matrix Q;         ///< (q+m) x rank_C retained left singular vectors of C
    VectorXd Sigma;   ///< all q singular values of C, descending
    Matrix Psi;       ///< q x q right singular vectors of C
    Matrix V;         ///< rank_C x rank_C

    Matrix Q11() const { return Q.topRows(q); }
    Matrix Q21() const { return Q.bottomRows(m); }

    /// diag(S_A, I_{q-m})
    Matrix core_A() const
    {
        Matrix D = Matrix::Identity(q, q);
        for (Index j = 0; j < m; ++j)
            D(j, j) = S_A(j);
        return D;
    }

    /// [S_B; 0], q x m
    Matrix core_B() const
    {
        Matrix D = Matrix::Zero(q, m);
        for (Index j = 0; j < m; ++j)
            D(j, j) = S_B(j);
        return D;
    }

    Matrix reconstruct_A() const { return X * core_A() * U_A.adjoint(); }
    Matrix reconstruct_B() const { return X * core_B() * U_B.adjoint(); }
};

///
/// Generalized SVD of (A, B). Singular values of C below rank_tol are
/// discarded together with their columns of Q; the default tolerance is
/// (q+m) * eps * sigma_max.
///
template <typename Scalar>
GsvdFactors<Scalar> gsvd(const DynMatrix<Scalar>& A, const DynMatrix<Scalar>& B,
                         std::optional<double> rank_tol = std::nullopt)
{
    using Matrix = DynMatrix<Scalar>;
    const Index q = A.rows();
    const Index m = B.cols();
    if (A.cols() != q || B.rows() != q)
        throw ShapeError("gsvd: A must be q x q and B q x m");
    if (m >= q)
        throw ShapeError("gsvd: requires m < q (got m = " + std::to_string(m) + ", q = " + std::to_string(q) + ")");
    if (!A.allFinite() || !B.allFinite())
        throw DomainError("gsvd: non-finite input");

    Matrix C(q + m, q);
    C.topRows(q) = A.adjoint();
    if (m > 0)
        C.bottomRows(m) = B.adjoint();

    Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeThinU | Eigen::ComputeFullV);

    GsvdFactors<Scalar> f;
    f.q = q;
    f.m = m;
    f.Sigma = svd.singularValues();
    f.Psi = svd.matrixV();
    const double smax = f.Sigma.size() ? f.Sigma(0) : 0.0;
    const double tol = rank_tol.value_or(static_cast<double>(q + m) * std::numeric_limits<double>::epsilon() * smax);
    Index r = 0;
    while (r < q && f.Sigma(r) > tol)
        ++r;
    if (r == 0)
        throw DomainError("gsvd: the stacked matrix [A^H; B^H] is numerically zero");
    f.rank_C = r;
    f.Q = svd.matrixU().leftCols(r);

    const Matrix Q11 = f.Q.topRows(q);
    const Matrix Q21 = f.Q.bottomRows(m);
    auto cs = cs_decompose<Scalar>(Q11, Q21);
    f.U_A = std::move(cs.U_A);
    f.U_B = std::move(cs.U_B);
    f.S_A = std::move(cs.S_A);
    f.S_B = std::move(cs.S_B);
    f.V = std::move(cs.V);

    f.X = Matrix::Zero(q, q);
    f.X.leftCols(r) = f.Psi.leftCols(r) * f.Sigma.head(r).asDiagonal() * f.V;
    return f;
}

struct ConditionReport
{
    double cond_X = 0.0;
    VectorXd sv_concat;
};

/// The singular values of X are those of C = [A^H; B^H], so
/// cond(X) = max(Sigma) / min(Sigma); infinite when C is rank deficient.
template <typename Scalar>
ConditionReport condition_report(const GsvdFactors<Scalar>& f)
{
    ConditionReport rep;
    rep.sv_concat = f.Sigma;
    const double smin = f.Sigma.minCoeff();
    rep.cond_X = (f.rank_C < f.q || smin <= 0.0) ? std::numeric_limits<double>::infinity() : f.Sigma.maxCoeff() / smin;
    return rep;
}

} // namespace xdctrl

#endif // XDCTRL_GSVD_HPP
