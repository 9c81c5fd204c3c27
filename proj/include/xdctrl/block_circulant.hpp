#ifndef XDCTRL_BLOCK_CIRCULANT_HPP
#define XDCTRL_BLOCK_CIRCULANT_HPP

///
/// \file block_circulant.hpp
///
/// n-fold block-circulant matrices, their Fourier block-diagonal form and
/// FFT-structured matrix-vector products.
///
/// A matrix in BC(n, p, m) is stored by its first block-row b_0..b_{n-1}
/// (each p x m). Block (r, c) of the dense expansion is b_{(c - r) mod n}.
/// With the unitary Fourier matrix F_n,
///
///   (F_n^* (x) I_p) B (F_n (x) I_m) = blockdiag(beta_0, ..., beta_{n-1}),
///   beta_j = sum_k b_k exp(-2 pi i j k / n).
///
/// Common FFT routines are unscaled in the forward direction and scaled by
/// 1/n in the inverse direction; every routine here that exposes Fourier
/// coefficients of vectors uses the unitary 1/sqrt(n) convention instead.
///

#include <chrono>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "xdctrl/common.hpp"

namespace xdctrl
{

/// exp(-2 pi i k / n) with k reduced modulo n before evaluation.
inline Complex twiddle(Index k, Index n)
{
    Index r = k % n;
    if (r < 0)
        r += n;
    const double theta = -2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(n);
    return {std::cos(theta), std::sin(theta)};
}

/// Unitary Fourier matrix, entries n^{-1/2} w^{jk} with w = exp(-2 pi i / n).
inline MatrixXcd fourier_matrix(Index n)
{
    if (n < 1)
        throw DomainError("fourier_matrix: n must be >= 1");
    MatrixXcd F(n, n);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < n; ++k)
            F(j, k) = s * twiddle(j * k, n);
    return F;
}

/// Fourier block-diagonal form of a block-circulant matrix.
struct BlockDiagonalForm
{
    Index n = 0;
    Index p = 0;
    Index m = 0;
    std::vector<MatrixXcd> beta;

    /// blockdiag(beta_0, ..., beta_{n-1}), shape (n p) x (n m).
    MatrixXcd dense() const
    {
        MatrixXcd D = MatrixXcd::Zero(n * p, n * m);
        for (Index j = 0; j < n; ++j)
            D.block(j * p, j * m, p, m) = beta[static_cast<std::size_t>(j)];
        return D;
    }

    /// (F_n (x) I_p) blockdiag(beta) (F_n^* (x) I_m): the dense matrix whose
    /// diagonal form this is.
    MatrixXcd reconstruct() const
    {
        MatrixXcd D(n * p, n * m);
        for (Index r = 0; r < n; ++r)
            for (Index c = 0; c < n; ++c)
            {
                MatrixXcd acc = MatrixXcd::Zero(p, m);
                for (Index j = 0; j < n; ++j)
                    acc += twiddle(r * j - c * j, n) * beta[static_cast<std::size_t>(j)];
                D.block(r * p, c * m, p, m) = acc / static_cast<double>(n);
            }
        return D;
    }
};

/// Largest deviation of a dense matrix from n-fold block-circulant structure.
struct CirculantDeviation
{
    double absolute = 0.0;  ///< max |D(r,c) - b_{(c-r) mod n}| over entries
    double relative = 0.0;  ///< absolute / max |D|
    Index worst_block_row = 0;
};

template <typename Derived>
CirculantDeviation circulant_deviation(const Eigen::MatrixBase<Derived>& D, Index n)
{
    if (n < 1 || D.rows() % n != 0 || D.cols() % n != 0)
        throw ShapeError("circulant_deviation: dimensions are not divisible by n");
    const Index p = D.rows() / n;
    const Index m = D.cols() / n;
    CirculantDeviation dev;
    for (Index r = 1; r < n; ++r)
        for (Index c = 0; c < n; ++c)
        {
            const Index k = ((c - r) % n + n) % n;
            const double d = (D.block(r * p, c * m, p, m) - D.block(0, k * m, p, m)).cwiseAbs().maxCoeff();
            if (d > dev.absolute)
            {
                dev.absolute = d;
                dev.worst_block_row = r;
            }
        }
    const double scale = D.size() ? D.cwiseAbs().maxCoeff() : 0.0;
    dev.relative = scale > 0.0 ? dev.absolute / scale : dev.absolute;
    return dev;
}

///
/// ### BlockCirculantMatrix
///
/// \tparam Scalar  double or std::complex<double>.
///
template <typename Scalar>
class BlockCirculantMatrix
{
  public:
    using Block = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    BlockCirculantMatrix() = default;

    explicit BlockCirculantMatrix(std::vector<Block> blocks) : blocks_(std::move(blocks))
    {
        if (blocks_.empty())
            throw ShapeError("BlockCirculantMatrix: at least one block is required");
        const Index p = blocks_.front().rows();
        const Index m = blocks_.front().cols();
        // zero-column blocks represent an empty actuator array
        if (p < 1 || m < 0)
            throw ShapeError("BlockCirculantMatrix: blocks must have at least one row");
        for (const auto& b : blocks_)
            if (b.rows() != p || b.cols() != m)
                throw ShapeError("BlockCirculantMatrix: blocks have inconsistent shapes");
    }

    /// Extracts the first block-row after checking the circulant structure.
    static BlockCirculantMatrix from_dense(const Block& D, Index n, double rel_tol = 1e-9)
    {
        const auto dev = circulant_deviation(D, n);
        if (dev.relative > rel_tol)
            throw StructureError("matrix is not block-circulant: worst relative deviation " +
                                     std::to_string(dev.relative) + " in block-row " +
                                     std::to_string(dev.worst_block_row),
                                 dev.relative, dev.worst_block_row);
        const Index p = D.rows() / n;
        const Index m = D.cols() / n;
        std::vector<Block> blocks;
        blocks.reserve(static_cast<std::size_t>(n));
        for (Index k = 0; k < n; ++k)
            blocks.emplace_back(D.block(0, k * m, p, m));
        return BlockCirculantMatrix(std::move(blocks));
    }

    Index cells() const { return static_cast<Index>(blocks_.size()); }
    Index block_rows() const { return blocks_.empty() ? 0 : blocks_.front().rows(); }
    Index block_cols() const { return blocks_.empty() ? 0 : blocks_.front().cols(); }
    Index rows() const { return cells() * block_rows(); }
    Index cols() const { return cells() * block_cols(); }

    const Block& block(Index k) const { return blocks_.at(static_cast<std::size_t>(k)); }
    const std::vector<Block>& blocks() const { return blocks_; }

    Block dense() const
    {
        const Index n = cells();
        const Index p = block_rows();
        const Index m = block_cols();
        Block D(n * p, n * m);
        for (Index r = 0; r < n; ++r)
            for (Index c = 0; c < n; ++c)
                D.block(r * p, c * m, p, m) = blocks_[static_cast<std::size_t>(((c - r) % n + n) % n)];
        return D;
    }

    /// Horizontal concatenation [A B] of two matrices with equal cells and
    /// block rows; the result is again block-circulant.
    friend BlockCirculantMatrix hconcat(const BlockCirculantMatrix& A, const BlockCirculantMatrix& B)
    {
        if (A.cells() != B.cells() || A.block_rows() != B.block_rows())
            throw ShapeError("hconcat: incompatible block-circulant operands");
        std::vector<Block> blocks;
        for (Index k = 0; k < A.cells(); ++k)
        {
            Block b(A.block_rows(), A.block_cols() + B.block_cols());
            b << A.block(k), B.block(k);
            blocks.push_back(std::move(b));
        }
        return BlockCirculantMatrix(std::move(blocks));
    }

  private:
    std::vector<Block> blocks_;
};

using BlockCirculantMatrixd = BlockCirculantMatrix<double>;
using BlockCirculantMatrixcd = BlockCirculantMatrix<Complex>;

/// beta_j = sum_k b_k w^{jk}. For real input only beta_0..beta_{floor(n/2)}
/// are evaluated; the remaining blocks are conjugate mirrors, and beta_0
/// (and beta_{n/2} for even n) are exactly real.
template <typename Scalar>
BlockDiagonalForm block_diagonalize(const BlockCirculantMatrix<Scalar>& B)
{
    BlockDiagonalForm form;
    form.n = B.cells();
    form.p = B.block_rows();
    form.m = B.block_cols();
    const Index n = form.n;
    form.beta.assign(static_cast<std::size_t>(n), MatrixXcd::Zero(form.p, form.m));
    constexpr bool is_real = !Eigen::NumTraits<Scalar>::IsComplex;
    const Index last = is_real ? n / 2 : n - 1;
    for (Index j = 0; j <= last; ++j)
    {
        auto& beta = form.beta[static_cast<std::size_t>(j)];
        if (is_real && (j == 0 || 2 * j == n))
        {
            MatrixXd acc = MatrixXd::Zero(form.p, form.m);
            for (Index k = 0; k < n; ++k)
            {
                const double sign = (j == 0 || k % 2 == 0) ? 1.0 : -1.0;
                acc += sign * B.block(k).real();
            }
            beta = acc.template cast<Complex>();
            continue;
        }
        for (Index k = 0; k < n; ++k)
            beta += twiddle(j * k, n) * B.block(k).template cast<Complex>();
    }
    if constexpr (is_real)
        for (Index j = last + 1; j < n; ++j)
            form.beta[static_cast<std::size_t>(j)] = form.beta[static_cast<std::size_t>(n - j)].conjugate();
    return form;
}

///
/// Fourier-domain product operator for a real block-circulant matrix.
///
/// Computes B x as F^{-1}(B_hat F(x)). The input permutation is the
/// reshape of x (n blocks of length m) into an m x n column-major array,
/// so every row is one length-n sequence across cells. Only the
/// floor(n/2)+1 non-redundant Fourier cells are transformed and
/// multiplied. For small n the length-n transforms are evaluated as
/// products with precomputed twiddle matrices; for larger n with an FFT.
///
class CirculantOperator
{
  public:
    /// Scratch buffers for one caller; not shared between threads.
    struct Workspace
    {
        MatrixXd xr, xi, yr, yi, tr, ti;
        std::vector<double> rbuf;
        std::vector<Complex> cbuf;
        Eigen::FFT<double> fft{Eigen::FFT<double>::impl_type(), Eigen::FFT<double>::HalfSpectrum};
    };

    CirculantOperator() = default;

    explicit CirculantOperator(const BlockCirculantMatrixd& B, Index fft_threshold = 16)
        : n_(B.cells()), p_(B.block_rows()), m_(B.block_cols()), half_(B.cells() / 2 + 1),
          use_fft_(B.cells() > fft_threshold)
    {
        const auto form = block_diagonalize(B);
        beta_re_.reserve(static_cast<std::size_t>(half_));
        beta_im_.reserve(static_cast<std::size_t>(half_));
        for (Index j = 0; j < half_; ++j)
        {
            beta_re_.push_back(form.beta[static_cast<std::size_t>(j)].real());
            beta_im_.push_back(form.beta[static_cast<std::size_t>(j)].imag());
        }
        if (!use_fft_)
        {
            fwd_cos_.resize(n_, half_);
            fwd_sin_.resize(n_, half_);
            inv_cos_.resize(half_, n_);
            inv_sin_.resize(half_, n_);
            for (Index k = 0; k < n_; ++k)
                for (Index j = 0; j < half_; ++j)
                {
                    const Complex w = twiddle(j * k, n_);
                    fwd_cos_(k, j) = w.real();
                    fwd_sin_(k, j) = w.imag();
                    const double weight = (j == 0 || 2 * j == n_ ? 1.0 : 2.0) / static_cast<double>(n_);
                    inv_cos_(j, k) = weight * w.real();
                    inv_sin_(j, k) = -weight * w.imag();
                }
        }
    }

    Index rows() const { return n_ * p_; }
    Index cols() const { return n_ * m_; }
    Index cells() const { return n_; }

    VectorXd apply(const Eigen::Ref<const VectorXd>& x) const
    {
        Workspace ws;
        VectorXd y(rows());
        apply(x, y, ws);
        return y;
    }

    void apply(const Eigen::Ref<const VectorXd>& x, Eigen::Ref<VectorXd> y, Workspace& ws) const
    {
        if (x.size() != cols() || y.size() != rows())
            throw ShapeError("CirculantOperator: vector length does not match operator shape");
        Eigen::Map<const MatrixXd> xp(x.data(), m_, n_);
        Eigen::Map<MatrixXd> yp(y.data(), p_, n_);

        // forward transform along cells: X_j = sum_k x_k exp(-2 pi i jk/n)
        ws.xr.resize(m_, half_);
        ws.xi.resize(m_, half_);
        if (use_fft_)
        {
            ws.rbuf.resize(static_cast<std::size_t>(n_));
            ws.cbuf.resize(static_cast<std::size_t>(n_));
            for (Index i = 0; i < m_; ++i)
            {
                for (Index k = 0; k < n_; ++k)
                    ws.rbuf[static_cast<std::size_t>(k)] = xp(i, k);
                ws.fft.fwd(ws.cbuf.data(), ws.rbuf.data(), n_);
                for (Index j = 0; j < half_; ++j)
                {
                    ws.xr(i, j) = ws.cbuf[static_cast<std::size_t>(j)].real();
                    ws.xi(i, j) = ws.cbuf[static_cast<std::size_t>(j)].imag();
                }
            }
        }
        else
        {
            ws.xr.noalias() = xp * fwd_cos_;
            ws.xi.noalias() = xp * fwd_sin_;
        }

        // Y_j = conj(beta_j) X_j (the reversed-index block for real B)
        ws.yr.resize(p_, half_);
        ws.yi.resize(p_, half_);
        for (Index j = 0; j < half_; ++j)
        {
            const auto& br = beta_re_[static_cast<std::size_t>(j)];
            if (j == 0 || 2 * j == n_)
            {
                ws.yr.col(j).noalias() = br * ws.xr.col(j);
                ws.yi.col(j).setZero();
                continue;
            }
            const auto& bi = beta_im_[static_cast<std::size_t>(j)];
            ws.yr.col(j).noalias() = br * ws.xr.col(j);
            ws.yr.col(j).noalias() += bi * ws.xi.col(j);
            ws.yi.col(j).noalias() = br * ws.xi.col(j);
            ws.yi.col(j).noalias() -= bi * ws.xr.col(j);
        }

        if (use_fft_)
        {
            for (Index i = 0; i < p_; ++i)
            {
                for (Index j = 0; j < half_; ++j)
                    ws.cbuf[static_cast<std::size_t>(j)] = Complex(ws.yr(i, j), ws.yi(i, j));
                ws.fft.inv(ws.rbuf.data(), ws.cbuf.data(), n_);
                for (Index k = 0; k < n_; ++k)
                    yp(i, k) = ws.rbuf[static_cast<std::size_t>(k)];
            }
        }
        else
        {
            yp.noalias() = ws.yr * inv_cos_;
            yp.noalias() -= ws.yi * inv_sin_;
        }
    }

  private:
    Index n_ = 0, p_ = 0, m_ = 0, half_ = 0;
    bool use_fft_ = false;
    std::vector<MatrixXd> beta_re_, beta_im_;
    MatrixXd fwd_cos_, fwd_sin_, inv_cos_, inv_sin_;
};

/// Dense-equivalent product B x evaluated through the Fourier domain.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1>
bc_matvec_fft(const BlockCirculantMatrix<Scalar>& B, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x)
{
    if (x.size() != B.cols())
        throw ShapeError("bc_matvec_fft: x has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(B.cols()));
    if constexpr (!Eigen::NumTraits<Scalar>::IsComplex)
    {
        return CirculantOperator(B).apply(x);
    }
    else
    {
        // complex blocks: no conjugate redundancy, full spectrum
        const Index n = B.cells(), p = B.block_rows(), m = B.block_cols();
        const auto form = block_diagonalize(B);
        MatrixXcd F(n, n);
        for (Index j = 0; j < n; ++j)
            for (Index k = 0; k < n; ++k)
                F(j, k) = twiddle(j * k, n);
        Eigen::Map<const MatrixXcd> xp(x.data(), m, n);
        const MatrixXcd X = xp * F.conjugate();  // X_j = sum_k x_k w^{-jk}
        MatrixXcd Y(p, n);
        for (Index j = 0; j < n; ++j)
            Y.col(j) = form.beta[static_cast<std::size_t>(j)] * X.col(j);
        const MatrixXcd yp = Y * F / static_cast<double>(n);
        return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(yp.data(), n * p);
    }
}

/// Operation-count ratio of the Fourier-domain product against the dense
/// product for n a power of two: ((m+p) n log2 n + n m p) / (n^2 m p).
inline double speedup_ratio(Index n, Index p, Index m)
{
    if (n < 1 || p < 1 || m < 1)
        throw DomainError("speedup_ratio: dimensions must be positive");
    if ((n & (n - 1)) != 0)
        throw DomainError("speedup_ratio: n must be a power of 2");
    const double nd = static_cast<double>(n);
    const double pd = static_cast<double>(p);
    const double md = static_cast<double>(m);
    const double log2n = std::log2(nd);
    return ((md + pd) * nd * log2n + nd * md * pd) / (nd * nd * md * pd);
}

struct BenchResult
{
    double t_dense = 0.0;    ///< median seconds per dense product
    double t_fft = 0.0;      ///< median seconds per Fourier-domain product
    double t_reshape = 0.0;  ///< median seconds for an explicit interleaved-to-planar copy of x and y
    double reduction = 0.0;  ///< 1 - t_fft / t_dense
    double max_rel_error = 0.0;
};

/// Times dense vs Fourier-domain products on identical seeded inputs.
BenchResult bench_matvec(const BlockCirculantMatrixd& B, int trials, unsigned seed = 1);

} // namespace xdctrl

#endif // XDCTRL_BLOCK_CIRCULANT_HPP
