#ifndef XDCTRL_MATRIX_IO_HPP
#define XDCTRL_MATRIX_IO_HPP

#include <cstdint>
#include <filesystem>

#include "xdctrl/block_circulant.hpp"

namespace xdctrl::io
{

// CSV: first line "<rows>,<cols>", then one row-major line per matrix row.
MatrixXd read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const MatrixXd& M);

// Binary: magic "BCM1", little-endian u32 n, p, m, then n*p*m float64
// values, block b_0 first; entries of each block in row-major order.
// General dense matrices are stored with n = 1.
BlockCirculantMatrixd read_bcm(const std::filesystem::path& path);
void write_bcm(const std::filesystem::path& path, const BlockCirculantMatrixd& B);

MatrixXd read_dense_bcm(const std::filesystem::path& path);
void write_dense_bcm(const std::filesystem::path& path, const MatrixXd& M);

/// Complex matrices as a pair of files <stem>_re.bcm and <stem>_im.bcm.
void write_complex_bcm(const std::filesystem::path& stem, const MatrixXcd& M);
MatrixXcd read_complex_bcm(const std::filesystem::path& stem);

/// Loads a block-circulant matrix from .bcm or .csv. CSV inputs are dense
/// and are checked for n-fold structure (relative tolerance rel_tol); the
/// thrown StructureError carries the worst deviation.
BlockCirculantMatrixd load_block_circulant(const std::filesystem::path& path, Index n, double rel_tol = 1e-9);

/// Dense matrix from .bcm (n must be 1, or the dense expansion is returned) or .csv.
MatrixXd load_dense(const std::filesystem::path& path);

} // namespace xdctrl::io

#endif // XDCTRL_MATRIX_IO_HPP
