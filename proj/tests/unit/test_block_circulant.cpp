#include "doctest.h"
#include "support.hpp"
#include "xdctrl/block_circulant.hpp"

using namespace xdctrl;
using xdctrl::test::random_real;
using xdctrl::test::rel_err;

namespace
{

MatrixXcd kron_identity(const MatrixXcd& F, Index p)
{
    MatrixXcd K = MatrixXcd::Zero(F.rows() * p, F.cols() * p);
    for (Index r = 0; r < F.rows(); ++r)
        for (Index c = 0; c < F.cols(); ++c)
            K.block(r * p, c * p, p, p) = F(r, c) * MatrixXcd::Identity(p, p);
    return K;
}

BlockCirculantMatrixd random_bcm(Index n, Index p, Index m, std::mt19937_64& rng)
{
    std::vector<MatrixXd> b;
    for (Index k = 0; k < n; ++k)
        b.push_back(random_real(p, m, rng));
    return BlockCirculantMatrixd(std::move(b));
}

} // namespace

TEST_SUITE("block_circulant")
{
    TEST_CASE("fourier matrix small cases")
    {
        CHECK(std::abs(fourier_matrix(1)(0, 0) - Complex(1, 0)) < 1e-15);
        const MatrixXcd F2 = fourier_matrix(2);
        const double s = 1.0 / std::sqrt(2.0);
        CHECK(std::abs(F2(0, 0) - s) < 1e-15);
        CHECK(std::abs(F2(0, 1) - s) < 1e-15);
        CHECK(std::abs(F2(1, 0) - s) < 1e-15);
        CHECK(std::abs(F2(1, 1) + s) < 1e-15);
        const MatrixXcd F6 = fourier_matrix(6);
        CHECK((F6.adjoint() * F6 - MatrixXcd::Identity(6, 6)).norm() < 1e-13);
        CHECK_THROWS_AS(fourier_matrix(0), DomainError);
    }

    TEST_CASE("identity has identity spectrum")
    {
        std::vector<MatrixXd> b{MatrixXd::Ones(1, 1), MatrixXd::Zero(1, 1), MatrixXd::Zero(1, 1)};
        const auto form = block_diagonalize(BlockCirculantMatrixd(b));
        for (const auto& beta : form.beta)
            CHECK(std::abs(beta(0, 0) - Complex(1, 0)) < 1e-15);
    }

    TEST_CASE("two-point DFT by hand")
    {
        std::vector<MatrixXd> b{MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1)};
        const BlockCirculantMatrixd B(b);
        const auto form = block_diagonalize(B);
        CHECK(std::abs(form.beta[0](0, 0) - Complex(2, 0)) < 1e-15);
        CHECK(std::abs(form.beta[1](0, 0)) < 1e-15);
        VectorXd x(2);
        x << 3, 5;
        const VectorXd y = bc_matvec_fft(B, x);
        CHECK(y(0) == doctest::Approx(8.0));
        CHECK(y(1) == doctest::Approx(8.0));
    }

    TEST_CASE("block diagonal form matches the dense triple product")
    {
        std::mt19937_64 rng(7);
        for (auto [n, p, m] : {std::tuple{6, 42, 66}, std::tuple{2, 2, 3}, std::tuple{5, 3, 1}})
        {
            const auto B = random_bcm(n, p, m, rng);
            const MatrixXcd F = fourier_matrix(n);
            const MatrixXcd oracle = kron_identity(F.adjoint(), p) * B.dense().cast<Complex>() * kron_identity(F, m);
            const auto form = block_diagonalize(B);
            CHECK(rel_err(form.dense(), oracle) < 1e-10);
            CHECK(rel_err(form.reconstruct(), MatrixXcd(B.dense().cast<Complex>())) < 1e-12);
        }
    }

    TEST_CASE("dense layout and structure validation")
    {
        std::mt19937_64 rng(3);
        const auto B = random_bcm(4, 2, 3, rng);
        const MatrixXd D = B.dense();
        for (Index r = 0; r < 4; ++r)
            for (Index c = 0; c < 4; ++c)
                CHECK(D.block(r * 2, c * 3, 2, 3) == B.block((c - r + 4) % 4));
        CHECK(BlockCirculantMatrixd::from_dense(D, 4).dense() == D);

        MatrixXd bad = D;
        bad(5, 1) += 1.0;
        try
        {
            (void)BlockCirculantMatrixd::from_dense(bad, 4);
            FAIL("expected StructureError");
        }
        catch (const StructureError& e)
        {
            CHECK(e.worst_block() == 2);
            CHECK(e.worst_deviation() > 0.0);
        }
        CHECK_THROWS_AS((void)BlockCirculantMatrixd::from_dense(D.leftCols(11), 4), ShapeError);
    }

    TEST_CASE("identity operator and shape errors")
    {
        std::vector<MatrixXd> b{MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2)};
        const BlockCirculantMatrixd I(b);
        std::mt19937_64 rng(1);
        const VectorXd x = random_real(6, 1, rng);
        CHECK((bc_matvec_fft(I, x) - x).norm() < 1e-14);
        CHECK_THROWS_AS(bc_matvec_fft(I, VectorXd(VectorXd::Zero(5))), ShapeError);
    }

    TEST_CASE("matvec against dense oracle, real and complex")
    {
        std::mt19937_64 rng(11);
        for (Index n : {1, 2, 3, 6, 17, 32})
        {
            const auto B = random_bcm(n, 4, 5, rng);
            const VectorXd x = random_real(n * 5, 1, rng);
            CHECK(rel_err(bc_matvec_fft(B, x), VectorXd(B.dense() * x)) < 1e-12);
        }
        const auto B = random_bcm(6, 42, 66, rng);
        const VectorXd x = random_real(6 * 66, 1, rng);
        CHECK(rel_err(bc_matvec_fft(B, x), VectorXd(B.dense() * x)) < 1e-10);

        std::vector<MatrixXcd> cb;
        for (int k = 0; k < 4; ++k)
            cb.push_back(test::random_complex(3, 2, rng));
        const BlockCirculantMatrix<Complex> C(cb);
        const VectorXcd xc = test::random_complex(8, 1, rng);
        CHECK(rel_err(bc_matvec_fft(C, xc), VectorXcd(C.dense() * xc)) < 1e-12);
    }

    TEST_CASE("hconcat joins block columns")
    {
        std::mt19937_64 rng(5);
        const auto A = random_bcm(3, 2, 2, rng);
        const auto B = random_bcm(3, 2, 1, rng);
        const auto H = hconcat(A, B);
        CHECK(H.block_cols() == 3);
        CHECK(H.block(2).rightCols(1) == B.block(2));
        CHECK(circulant_deviation(H.dense(), 3).absolute == 0.0);
    }

    TEST_CASE("speedup ratio by direct evaluation")
    {
        CHECK(speedup_ratio(8, 1, 1) == 56.0 / 64.0);
        CHECK(speedup_ratio(2, 1, 1) == 1.5);
        const double expect = (108.0 * 64.0 * 6.0 + 64.0 * 2772.0) / (4096.0 * 2772.0);
        CHECK(speedup_ratio(64, 42, 66) == doctest::Approx(expect).epsilon(1e-15));
        CHECK(speedup_ratio(64, 42, 66) == doctest::Approx(0.0192776).epsilon(1e-5));
        CHECK_THROWS_AS(speedup_ratio(6, 42, 66), DomainError);
        CHECK_THROWS_AS(speedup_ratio(0, 1, 1), DomainError);
    }

    TEST_CASE("benchmark: degenerate size is correct, large size tracks the operation count")
    {
        std::vector<MatrixXd> b{MatrixXd::Ones(1, 1), MatrixXd::Zero(1, 1)};
        const auto tiny = bench_matvec(BlockCirculantMatrixd(b), 20);
        CHECK(tiny.max_rel_error < 1e-14);  // reduction may be negative here

        std::mt19937_64 rng(2);
        const auto B = random_bcm(64, 8, 8, rng);
        const auto r = bench_matvec(B, 30);
        CHECK(r.max_rel_error < 1e-10);
        const double predicted = 1.0 - speedup_ratio(64, 8, 8);
        CHECK(r.reduction >= predicted / 3.0);
        CHECK(r.reduction <= 1.0);
    }
}
