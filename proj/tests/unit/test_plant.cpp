#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "xdctrl/plant.hpp"

using namespace xdctrl;
using test::rel_err;

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

RingConfig toy_config()
{
    RingConfig c;
    c.n = 2;
    c.n_y = 2;
    c.n_s = 2;
    c.n_f = 1;
    return c;
}

} // namespace

TEST_SUITE("plant")
{
    TEST_CASE("actuator response")
    {
        const ActuatorDynamics g{80.0, 7, 1e-5};
        CHECK(std::abs(actuator_response(g, 1.0) - Complex(1, 0)) < 1e-14);
        const Complex z = std::polar(1.0, 80.0 * 1e-5);
        CHECK(std::abs(actuator_response(g, z)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02));
        CHECK_THROWS_AS(actuator_response(g, Complex(g.pole(), 0)), DomainError);
        // the delay is part of the response
        const Complex expect = std::pow(z, -8) * (1.0 - g.pole()) / (1.0 - g.pole() / z);
        CHECK(std::abs(actuator_response(g, z) - expect) < 1e-12);
        CHECK(std::abs(g.transfer_function().eval(z) - expect) < 1e-12);
        CHECK_THROWS_AS((ActuatorDynamics{-1.0, 7, 1e-5}.validate()), DomainError);
    }

    TEST_CASE("degenerate single-sensor ring")
    {
        std::vector<MatrixXd> s{MatrixXd::Ones(1, 1)}, f{MatrixXd::Constant(1, 1, 0.3)};
        const auto p = make_plant(BlockCirculantMatrixd(s), BlockCirculantMatrixd(f), {}, {12000.0, 7, 1e-5});
        CHECK(p.n == 1);
        CHECK(p.N_u() == 2);
        const auto ff = fourier_decompose(p);
        CHECK(std::abs(ff.Rhat_s.beta[0](0, 0) - Complex(1, 0)) < 1e-15);
        CHECK(std::abs(ff.Rhat_f.beta[0](0, 0) - Complex(0.3, 0)) < 1e-15);
    }

    TEST_CASE("default synthetic ring")
    {
        const RingConfig c;
        const auto p = generate_synthetic_ring(c);
        CHECK(p.N_y() == 252);
        CHECK(p.N_s() == 252);
        CHECK(p.N_f() == 144);
        const MatrixXd Rs = p.R_s.dense();
        CHECK(circulant_deviation(Rs, 6).absolute == 0.0);
        CHECK(circulant_deviation(p.R_f.dense(), 6).absolute == 0.0);
        Eigen::JacobiSVD<MatrixXd> svd(p.R_dense());
        const VectorXd& sv = svd.singularValues();
        CHECK(sv(0) / sv(sv.size() - 1) >= 1e3);

        const auto again = generate_synthetic_ring(c);
        CHECK(again.R_s.dense() == Rs);
        CHECK(again.R_f.dense() == p.R_f.dense());
        RingConfig other = c;
        other.seed = 43;
        CHECK(generate_synthetic_ring(other).R_s.dense() != Rs);
    }

    TEST_CASE("Fourier form of the toy ring matches the dense triple product")
    {
        const auto p = generate_synthetic_ring(toy_config());
        const auto ff = fourier_decompose(p);
        const MatrixXcd F = fourier_matrix(2);
        const MatrixXcd oracle_s = kron_identity(F.adjoint(), 2) * p.R_s.dense().cast<Complex>() * kron_identity(F, 2);
        const MatrixXcd oracle_f = kron_identity(F.adjoint(), 2) * p.R_f.dense().cast<Complex>() * kron_identity(F, 1);
        CHECK(rel_err(ff.Rhat_s.dense(), oracle_s) <= 1e-10);
        CHECK(rel_err(ff.Rhat_f.dense(), oracle_f) <= 1e-10);
    }

    TEST_CASE("Fourier form at full scale")
    {
        const auto p = generate_synthetic_ring(RingConfig{});
        const auto ff = fourier_decompose(p);
        const MatrixXcd F = fourier_matrix(6);
        const MatrixXcd oracle = kron_identity(F.adjoint(), 42) * p.R_f.dense().cast<Complex>() * kron_identity(F, 24);
        CHECK(rel_err(ff.Rhat_f.dense(), oracle) <= 1e-9);
    }

    TEST_CASE("modal decomposition: substitution example and normalization")
    {
        BlockDiagonalForm s{1, 2, 2, {MatrixXcd::Identity(2, 2)}};
        MatrixXcd phi(2, 1);
        phi << 1, 0;
        BlockDiagonalForm f{1, 2, 1, {phi}};
        const auto ms = modal_decompose(s, f);
        const auto& c = ms.cells[0];
        CHECK(rel_err(MatrixXcd(c.X * c.S_s * c.U_s.adjoint()), s.beta[0]) <= 1e-12);
        CHECK(rel_err(MatrixXcd(c.X * c.S_f * c.U_f.adjoint()), phi) <= 1e-12);
        CHECK(std::abs(c.S_s(0, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
        CHECK(std::abs(c.S_f(0, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
        CHECK(ms.tiso_per_cell() == 1);
        CHECK(ms.siso_per_cell() == 1);

        const auto toy = generate_synthetic_ring(toy_config());
        const auto ff = fourier_decompose(toy);
        const auto mt = modal_decompose(ff.Rhat_s, ff.Rhat_f);
        const MatrixXcd Ss = mt.S_s(), Sf = mt.S_f();
        const Index N = Ss.rows();
        CHECK((Ss * Ss.adjoint() + Sf * Sf.adjoint() - MatrixXcd::Identity(N, N)).cwiseAbs().maxCoeff() <= 1e-10);
        for (Index i = 0; i < mt.n; ++i)
        {
            const auto& ci = mt.cells[static_cast<std::size_t>(i)];
            CHECK(rel_err(MatrixXcd(ci.X * ci.S_s * ci.U_s.adjoint()), ff.Rhat_s.beta[static_cast<std::size_t>(i)]) <=
                  1e-10);
            CHECK(rel_err(MatrixXcd(ci.X * ci.S_f * ci.U_f.adjoint()), ff.Rhat_f.beta[static_cast<std::size_t>(i)]) <=
                  1e-10);
        }
        CHECK(mt.mode_table().size() == 4);
    }

    TEST_CASE("failing cell is named")
    {
        BlockDiagonalForm s{3, 2, 2, {MatrixXcd::Identity(2, 2), MatrixXcd::Identity(2, 2), MatrixXcd::Identity(2, 2)}};
        s.beta[1](0, 1) = Complex(std::numeric_limits<double>::quiet_NaN(), 0);
        BlockDiagonalForm f{3, 2, 1, {MatrixXcd::Ones(2, 1), MatrixXcd::Ones(2, 1), MatrixXcd::Ones(2, 1)}};
        try
        {
            (void)modal_decompose(s, f);
            FAIL("expected CellError");
        }
        catch (const CellError& e)
        {
            CHECK(e.cell() == 1);
            CHECK(std::string(e.what()).find("cell 1") != std::string::npos);
        }
    }

    TEST_CASE("cell transform is unitary and inverted")
    {
        std::mt19937_64 rng(3);
        const VectorXcd x = test::random_complex(12, 1, rng);
        const MatrixXcd c = cell_transform(x, 4);
        CHECK(c.rows() == 3);
        CHECK(c.cols() == 4);
        CHECK(std::abs(c.norm() - x.norm()) < 1e-12);
        CHECK(rel_err(inverse_cell_transform(c), x) < 1e-14);
        // cell j of a pure cell-j exponential is the only nonzero one
        VectorXcd e(12);
        for (Index k = 0; k < 4; ++k)
            e.segment(k * 3, 3).setConstant(twiddle(k, 4));
        const MatrixXcd ce = cell_transform(e, 4);
        CHECK(ce.col(1).norm() == doctest::Approx(2.0 * std::sqrt(3.0)));
        CHECK(ce.col(0).norm() + ce.col(2).norm() + ce.col(3).norm() < 1e-12);
    }

    TEST_CASE("diagnostic modal disturbance")
    {
        const auto toy = generate_synthetic_ring(toy_config());
        const auto ff = fourier_decompose(toy);
        const auto ms = modal_decompose(ff.Rhat_s, ff.Rhat_f);
        std::mt19937_64 rng(8);
        const MatrixXcd dhat = test::random_complex(2, 2, rng);
        const auto md = modal_disturbance(ms, dhat);
        for (Index j = 0; j < 2; ++j)
            CHECK(rel_err(VectorXcd(ms.cells[static_cast<std::size_t>(j)].X * md.coeffs.col(j)), VectorXcd(dhat.col(j))) <
                  1e-10);
        CHECK_FALSE(md.ill_conditioned);
        CHECK(modal_disturbance(ms, dhat, 1.0).ill_conditioned);
    }

    TEST_CASE("ring configuration JSON")
    {
        const RingConfig c = toy_config();
        const auto back = RingConfig::from_json(c.to_json());
        CHECK(back.to_json() == c.to_json());
        CHECK_THROWS_AS(RingConfig::from_json(nlohmann::json{{"n", 2}, {"bogus", 1}}), ConfigError);
        CHECK_THROWS_AS(RingConfig::from_json(nlohmann::json{{"n_f", 50}}), ConfigError);
        try
        {
            (void)parse_json_text("{\n  \"n\": 2,\n  \"n_y\" 3\n}", "ring.json");
            FAIL("expected ConfigError");
        }
        catch (const ConfigError& e)
        {
            CHECK(std::string(e.what()).find("ring.json:3:") != std::string::npos);
        }
    }

    TEST_CASE("simulation plants")
    {
        const auto toy = generate_synthetic_ring(toy_config());
        const auto sp = to_sim_plant(toy);
        REQUIRE(sp.arrays.size() == 2);
        CHECK(sp.arrays[0].name == "slow");
        CHECK(sp.arrays[1].dyn.a == toy.dyn_f.a);
        const auto hp = hypothetical_plant(toy);
        REQUIRE(hp.arrays.size() == 1);
        for (Index k = 0; k < toy.n; ++k)
        {
            MatrixXd joined(toy.n_y, toy.n_s + toy.n_f);
            joined << toy.R_s.block(k), toy.R_f.block(k);
            CHECK(hp.arrays[0].R.block(k) == joined);
        }
        CHECK(hp.arrays[0].dyn.a == toy.dyn_f.a);
    }
}
