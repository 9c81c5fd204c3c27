#include "doctest.h"
#include "support.hpp"
#include "xdctrl/controller.hpp"

using namespace xdctrl;
using test::rel_err;

namespace
{

TwoArrayPlant toy_plant()
{
    RingConfig c;
    c.n = 2;
    c.n_y = 3;
    c.n_s = 3;
    c.n_f = 1;
    return generate_synthetic_ring(c);
}

Complex on_circle(double hz, double tau) { return std::polar(1.0, 2.0 * std::numbers::pi * hz * tau); }

} // namespace

TEST_SUITE("controller")
{
    TEST_CASE("closed-loop target poles")
    {
        const auto t = design_targets(100.0, 1400.0, 7, 1e-5);
        CHECK(t.T_s.pole() == doctest::Approx(0.99373).epsilon(1e-5));
        CHECK(t.T_f.pole() == doctest::Approx(0.91582).epsilon(1e-4));
        CHECK(std::abs(t.T_s.transfer_function().eval(1.0) - 1.0) < 1e-14);
        CHECK(t.T_f.transfer_function().delay == 8);
        CHECK_THROWS_AS(design_targets(1400.0, 100.0, 7, 1e-5), DesignError);
        CHECK_THROWS_AS(design_targets(100.0, 60000.0, 7, 1e-5), DesignError);
        CHECK_THROWS_AS(design_targets(0.0, 100.0, 7, 1e-5), DesignError);
    }

    TEST_CASE("mid-ranging filters")
    {
        const ActuatorDynamics gs{80.0, 7, 1e-5}, gf{12000.0, 7, 1e-5};
        const auto t = design_targets(100.0, 1400.0, 7, 1e-5);
        const auto f = synthesize_mode_controllers(gs, gf, t);
        CHECK(std::abs(f.Q_s.eval(1.0) - 1.0) < 1e-12);
        CHECK(std::abs(f.Q_f.eval(1.0)) <= 1e-10);
        CHECK(f.Q_s.is_stable());
        CHECK(f.Q_f.is_stable());
        const Complex z = on_circle(500.0, 1e-5);
        const Complex lhs = actuator_response(gs, z) * f.Q_s.eval(z) + actuator_response(gf, z) * f.Q_f.eval(z);
        CHECK(std::abs(lhs - t.T_f.transfer_function().eval(z)) <= 1e-9);
        CHECK(std::abs(mode_sensitivity(f, gs, gf, 1.0, 1.0, z) - (1.0 - t.T_f.response(2 * std::numbers::pi * 500.0))) <=
              1e-9);

        // a target delay shorter than the actuator delay cannot be realized
        const auto short_delay = design_targets(100.0, 1400.0, 3, 1e-5);
        CHECK_THROWS_AS(synthesize_mode_controllers(gs, gf, short_delay), SynthesisError);
    }

    TEST_CASE("regularized inverse")
    {
        MatrixXcd one = MatrixXcd::Ones(1, 1);
        CHECK(std::abs(regularized_inverse(one, one, 1.0)(0, 0) - 0.5) < 1e-15);
        for (double mu : {0.1, 1.0, 10.0})
            for (double s : {1e-3, 0.3, 1.0, 3.0, 100.0})
            {
                const MatrixXcd X = MatrixXcd::Constant(1, 1, s);
                const double k = regularized_inverse(X, one, mu)(0, 0).real();
                CHECK(k == doctest::Approx(s / (s * s + mu)).epsilon(1e-13));
                CHECK(k <= 1.0 / (2.0 * std::sqrt(mu)) + 1e-15);
            }
        CHECK_THROWS_AS(regularized_inverse(one, one, 0.0), DomainError);
        CHECK_THROWS_AS(regularized_inverse(one, MatrixXcd::Ones(2, 1), 1.0), ShapeError);

        std::mt19937_64 rng(4);
        const MatrixXcd X = test::random_complex(3, 3, rng);
        const MatrixXcd S = test::random_complex(3, 3, rng);
        const VectorXcd b = test::random_complex(3, 1, rng);
        const double mu = 0.7;
        MatrixXcd aug(6, 3);
        aug << X * S, std::sqrt(mu) * MatrixXcd::Identity(3, 3);
        VectorXcd rhs = VectorXcd::Zero(6);
        rhs.head(3) = b;
        const VectorXcd oracle = aug.householderQr().solve(rhs);
        CHECK(rel_err(VectorXcd(regularized_inverse(X, S, mu) * b), oracle) <= 1e-10);
    }

    TEST_CASE("configuration JSON")
    {
        ControllerConfig c;
        c.mu_f = 3.5;
        CHECK(ControllerConfig::from_json(c.to_json()).mu_f == 3.5);
        CHECK_THROWS_AS(ControllerConfig::from_json(nlohmann::json{{"lambda", 1}}), ConfigError);
        CHECK_THROWS_AS(ControllerConfig::from_json(nlohmann::json{{"mu_s", 0.0}}), ConfigError);
    }

    TEST_CASE("single-array ring reduces to classical IMC")
    {
        const double sigma = 2.0, mu = 0.5;
        std::vector<MatrixXd> s{MatrixXd::Constant(1, 1, sigma)};
        const auto plant = make_plant(BlockCirculantMatrixd(s), BlockCirculantMatrixd({MatrixXd(1, 0)}), {}, {});
        ControllerConfig cc;
        cc.mu_s = mu;
        const auto d = design_controller(plant, cc);
        CHECK(d.controller.paths().size() == 1);
        const double k = sigma * sigma / (sigma * sigma + mu);
        for (double hz : {0.0, 10.0, 300.0, 4000.0})
        {
            const Complex z = on_circle(hz, 1e-5);
            const Complex T = d.targets.T_s.response(2 * std::numbers::pi * hz);
            CHECK(std::abs(d.controller.cell_sensitivity(0, z)(0, 0) - (1.0 - k * T)) < 1e-12);
        }
    }

    TEST_CASE("exact inversion: TISO directions see 1 - T_f, the rest 1 - T_s")
    {
        const auto plant = toy_plant();
        ControllerConfig cc;
        cc.mu_s = cc.mu_f = 1e-12;
        const auto d = design_controller(plant, cc);
        for (double hz : {1.0, 50.0, 700.0, 3000.0, 20000.0})
        {
            const Complex z = on_circle(hz, 1e-5);
            const Complex Ts = d.targets.T_s.response(2 * std::numbers::pi * hz);
            const Complex Tf = d.targets.T_f.response(2 * std::numbers::pi * hz);
            for (Index j = 0; j < plant.n; ++j)
            {
                const MatrixXcd& phi = d.fourier.Rhat_f.beta[static_cast<std::size_t>(j)];
                const MatrixXcd P = phi * (phi.adjoint() * phi).inverse() * phi.adjoint();
                const MatrixXcd oracle = (1.0 - Ts) * MatrixXcd::Identity(3, 3) - (Tf - Ts) * P;
                const MatrixXcd S = d.controller.cell_sensitivity(j, z);
                CHECK((S - oracle).cwiseAbs().maxCoeff() < 1e-8);
                CHECK((S * phi - (1.0 - Tf) * phi).norm() < 1e-8 * phi.norm());
            }
        }
    }

    TEST_CASE("physical sensitivity equals the cell form conjugated by the Fourier transform")
    {
        RingConfig rc;
        rc.n = 4;
        rc.n_y = rc.n_s = 3;
        rc.n_f = 2;
        const auto plant = generate_synthetic_ring(rc);
        const auto d = design_controller(plant, ControllerConfig{});
        const Complex z = on_circle(230.0, 1e-5);
        const MatrixXcd F = fourier_matrix(4);
        MatrixXcd K = MatrixXcd::Zero(12, 12), D = MatrixXcd::Zero(12, 12);
        for (Index r = 0; r < 4; ++r)
        {
            D.block(r * 3, r * 3, 3, 3) = d.controller.cell_sensitivity(r, z);
            for (Index c = 0; c < 4; ++c)
                K.block(r * 3, c * 3, 3, 3) = F(r, c) * MatrixXcd::Identity(3, 3);
        }
        const MatrixXcd oracle = K * D * K.adjoint();
        CHECK(rel_err(d.controller.sensitivity(z), oracle) < 1e-12);
        // a real plant and controller give a real response at z = 1
        CHECK(d.controller.sensitivity(1.0).imag().norm() < 1e-9);
    }

    TEST_CASE("assembled paths and export round trip")
    {
        const auto plant = toy_plant();
        const auto d = design_controller(plant, ControllerConfig{});
        REQUIRE(d.controller.paths().size() == 2);
        const auto& fast = d.controller.path(1);
        CHECK(fast.channels == 3);
        CHECK(fast.active == 1);
        CHECK(fast.Xdag[0].bottomRows(2).norm() == 0.0);
        CHECK(d.gains.dense_s().rows() == 6);

        const auto dir = test::scratch_dir("controller_export");
        const auto files = export_controller(d.controller, &d, dir);
        CHECK(!files.empty());
        MidRangingController a = d.controller;
        MidRangingController b = load_controller(dir);
        std::mt19937_64 rng(1);
        std::vector<VectorXd> ua, ub;
        for (int k = 0; k < 50; ++k)
        {
            const VectorXd e = test::random_real(6, 1, rng);
            a.step(e, ua);
            b.step(e, ub);
        }
        for (std::size_t p = 0; p < ua.size(); ++p)
            CHECK((ua[p] - ub[p]).norm() <= 1e-12 * (1.0 + ua[p].norm()));
        CHECK_THROWS_AS(load_controller(dir / "nowhere"), ConfigError);
    }

    TEST_CASE("hypothetical comparator")
    {
        const auto plant = toy_plant();
        const auto h = design_hypothetical(plant, ControllerConfig{});
        CHECK(h.hypothetical);
        REQUIRE(h.controller.paths().size() == 1);
        CHECK(h.controller.path(0).actuators_per_cell() == 4);
        CHECK(std::abs(h.controller.path(0).Q.eval(1.0) - 1.0) < 1e-12);
    }
}
