#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "xdctrl/analysis.hpp"

using namespace xdctrl;

TEST_SUITE("analysis")
{
    TEST_CASE("bin-centred sinusoid peaks at A^2 / 2")
    {
        const double fs = 1e5, A = 3.0;
        const double f = 40.0 * fs / 4096.0;
        VectorXd x(1 << 16);
        for (Index k = 0; k < x.size(); ++k)
            x(k) = A * std::cos(2 * std::numbers::pi * f * static_cast<double>(k) / fs + 0.3);
        const auto s = power_spectrum(x);
        Index peak;
        s.power.col(0).maxCoeff(&peak);
        CHECK(peak == 40);
        CHECK(s.freqs(peak) == doctest::Approx(f));
        CHECK(s.power(peak, 0) == doctest::Approx(A * A / 2.0).epsilon(0.01));
        CHECK(s.normalized().maxCoeff() == doctest::Approx(1.0));
    }

    TEST_CASE("zero signal and short input")
    {
        const auto s = power_spectrum(MatrixXd::Zero(5000, 2));
        CHECK(s.power.norm() == 0.0);
        CHECK(s.normalized().norm() == 0.0);
        CHECK_THROWS_AS(power_spectrum(MatrixXd::Zero(100, 1)), DomainError);
        // shorter than a segment: one full-length segment
        CHECK(power_spectrum(MatrixXd::Ones(1000, 1)).freqs.size() == 501);
    }

    TEST_CASE("density scaling integrates to the mean square")
    {
        std::mt19937_64 rng(5);
        const VectorXd x = test::random_real(1 << 15, 1, rng);
        WelchConfig wc;
        wc.scaling = Scaling::density;
        const auto s = power_spectrum(x, wc);
        const double df = s.freqs(1) - s.freqs(0);
        CHECK(s.power.col(0).sum() * df == doctest::Approx(x.squaredNorm() / static_cast<double>(x.size())).epsilon(0.05));
    }

    TEST_CASE("integrated motion")
    {
        VectorXd f = VectorXd::LinSpaced(101, 0.0, 50.0);
        const auto ones = ibm_from_response(f, VectorXcd::Ones(101), VectorXd::Constant(101, 2.5));
        for (Index k = 0; k < f.size(); ++k)
            CHECK(ones.ibm(k) == doctest::Approx(2.5 * f(k)).epsilon(1e-14));
        const auto cut = cumulative_integral(f, VectorXd::Ones(101), 10.0);
        CHECK(cut.freqs.size() == 21);
        CHECK(ibm_from_trace(VectorXd::Zero(8192)).ibm.norm() == 0.0);
        CHECK_THROWS_AS(cumulative_integral(f, VectorXd::Ones(3), -1.0), ShapeError);
    }

    TEST_CASE("comparison on a zero disturbance and the default toy disturbance")
    {
        RingConfig rc;
        rc.n = 2;
        rc.n_y = rc.n_s = 3;
        rc.n_f = 1;
        const auto plant = generate_synthetic_ring(rc);
        const auto present = design_controller(plant, ControllerConfig{});
        const auto hyp = design_hypothetical(plant, ControllerConfig{});

        const auto zero = compare_controllers(present.controller, hyp.controller, MatrixXd::Zero(8192, 6), 3);
        CHECK(zero.present.ibm.norm() == 0.0);
        CHECK(zero.hypothetical.ibm.norm() == 0.0);
        CHECK(zero.open_loop.ibm.norm() == 0.0);
        CHECK(zero.ratio.maxCoeff() == 1.0);

        const MatrixXd D = synthesize_disturbance(plant.R_dense(), 1 << 16, 42);
        const auto c = compare_controllers(present.controller, hyp.controller, D, 3);
        const double r = c.ratio(c.ratio.size() - 1);
        CHECK(std::abs(r - 1.0) <= 0.15);
        CHECK_THROWS_AS(compare_controllers(present.controller, hyp.controller, D, 6), ShapeError);
    }

    TEST_CASE("exports")
    {
        const auto dir = test::scratch_dir("analysis_exports");
        SpectrumResult s;
        s.freqs = VectorXd::LinSpaced(3, 0.0, 2.0);
        s.power = MatrixXd::Ones(3, 2) * 4.0;
        s.normalization = 4.0;
        write_spectrum_csv(dir / "s.csv", s, {"a", "b"}, true);
        write_spectrum_dat(dir / "s.dat", s, {"a", "b"});
        std::ifstream csv(dir / "s.csv"), dat(dir / "s.dat");
        std::string line;
        std::getline(csv, line);
        CHECK(line == "freq_hz,a,b");
        std::getline(csv, line);
        CHECK(line == "0,1,1");
        std::getline(dat, line);
        CHECK(line == "# freq_hz a b");
        std::getline(dat, line);
        CHECK(line == "0 4 4");
    }
}
