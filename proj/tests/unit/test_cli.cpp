#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"
#include "xdctrl/cli.hpp"
#include "xdctrl/matrix_io.hpp"

using namespace xdctrl;
namespace fs = std::filesystem;

namespace
{

struct Result
{
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args)
{
    args.insert(args.begin(), "xdctrl");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path write_toy_config(const fs::path& dir)
{
    std::ofstream(dir / "toy.json") << R"({"n": 2, "n_y": 3, "n_s": 3, "n_f": 1})";
    return dir / "toy.json";
}

std::size_t count(const std::string& s, const std::string& what)
{
    std::size_t n = 0;
    for (auto pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + 1))
        ++n;
    return n;
}

} // namespace

TEST_SUITE("cli")
{
    TEST_CASE("gen-ring writes valid circulant responses")
    {
        const auto dir = test::scratch_dir("cli_gen");
        REQUIRE(run({"gen-ring", "--out", (dir / "a").string()}).code == cli::ok);
        const auto Rs = io::load_block_circulant(dir / "a" / "R_s.bcm", 6);
        const auto Rf = io::load_block_circulant(dir / "a" / "R_f.bcm", 6);
        CHECK(Rs.block_rows() == 42);
        CHECK(Rf.block_cols() == 24);
        REQUIRE(run({"gen-ring", "--out", (dir / "b").string(), "--seed", "7"}).code == cli::ok);
        const auto Rs7 = io::load_block_circulant(dir / "b" / "R_s.bcm", 6);
        CHECK(Rs7.rows() == Rs.rows());
        CHECK(Rs7.dense() != Rs.dense());
    }

    TEST_CASE("malformed JSON is a usage error with a position")
    {
        const auto dir = test::scratch_dir("cli_badjson");
        std::ofstream(dir / "bad.json") << "{\n  \"n\": 2,\n  \"n_y\": ,\n}";
        const auto r = run({"gen-ring", "--config", (dir / "bad.json").string(), "--out", (dir / "o").string()});
        CHECK(r.code == cli::usage_error);
        CHECK(r.err.find("bad.json:3:") != std::string::npos);
    }

    TEST_CASE("design reports the channel split")
    {
        const auto dir = test::scratch_dir("cli_design");
        REQUIRE(run({"gen-ring", "--config", write_toy_config(dir).string(), "--out", (dir / "ring").string()}).code ==
                cli::ok);
        const auto r = run({"design", "--ring", (dir / "ring").string(), "--out", (dir / "ctl").string()});
        REQUIRE(r.code == cli::ok);
        CHECK(count(r.out, "TISO") == 2 * 1 + 1);  // header plus one row per cell
        CHECK(count(r.out, "SISO") == 2 * 2 + 1);
        CHECK(fs::exists(dir / "ctl" / "controller.json"));
        CHECK(fs::exists(dir / "ctl" / "modes.csv"));
        CHECK(run({"verify", "--manifest", (dir / "ctl" / "manifest.json").string()}).code == cli::ok);

        const auto h = run({"design", "--ring", (dir / "ring").string(), "--out", (dir / "hyp").string(),
                            "--hypothetical"});
        CHECK(h.code == cli::ok);
        CHECK(h.out.find("hypothetical") != std::string::npos);

        std::ofstream(dir / "lam.json") << R"({"lambda_s_hz": 2000, "lambda_f_hz": 1400})";
        CHECK(run({"design", "--ring", (dir / "ring").string(), "--controller", (dir / "lam.json").string(), "--out",
                   (dir / "x").string()})
                  .code == cli::usage_error);
    }

    TEST_CASE("full-scale design: 24 TISO and 18 SISO per cell")
    {
        const auto dir = test::scratch_dir("cli_full");
        REQUIRE(run({"gen-ring", "--out", (dir / "ring").string()}).code == cli::ok);
        const auto r = run({"design", "--ring", (dir / "ring").string(), "--out", (dir / "ctl").string()});
        REQUIRE(r.code == cli::ok);
        std::ifstream modes(dir / "ctl" / "modes.csv");
        std::string line;
        std::getline(modes, line);
        std::size_t tiso = 0, siso = 0;
        while (std::getline(modes, line))
        {
            tiso += line.find("TISO") != std::string::npos;
            siso += line.find("SISO") != std::string::npos;
        }
        CHECK(tiso == 24 * 6);
        CHECK(siso == 18 * 6);
    }

    TEST_CASE("GSVD failure names the cell")
    {
        const auto dir = test::scratch_dir("cli_cell");
        REQUIRE(run({"gen-ring", "--config", write_toy_config(dir).string(), "--out", (dir / "ring").string()}).code ==
                cli::ok);
        auto Rs = io::read_bcm(dir / "ring" / "R_s.bcm");
        std::vector<MatrixXd> b{Rs.block(0), Rs.block(1)};
        b[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
        io::write_bcm(dir / "ring" / "R_s.bcm", BlockCirculantMatrixd(b));
        const auto r = run({"design", "--ring", (dir / "ring").string(), "--out", (dir / "ctl").string()});
        CHECK(r.code == cli::numerical_failure);
        CHECK(r.err.find("cell") != std::string::npos);
    }

    TEST_CASE("simulate, analyze and verify")
    {
        const auto dir = test::scratch_dir("cli_sim");
        const auto ring = (dir / "ring").string(), ctl = (dir / "ctl").string(), sim = (dir / "sim").string();
        REQUIRE(run({"gen-ring", "--config", write_toy_config(dir).string(), "--out", ring}).code == cli::ok);
        REQUIRE(run({"design", "--ring", ring, "--out", ctl}).code == cli::ok);
        CHECK(run({"simulate", "--ring", ring, "--controller", ctl, "--steps", "0", "--out", sim}).code ==
              cli::usage_error);
        REQUIRE(run({"simulate", "--ring", ring, "--controller", ctl, "--steps", "5000", "--out", sim}).code == cli::ok);
        const MatrixXd y = io::read_dense_bcm(dir / "sim" / "y.bcm");
        CHECK(y.rows() == 5000);
        CHECK(y.allFinite());
        std::ifstream mf(dir / "sim" / "manifest.json");
        const auto m = nlohmann::json::parse(mf);
        CHECK(m.at("config").at("steps") == 5000);
        CHECK(m.at("outputs").size() == 3);

        CHECK(run({"analyze", "--trace", sim, "--mode", "spectra", "--out", (dir / "sp").string()}).code == cli::ok);
        CHECK(fs::exists(dir / "sp" / "spectra.csv"));
        CHECK(run({"analyze", "--trace", sim, "--mode", "ibm", "--out", (dir / "ibm").string()}).code == cli::ok);
        CHECK(run({"analyze", "--trace", sim, "--mode", "bogus", "--out", (dir / "x").string()}).code ==
              cli::usage_error);

        CHECK(run({"verify", "--manifest", (dir / "sim" / "manifest.json").string()}).code == cli::ok);
        std::ofstream(dir / "sim" / "y.bcm", std::ios::app) << "x";
        CHECK(run({"verify", "--manifest", (dir / "sim" / "manifest.json").string()}).code == cli::verify_failed);
    }

    TEST_CASE("bench and usage errors")
    {
        const auto r = run({"bench", "--n", "8", "--p", "4", "--m", "4", "--trials", "5"});
        CHECK(r.code == cli::ok);
        CHECK(r.out.find("predicted_ratio") != std::string::npos);
        CHECK(run({}).code == cli::usage_error);
        CHECK(run({"frobnicate"}).code == cli::usage_error);
        CHECK(run({"design"}).code == cli::usage_error);
        CHECK(run({"--help"}).code == cli::ok);
    }
}
