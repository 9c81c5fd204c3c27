#include "xdctrl/cli.hpp"

#include <fstream>
#include <iomanip>
#include <random>

#include "CLI11.hpp"
#include "xdctrl/analysis.hpp"
#include "xdctrl/manifest.hpp"
#include "xdctrl/matrix_io.hpp"

namespace xdctrl::cli
{

namespace fs = std::filesystem;

namespace
{

struct RingFiles
{
    RingConfig config;
    TwoArrayPlant plant;
};

fs::path response_file(const fs::path& dir, const std::string& stem)
{
    if (fs::exists(dir / (stem + ".bcm")))
        return dir / (stem + ".bcm");
    if (fs::exists(dir / (stem + ".csv")))
        return dir / (stem + ".csv");
    throw ConfigError("ring directory " + dir.string() + " has no " + stem + ".bcm or " + stem + ".csv");
}

RingFiles load_ring(const fs::path& dir)
{
    RingFiles r;
    r.config = load_ring_config(dir / "ring.json");
    auto Rs = io::load_block_circulant(response_file(dir, "R_s"), r.config.n);
    auto Rf = io::load_block_circulant(response_file(dir, "R_f"), r.config.n);
    r.plant = make_plant(std::move(Rs), std::move(Rf), r.config.dyn_s(), r.config.dyn_f());
    if (r.plant.n_y != r.config.n_y || r.plant.n_s != r.config.n_s || r.plant.n_f != r.config.n_f)
        throw ConfigError("ring.json dimensions do not match the response files in " + dir.string());
    return r;
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::string file_hash_or_empty(const fs::path& p)
{
    return fs::exists(p) ? sha256_file(p) : std::string();
}

// ---------------------------------------------------------------- gen-ring

struct GenRingArgs
{
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int cmd_gen_ring(const GenRingArgs& a, std::ostream& out)
{
    RunManifest m;
    m.command = "gen-ring";
    m.started = utc_timestamp();
    RingConfig cfg = a.config.empty() ? RingConfig{} : load_ring_config(a.config);
    if (a.seed)
        cfg.seed = *a.seed;
    cfg.validate();
    const auto plant = generate_synthetic_ring(cfg);

    const fs::path dir = a.out;
    fs::create_directories(dir);
    write_json(dir / "ring.json", cfg.to_json());
    io::write_bcm(dir / "R_s.bcm", plant.R_s);
    io::write_bcm(dir / "R_f.bcm", plant.R_f);
    const nlohmann::json dyn = {{"slow", {{"a", plant.dyn_s.a}, {"mu", plant.dyn_s.mu}, {"tau", plant.dyn_s.tau}}},
                                {"fast", {{"a", plant.dyn_f.a}, {"mu", plant.dyn_f.mu}, {"tau", plant.dyn_f.tau}}}};
    write_json(dir / "dynamics.json", dyn);

    m.config = cfg.to_json();
    m.seed = cfg.seed;
    m.outputs = {dir / "ring.json", dir / "R_s.bcm", dir / "R_f.bcm", dir / "dynamics.json"};
    m.finished = utc_timestamp();
    m.write(dir / "manifest.json");
    out << "ring: n=" << plant.n << " n_y=" << plant.n_y << " n_s=" << plant.n_s << " n_f=" << plant.n_f
        << "  N_y=" << plant.N_y() << " N_u=" << plant.N_u() << "\n";
    out << "wrote " << dir.string() << "\n";
    return ok;
}

// ---------------------------------------------------------------- design

struct DesignArgs
{
    std::string ring;
    std::string controller;
    std::string out;
    bool hypothetical = false;
};

void print_mode_table(const Design& d, std::ostream& out)
{
    const auto& ms = d.modal;
    out << "cell  cond(X)        TISO  SISO\n";
    for (Index i = 0; i < ms.n; ++i)
        out << std::setw(4) << i << "  " << std::setw(13) << std::scientific << std::setprecision(4)
            << ms.cells[static_cast<std::size_t>(i)].cond_X << std::defaultfloat << "  " << std::setw(4)
            << ms.tiso_per_cell() << "  " << std::setw(4) << ms.siso_per_cell() << "\n";
    out << "generalized singular value split (cell, mode, type, s_slow, s_fast):\n";
    for (const auto& r : ms.mode_table())
        out << std::setw(4) << r.cell << std::setw(5) << r.mode << "  " << (r.tiso ? "TISO" : "SISO") << "  "
            << std::fixed << std::setprecision(6) << r.s_slow << "  " << r.s_fast << std::defaultfloat << "\n";
}

void write_mode_table(const fs::path& path, const ModalSystem& ms)
{
    std::ofstream f(path);
    f << "cell,mode,type,s_slow,s_fast\n";
    f << std::setprecision(17);
    for (const auto& r : ms.mode_table())
        f << r.cell << ',' << r.mode << ',' << (r.tiso ? "TISO" : "SISO") << ',' << r.s_slow << ',' << r.s_fast
          << '\n';
}

int cmd_design(const DesignArgs& a, std::ostream& out)
{
    RunManifest m;
    m.command = a.hypothetical ? "design --hypothetical" : "design";
    m.started = utc_timestamp();
    const auto ring = load_ring(a.ring);
    const ControllerConfig cc = a.controller.empty() ? ControllerConfig{} : load_controller_config(a.controller);
    // ordering is checked before any decomposition work
    design_targets(cc.lambda_s_hz, cc.lambda_f_hz, ring.plant.dyn_s.mu, ring.plant.dyn_s.tau);
    const Design d = a.hypothetical ? design_hypothetical(ring.plant, cc) : design_controller(ring.plant, cc);

    const fs::path dir = a.out;
    fs::create_directories(dir);
    m.outputs = export_controller(d.controller, &d, dir);
    if (!a.hypothetical)
    {
        write_mode_table(dir / "modes.csv", d.modal);
        m.outputs.push_back(dir / "modes.csv");
        print_mode_table(d, out);
    }
    else
    {
        out << "hypothetical design: " << ring.plant.N_u() << " fast actuators, mu = " << cc.mu_s
            << ", target bandwidth " << cc.lambda_f_hz << " Hz\n";
    }
    out << std::setprecision(10) << "T_s pole " << d.targets.T_s.pole() << ", T_f pole " << d.targets.T_f.pole()
        << "\n";
    m.config = {{"controller", cc.to_json()},
                {"hypothetical", a.hypothetical},
                {"ring", ring.config.to_json()},
                {"ring_hash", file_hash_or_empty(fs::path(a.ring) / "R_s.bcm") +
                                  file_hash_or_empty(fs::path(a.ring) / "R_f.bcm")}};
    m.seed = ring.config.seed;
    m.finished = utc_timestamp();
    m.write(dir / "manifest.json");
    return ok;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs
{
    std::string ring;
    std::string controller;
    std::string disturbance;
    std::string out;
    long steps = 65536;
    std::uint64_t seed = 42;
    double gain_error = 0.0;
};

SimPlant true_plant_for(const RingFiles& ring, const fs::path& controller_dir)
{
    const auto j = load_json_file(controller_dir / "controller.json");
    const bool hyp = j.value("hypothetical", false);
    return hyp ? hypothetical_plant(ring.plant) : to_sim_plant(ring.plant);
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out)
{
    if (a.steps < 1)
        throw ConfigError("--steps must be >= 1");
    RunManifest m;
    m.command = "simulate";
    m.started = utc_timestamp();
    const auto ring = load_ring(a.ring);
    const SimPlant truth = true_plant_for(ring, a.controller);
    MidRangingController ctrl = load_controller(a.controller);
    const Index steps = a.steps;

    MatrixXd D;
    if (!a.disturbance.empty())
        D = io::load_dense(a.disturbance);
    else
    {
        DisturbanceProfile prof;
        prof.fs = ring.config.tau_hz;
        D = synthesize_disturbance(ring.plant.R_dense(), steps, a.seed, prof);
    }
    if (D.rows() < steps || D.cols() != ring.plant.N_y())
        throw ConfigError("disturbance must be at least steps x N_y (" + std::to_string(steps) + " x " +
                          std::to_string(ring.plant.N_y()) + ")");

    SimulationConfig sc;
    sc.steps = steps;
    sc.plant = &truth;
    sc.controller = std::move(ctrl);
    sc.disturbance = &D;
    sc.gain_error.assign(truth.arrays.size(), a.gain_error);
    const SimulationTrace tr = run_closed_loop(std::move(sc));

    const fs::path dir = a.out;
    fs::create_directories(dir);
    io::write_dense_bcm(dir / "y.bcm", tr.y);
    m.outputs.push_back(dir / "y.bcm");
    nlohmann::json signals = nlohmann::json::array({"y"});
    for (std::size_t p = 0; p < tr.names.size(); ++p)
    {
        const std::string name = "u_" + tr.names[p];
        io::write_dense_bcm(dir / (name + ".bcm"), tr.u[p]);
        m.outputs.push_back(dir / (name + ".bcm"));
        signals.push_back(name);
    }
    m.config = {{"steps", steps},
                {"tau", 1.0 / ring.config.tau_hz},
                {"signals", signals},
                {"seed", a.seed},
                {"gain_error", a.gain_error},
                {"disturbance", a.disturbance.empty() ? nlohmann::json("synthetic") : nlohmann::json(a.disturbance)},
                {"ring", ring.config.to_json()},
                {"controller_hash", sha256_file(fs::path(a.controller) / "controller.json")}};
    m.seed = a.seed;
    m.finished = utc_timestamp();
    m.write(dir / "manifest.json");

    out << "simulated " << steps << " steps; rms(y) = " << std::setprecision(6)
        << std::sqrt(tr.y.squaredNorm() / static_cast<double>(tr.y.size())) << "\n";
    return ok;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs
{
    std::string trace;
    std::string mode = "spectra";
    std::string out;
    std::string ring;
    std::string controller;
    long sensor = 3;
    long steps = 65536;
    std::uint64_t seed = 42;
    long segment = 4096;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out)
{
    RunManifest m;
    m.command = "analyze " + a.mode;
    m.started = utc_timestamp();
    const fs::path dir = a.out;
    fs::create_directories(dir);
    WelchConfig wc;
    wc.segment = a.segment;
    nlohmann::json config = {{"mode", a.mode}, {"sensor", a.sensor}, {"segment", a.segment}};

    if (a.mode == "spectra" || a.mode == "ibm")
    {
        if (a.trace.empty())
            throw ConfigError("--trace is required for mode " + a.mode);
        const auto tm = load_json_file(fs::path(a.trace) / "manifest.json");
        wc.fs = 1.0 / tm.at("config").at("tau").get<double>();
        config["trace_config_hash"] = sha256_hex(tm.at("config").dump());
        if (a.mode == "spectra")
        {
            // mean actuator power per family, normalized by the group maximum
            std::vector<std::string> names;
            SpectrumResult group;
            for (const auto& s : tm.at("config").at("signals"))
            {
                const std::string name = s.get<std::string>();
                if (name.rfind("u_", 0) != 0)
                    continue;
                const MatrixXd U = io::read_dense_bcm(fs::path(a.trace) / (name + ".bcm"));
                if (U.cols() == 0)
                    continue;
                const auto sp = power_spectrum(U, wc);
                if (group.power.size() == 0)
                {
                    group.freqs = sp.freqs;
                    group.power.resize(sp.freqs.size(), 0);
                }
                group.power.conservativeResize(Eigen::NoChange, group.power.cols() + 1);
                group.power.col(group.power.cols() - 1) = sp.power.rowwise().mean();
                names.push_back(name);
            }
            if (names.empty())
                throw ConfigError("trace has no actuator signals");
            group.normalization = group.power.maxCoeff();
            write_spectrum_csv(dir / "spectra.csv", group, names, true);
            write_spectrum_dat(dir / "spectra.dat", group, names, true);
            m.outputs = {dir / "spectra.csv", dir / "spectra.dat"};
            out << "spectra of " << names.size() << " actuator families written\n";
        }
        else
        {
            const MatrixXd Y = io::read_dense_bcm(fs::path(a.trace) / "y.bcm");
            if (a.sensor < 0 || a.sensor >= Y.cols())
                throw ConfigError("--sensor out of range");
            const auto curve = ibm_from_trace(Y.col(a.sensor), wc);
            write_ibm_csv(dir / "ibm.csv", {{"ibm", curve}});
            m.outputs = {dir / "ibm.csv"};
            out << "final IBM at sensor " << a.sensor << ": " << std::setprecision(6)
                << curve.ibm(curve.ibm.size() - 1) << "\n";
        }
    }
    else if (a.mode == "compare")
    {
        if (a.ring.empty())
            throw ConfigError("--ring is required for mode compare");
        if (a.steps < 256)
            throw ConfigError("--steps must be >= 256 for compare");
        const auto ring = load_ring(a.ring);
        const ControllerConfig cc = a.controller.empty() ? ControllerConfig{} : load_controller_config(a.controller);
        wc.fs = ring.config.tau_hz;
        const Design present = design_controller(ring.plant, cc);
        const Design hyp = design_hypothetical(ring.plant, cc);
        DisturbanceProfile prof;
        prof.fs = ring.config.tau_hz;
        const MatrixXd D = synthesize_disturbance(ring.plant.R_dense(), a.steps, a.seed, prof);
        const auto c = compare_controllers(present.controller, hyp.controller, D, a.sensor, wc, true);

        write_ibm_csv(dir / "ibm_compare.csv",
                      {{"present", c.present}, {"hypothetical", c.hypothetical}, {"open_loop", c.open_loop}});
        SpectrumResult ratio;
        ratio.freqs = c.present.freqs;
        ratio.power = c.ratio;
        write_spectrum_csv(dir / "ibm_ratio.csv", ratio, {"ratio"});
        write_spectrum_csv(dir / "corrections.csv", c.correction_power, c.correction_names, true);
        write_json(dir / "compare.json", comparison_summary(c));
        m.outputs = {dir / "ibm_compare.csv", dir / "ibm_ratio.csv", dir / "corrections.csv", dir / "compare.json"};
        config["ring"] = ring.config.to_json();
        config["controller"] = cc.to_json();
        config["steps"] = a.steps;
        config["seed"] = a.seed;
        m.seed = a.seed;
        out << comparison_summary(c).dump(2) << "\n";
    }
    else
    {
        throw ConfigError("unknown analyze mode '" + a.mode + "' (spectra|ibm|compare)");
    }
    m.config = config;
    m.finished = utc_timestamp();
    m.write(dir / "manifest.json");
    return ok;
}

// ---------------------------------------------------------------- bench

struct BenchArgs
{
    long n = 6, p = 42, m = 66;
    int trials = 50;
    std::uint64_t seed = 1;
};

int cmd_bench(const BenchArgs& a, std::ostream& out)
{
    if (a.n < 1 || a.p < 1 || a.m < 1 || a.trials < 1)
        throw ConfigError("bench: dimensions and trials must be positive");
    std::mt19937_64 rng(a.seed);
    std::normal_distribution<double> normal;
    std::vector<MatrixXd> blocks;
    for (long k = 0; k < a.n; ++k)
    {
        MatrixXd b(a.p, a.m);
        for (Index i = 0; i < b.size(); ++i)
            b.data()[i] = normal(rng);
        blocks.push_back(std::move(b));
    }
    const BlockCirculantMatrixd B(std::move(blocks));
    const auto r = bench_matvec(B, a.trials, static_cast<unsigned>(a.seed));
    nlohmann::json j = {{"n", a.n},           {"p", a.p},         {"m", a.m},
                        {"trials", a.trials}, {"t_dense", r.t_dense}, {"t_fft", r.t_fft},
                        {"t_reshape", r.t_reshape}, {"reduction", r.reduction},
                        {"max_rel_error", r.max_rel_error}};
    if ((a.n & (a.n - 1)) == 0)
        j["predicted_ratio"] = speedup_ratio(a.n, a.p, a.m);
    out << j.dump(2) << "\n";
    return ok;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Multi-array cross-directional orbit control toolkit"};
    app.require_subcommand(1);

    GenRingArgs gen;
    auto* sgen = app.add_subcommand("gen-ring", "generate a synthetic block-circulant ring");
    sgen->add_option("--config", gen.config, "ring.json");
    sgen->add_option("--out", gen.out, "output directory")->required();
    sgen->add_option("--seed", gen.seed, "override the config seed");

    DesignArgs des;
    auto* sdes = app.add_subcommand("design", "design the mid-ranging controller");
    sdes->add_option("--ring", des.ring, "ring directory")->required();
    sdes->add_option("--controller", des.controller, "controller.json");
    sdes->add_option("--out", des.out, "output directory")->required();
    sdes->add_flag("--hypothetical", des.hypothetical, "all-fast comparator design");

    SimulateArgs sim;
    auto* ssim = app.add_subcommand("simulate", "closed-loop simulation");
    ssim->add_option("--ring", sim.ring, "ring directory")->required();
    ssim->add_option("--controller", sim.controller, "designed controller directory")->required();
    ssim->add_option("--disturbance", sim.disturbance, "disturbance file (.csv or .bcm, steps x N_y)");
    ssim->add_option("--steps", sim.steps, "number of samples");
    ssim->add_option("--seed", sim.seed, "seed of the synthetic disturbance");
    ssim->add_option("--gain-error", sim.gain_error, "multiplicative gain error of the true plant");
    ssim->add_option("--out", sim.out, "output directory")->required();

    AnalyzeArgs ana;
    auto* sana = app.add_subcommand("analyze", "spectra, integrated beam motion, controller comparison");
    sana->add_option("--trace", ana.trace, "trace directory");
    sana->add_option("--mode", ana.mode, "spectra|ibm|compare");
    sana->add_option("--out", ana.out, "output directory")->required();
    sana->add_option("--ring", ana.ring, "ring directory (compare)");
    sana->add_option("--controller", ana.controller, "controller.json (compare)");
    sana->add_option("--sensor", ana.sensor, "sensor index");
    sana->add_option("--steps", ana.steps, "samples (compare)");
    sana->add_option("--seed", ana.seed, "disturbance seed (compare)");
    sana->add_option("--segment", ana.segment, "Welch segment length");

    BenchArgs ben;
    auto* sben = app.add_subcommand("bench", "dense versus Fourier-domain matvec timing");
    sben->add_option("--n", ben.n, "number of cells");
    sben->add_option("--p", ben.p, "block rows");
    sben->add_option("--m", ben.m, "block columns");
    sben->add_option("--trials", ben.trials, "timed repetitions");
    sben->add_option("--seed", ben.seed, "seed of the random blocks");

    std::string manifest;
    auto* sver = app.add_subcommand("verify", "re-hash the outputs listed in a manifest");
    sver->add_option("--manifest", manifest, "manifest.json")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage_error;
    }

    try
    {
        if (*sgen)
            return cmd_gen_ring(gen, out);
        if (*sdes)
            return cmd_design(des, out);
        if (*ssim)
            return cmd_simulate(sim, out);
        if (*sana)
            return cmd_analyze(ana, out);
        if (*sben)
            return cmd_bench(ben, out);
        if (*sver)
        {
            const auto r = verify_manifest(manifest);
            for (const auto& f : r.missing)
                err << "missing: " << f << "\n";
            for (const auto& f : r.mismatched)
                err << "hash mismatch: " << f << "\n";
            out << (r.ok() ? "ok" : "FAILED") << ": " << r.checked << " files checked\n";
            return r.ok() ? ok : verify_failed;
        }
    }
    catch (const ConfigError& e)
    {
        err << "error: " << e.what() << "\n";
        return usage_error;
    }
    catch (const DesignError& e)
    {
        err << "design error: " << e.what() << "\n";
        return usage_error;
    }
    catch (const CellError& e)
    {
        err << "numerical failure in cell " << e.cell() << ": " << e.what() << "\n";
        return numerical_failure;
    }
    catch (const StructureError& e)
    {
        err << "error: " << e.what() << "\n";
        return usage_error;
    }
    catch (const Error& e)
    {
        err << "numerical failure: " << e.what() << "\n";
        return numerical_failure;
    }
    catch (const fs::filesystem_error& e)
    {
        err << "error: " << e.what() << "\n";
        return usage_error;
    }
    return usage_error;
}

} // namespace xdctrl::cli
