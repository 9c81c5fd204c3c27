#include "xdctrl/controller.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "xdctrl/matrix_io.hpp"

namespace xdctrl
{

// ---------------------------------------------------------------- config

nlohmann::json ControllerConfig::to_json() const
{
    return {{"lambda_s_hz", lambda_s_hz}, {"lambda_f_hz", lambda_f_hz}, {"mu_s", mu_s}, {"mu_f", mu_f}};
}

ControllerConfig ControllerConfig::from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw ConfigError("controller config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (key != "lambda_s_hz" && key != "lambda_f_hz" && key != "mu_s" && key != "mu_f")
            throw ConfigError("controller config: unknown key '" + key + "'");
    ControllerConfig c;
    try
    {
        if (j.contains("lambda_s_hz"))
            c.lambda_s_hz = j.at("lambda_s_hz").get<double>();
        if (j.contains("lambda_f_hz"))
            c.lambda_f_hz = j.at("lambda_f_hz").get<double>();
        if (j.contains("mu_s"))
            c.mu_s = j.at("mu_s").get<double>();
        if (j.contains("mu_f"))
            c.mu_f = j.at("mu_f").get<double>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("controller config: ") + e.what());
    }
    if (!(c.mu_s > 0.0) || !(c.mu_f > 0.0))
        throw ConfigError("controller config: mu_s and mu_f must be positive");
    return c;
}

ControllerConfig load_controller_config(const std::filesystem::path& path)
{
    return ControllerConfig::from_json(load_json_file(path));
}

// ---------------------------------------------------------------- filters

TransferFunction ClosedLoopTarget::transfer_function() const
{
    const double p = pole();
    TransferFunction t;
    t.delay = mu_delay + 1;
    t.num = {1.0 - p};
    t.den = {1.0, -p};
    return t;
}

Targets design_targets(double lambda_s_hz, double lambda_f_hz, int mu, double tau)
{
    if (!(tau > 0.0))
        throw DesignError("design_targets: tau must be positive");
    if (mu < 0)
        throw DesignError("design_targets: mu must be non-negative");
    const double nyquist = 1.0 / (2.0 * tau);
    if (!(lambda_s_hz > 0.0 && lambda_s_hz < lambda_f_hz && lambda_f_hz < nyquist))
        throw DesignError("design_targets: require 0 < lambda_s < lambda_f < " + std::to_string(nyquist) +
                          " Hz (got " + std::to_string(lambda_s_hz) + ", " + std::to_string(lambda_f_hz) + ")");
    Targets t;
    t.T_s = {2.0 * std::numbers::pi * lambda_s_hz, mu, tau};
    t.T_f = {2.0 * std::numbers::pi * lambda_f_hz, mu, tau};
    return t;
}

ModeFilters synthesize_mode_controllers(const ActuatorDynamics& g_s, const ActuatorDynamics& g_f,
                                        const Targets& targets)
{
    g_s.validate();
    g_f.validate();
    const TransferFunction Ts = targets.T_s.transfer_function();
    const TransferFunction Tf = targets.T_f.transfer_function();
    ModeFilters f;
    f.Q_s = g_s.transfer_function().inverse() * Ts;
    f.Q_f = g_f.transfer_function().inverse() * (Tf - Ts);
    if (!f.Q_s.is_causal() || !f.Q_f.is_causal())
        throw SynthesisError("synthesize_mode_controllers: non-causal filter; the target delay is shorter "
                             "than the actuator delay");
    return f;
}

Complex mode_sensitivity(const ModeFilters& filters, const ActuatorDynamics& g_s, const ActuatorDynamics& g_f,
                         double k_s, double k_f, Complex z)
{
    return 1.0 - k_s * actuator_response(g_s, z) * filters.Q_s.eval(z) -
           k_f * actuator_response(g_f, z) * filters.Q_f.eval(z);
}

// ---------------------------------------------------------------- gains

MatrixXcd regularized_inverse(const MatrixXcd& X, const MatrixXcd& S, double mu)
{
    if (!(mu > 0.0))
        throw DomainError("regularized_inverse: mu must be positive");
    if (X.cols() != S.rows())
        throw ShapeError("regularized_inverse: X and S are incompatible");
    const MatrixXcd A = X * S;
    MatrixXcd N = A.adjoint() * A;
    N.diagonal().array() += mu;
    return N.llt().solve(A.adjoint());
}

namespace
{

MatrixXcd stack_diag(const std::vector<MatrixXcd>& blocks)
{
    Index r = 0, c = 0;
    for (const auto& b : blocks)
    {
        r += b.rows();
        c += b.cols();
    }
    MatrixXcd D = MatrixXcd::Zero(r, c);
    r = c = 0;
    for (const auto& b : blocks)
    {
        D.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return D;
}

} // namespace

MatrixXcd RegularizedGains::dense_s() const { return stack_diag(Xdag_s); }
MatrixXcd RegularizedGains::dense_f() const { return stack_diag(Xdag_f); }

RegularizedGains regularized_gains(const ModalSystem& ms, double mu_s, double mu_f)
{
    if (!(mu_s > 0.0) || !(mu_f > 0.0))
        throw DomainError("regularized_gains: mu_s and mu_f must be positive");
    RegularizedGains g;
    g.Xdag_s.resize(static_cast<std::size_t>(ms.n));
    g.Xdag_f.resize(static_cast<std::size_t>(ms.n));
    parallel_for(ms.n, [&](Index i) {
        const auto& c = ms.cells[static_cast<std::size_t>(i)];
        g.Xdag_s[static_cast<std::size_t>(i)] = regularized_inverse(c.X, c.S_s, mu_s);
        g.Xdag_f[static_cast<std::size_t>(i)] = ms.n_f > 0 ? regularized_inverse(c.X, c.S_f, mu_f)
                                                           : MatrixXcd(0, ms.n_y);
    });
    return g;
}

// ---------------------------------------------------------------- controller

MidRangingController::MidRangingController(Index n, Index n_y, std::vector<ControlPath> paths)
    : n_(n), n_y_(n_y), half_(n / 2 + 1), paths_(std::move(paths))
{
    if (n < 1 || n_y < 1)
        throw ShapeError("controller: invalid dimensions");
    for (const auto& p : paths_)
    {
        if (static_cast<Index>(p.Xdag.size()) != n || static_cast<Index>(p.U.size()) != n)
            throw ShapeError("controller path '" + p.name + "': expected one gain block per cell");
        if (p.R.cells() != n || p.R.block_rows() != n_y)
            throw ShapeError("controller path '" + p.name + "': model response does not match the ring");
        if (p.active < 0 || p.active > p.channels)
            throw ShapeError("controller path '" + p.name + "': active channels exceed modal channels");
        for (Index j = 0; j < n; ++j)
        {
            const auto& X = p.Xdag[static_cast<std::size_t>(j)];
            const auto& U = p.U[static_cast<std::size_t>(j)];
            if (X.rows() != p.channels || X.cols() != n_y || U.rows() != p.R.block_cols() || U.cols() != p.channels)
                throw ShapeError("controller path '" + p.name + "': gain shapes are inconsistent in cell " +
                                 std::to_string(j));
        }
        p.dyn.validate();
        filters_.emplace_back(p.Q, p.active * half_);
        modal_.push_back(MatrixXcd::Zero(p.channels, half_));
        beta_model_.push_back(block_diagonalize(p.R).beta);
    }

    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    fwd_.resize(n, half_);
    inv_re_.resize(half_, n);
    inv_im_.resize(half_, n);
    for (Index k = 0; k < n; ++k)
        for (Index j = 0; j < half_; ++j)
        {
            const Complex w = twiddle(j * k, n);
            fwd_(k, j) = s * std::conj(w);
            const double c = (j == 0 || 2 * j == n) ? 1.0 : 2.0;
            inv_re_(j, k) = c * s * w.real();
            inv_im_(j, k) = c * s * w.imag();
        }
}

SimPlant MidRangingController::model() const
{
    SimPlant p;
    p.n = n_;
    p.n_y = n_y_;
    for (const auto& path : paths_)
        p.arrays.push_back({path.name, path.R, path.dyn});
    return p;
}

void MidRangingController::reset()
{
    for (auto& f : filters_)
        f.reset();
    for (auto& m : modal_)
        m.setZero();
}

void MidRangingController::transform(const Eigen::Ref<const VectorXd>& e, MatrixXcd& ehat) const
{
    if (e.size() != n_ * n_y_)
        throw ShapeError("controller: error vector has wrong length");
    Eigen::Map<const MatrixXd> ep(e.data(), n_y_, n_);
    ehat.noalias() = ep.cast<Complex>() * fwd_;
}

void MidRangingController::synthesize(const MatrixXcd& uhat, Eigen::Ref<VectorXd> u) const
{
    const Index p = uhat.rows();
    Eigen::Map<MatrixXd> up(u.data(), p, n_);
    // u = -(F (x) I) u_hat using conjugate symmetry of the omitted cells
    up.noalias() = -(uhat.real() * inv_re_);
    up.noalias() += uhat.imag() * inv_im_;
}

void MidRangingController::step(const Eigen::Ref<const VectorXd>& e, std::vector<VectorXd>& u)
{
    MatrixXcd ehat(n_y_, half_);
    transform(e, ehat);
    u.resize(paths_.size());
    for (std::size_t k = 0; k < paths_.size(); ++k)
    {
        const auto& p = paths_[k];
        VectorXcd x(p.active * half_);
        for (Index j = 0; j < half_; ++j)
            x.segment(j * p.active, p.active).noalias() =
                p.Xdag[static_cast<std::size_t>(j)].topRows(p.active) * ehat.col(j);
        filters_[k].step(x, x);
        auto& modal = modal_[k];
        modal.setZero();
        MatrixXcd uhat(p.actuators_per_cell(), half_);
        for (Index j = 0; j < half_; ++j)
        {
            modal.col(j).head(p.active) = x.segment(j * p.active, p.active);
            uhat.col(j).noalias() = p.U[static_cast<std::size_t>(j)].leftCols(p.active) * modal.col(j).head(p.active);
        }
        u[k].resize(n_ * p.actuators_per_cell());
        synthesize(uhat, u[k]);
    }
}

VectorXd MidRangingController::static_command(const Eigen::Ref<const VectorXd>& e, Index k) const
{
    const auto& p = path(k);
    MatrixXcd ehat(n_y_, half_);
    transform(e, ehat);
    const double q0 = p.Q.dc_gain();
    MatrixXcd uhat(p.actuators_per_cell(), half_);
    for (Index j = 0; j < half_; ++j)
    {
        const auto& X = p.Xdag[static_cast<std::size_t>(j)];
        const auto& U = p.U[static_cast<std::size_t>(j)];
        uhat.col(j) = q0 * (U.leftCols(p.active) * (X.topRows(p.active) * ehat.col(j)));
    }
    VectorXd u(n_ * p.actuators_per_cell());
    synthesize(uhat, u);
    return u;
}

MatrixXcd MidRangingController::cell_sensitivity(Index cell, Complex z) const
{
    if (cell < 0 || cell >= n_)
        throw ShapeError("cell_sensitivity: cell index out of range");
    MatrixXcd S = MatrixXcd::Identity(n_y_, n_y_);
    const bool mirrored = cell >= half_;
    const auto src = static_cast<std::size_t>(mirrored ? n_ - cell : cell);
    for (std::size_t k = 0; k < paths_.size(); ++k)
    {
        const auto& p = paths_[k];
        MatrixXcd G = p.U[src].leftCols(p.active) * p.Xdag[src].topRows(p.active);
        if (mirrored)
            G = G.conjugate().eval();
        const Complex loop = actuator_response(p.dyn, z) * p.Q.eval(z);
        S -= loop * beta_model_[k][static_cast<std::size_t>(cell)] * G;
    }
    return S;
}

MatrixXcd MidRangingController::sensitivity(Complex z) const
{
    std::vector<MatrixXcd> cellS;
    for (Index j = 0; j < n_; ++j)
        cellS.push_back(cell_sensitivity(j, z));
    MatrixXcd H(n_ * n_y_, n_ * n_y_);
    for (Index r = 0; r < n_; ++r)
        for (Index c = 0; c < n_; ++c)
        {
            MatrixXcd acc = MatrixXcd::Zero(n_y_, n_y_);
            for (Index j = 0; j < n_; ++j)
                acc += twiddle((r - c) * j, n_) * cellS[static_cast<std::size_t>(j)];
            H.block(r * n_y_, c * n_y_, n_y_, n_y_) = acc / static_cast<double>(n_);
        }
    return H;
}

MidRangingController assemble_controller(const TwoArrayPlant& model, const ModalSystem& ms,
                                         const ModeFilters& filters, const RegularizedGains& gains)
{
    model.validate();
    if (ms.n != model.n || ms.n_y != model.n_y || ms.n_s != model.n_s || ms.n_f != model.n_f)
        throw ShapeError("assemble_controller: modal system does not match the plant");
    if (static_cast<Index>(gains.Xdag_s.size()) != ms.n || static_cast<Index>(gains.Xdag_f.size()) != ms.n)
        throw ShapeError("assemble_controller: gains do not cover every cell");

    ControlPath slow;
    slow.name = "slow";
    slow.Q = filters.Q_s;
    slow.channels = ms.n_s;
    slow.active = ms.n_s;
    slow.R = model.R_s;
    slow.dyn = model.dyn_s;
    for (Index i = 0; i < ms.n; ++i)
    {
        slow.Xdag.push_back(gains.Xdag_s[static_cast<std::size_t>(i)]);
        slow.U.push_back(ms.cells[static_cast<std::size_t>(i)].U_s);
    }
    std::vector<ControlPath> paths{std::move(slow)};

    if (ms.n_f > 0)
    {
        // fast modal vector padded to n_s channels; SISO channels stay zero
        ControlPath fast;
        fast.name = "fast";
        fast.Q = filters.Q_f;
        fast.channels = ms.n_s;
        fast.active = ms.n_f;
        fast.R = model.R_f;
        fast.dyn = model.dyn_f;
        for (Index i = 0; i < ms.n; ++i)
        {
            MatrixXcd X = MatrixXcd::Zero(ms.n_s, ms.n_y);
            X.topRows(ms.n_f) = gains.Xdag_f[static_cast<std::size_t>(i)];
            MatrixXcd U = MatrixXcd::Zero(ms.n_f, ms.n_s);
            U.leftCols(ms.n_f) = ms.cells[static_cast<std::size_t>(i)].U_f;
            fast.Xdag.push_back(std::move(X));
            fast.U.push_back(std::move(U));
        }
        paths.push_back(std::move(fast));
    }
    return MidRangingController(model.n, model.n_y, std::move(paths));
}

Design design_controller(const TwoArrayPlant& plant, const ControllerConfig& cfg)
{
    Design d;
    d.config = cfg;
    d.fourier = fourier_decompose(plant);
    d.modal = modal_decompose(d.fourier.Rhat_s, d.fourier.Rhat_f);
    d.targets = design_targets(cfg.lambda_s_hz, cfg.lambda_f_hz, plant.dyn_s.mu, plant.dyn_s.tau);
    d.filters = synthesize_mode_controllers(plant.dyn_s, plant.dyn_f, d.targets);
    d.gains = regularized_gains(d.modal, cfg.mu_s, cfg.mu_f);
    d.controller = assemble_controller(plant, d.modal, d.filters, d.gains);
    return d;
}

Design design_hypothetical(const TwoArrayPlant& plant, const ControllerConfig& cfg)
{
    const SimPlant hp = hypothetical_plant(plant);
    const auto& arr = hp.arrays.front();
    Design d;
    d.hypothetical = true;
    d.config = cfg;
    d.targets = design_targets(cfg.lambda_s_hz, cfg.lambda_f_hz, arr.dyn.mu, arr.dyn.tau);
    d.filters.Q_s = arr.dyn.transfer_function().inverse() * d.targets.T_f.transfer_function();
    d.filters.Q_f.num = {0.0};
    if (!d.filters.Q_s.is_causal())
        throw SynthesisError("design_hypothetical: non-causal filter");

    const auto form = block_diagonalize(arr.R);
    const Index nu = arr.R.block_cols();
    ControlPath path;
    path.name = arr.name;
    path.Q = d.filters.Q_s;
    path.channels = nu;
    path.active = nu;
    path.R = arr.R;
    path.dyn = arr.dyn;
    path.Xdag.resize(static_cast<std::size_t>(plant.n));
    path.U.assign(static_cast<std::size_t>(plant.n), MatrixXcd::Identity(nu, nu));
    const MatrixXcd I = MatrixXcd::Identity(nu, nu);
    parallel_for(plant.n, [&](Index i) {
        path.Xdag[static_cast<std::size_t>(i)] =
            regularized_inverse(form.beta[static_cast<std::size_t>(i)], I, cfg.mu_s);
    });
    d.gains.Xdag_s = path.Xdag;
    d.controller = MidRangingController(plant.n, plant.n_y, {std::move(path)});
    return d;
}

// ---------------------------------------------------------------- manifest

namespace
{

nlohmann::json tf_json(const TransferFunction& h)
{
    return {{"delay", h.delay}, {"num", h.num}, {"den", h.den}};
}

TransferFunction tf_from(const nlohmann::json& j)
{
    TransferFunction h;
    h.delay = j.at("delay").get<int>();
    h.num = j.at("num").get<std::vector<double>>();
    h.den = j.at("den").get<std::vector<double>>();
    return h;
}

} // namespace

std::vector<std::filesystem::path> export_controller(const MidRangingController& ctrl, const Design* design,
                                                     const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir / "gains");
    std::vector<fs::path> written;
    nlohmann::json j;
    j["n"] = ctrl.cells();
    j["n_y"] = ctrl.n_y();
    if (design)
    {
        j["hypothetical"] = design->hypothetical;
        j["config"] = design->config.to_json();
        j["targets"] = {{"lambda_s", design->targets.T_s.lambda}, {"lambda_f", design->targets.T_f.lambda},
                        {"pole_s", design->targets.T_s.pole()},  {"pole_f", design->targets.T_f.pole()}};
    }
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& p : ctrl.paths())
    {
        nlohmann::json pj;
        pj["name"] = p.name;
        pj["Q"] = tf_json(p.Q);
        pj["channels"] = p.channels;
        pj["active"] = p.active;
        pj["dyn"] = {{"a", p.dyn.a}, {"mu", p.dyn.mu}, {"tau", p.dyn.tau}};
        const fs::path model = "model_" + p.name + ".bcm";
        io::write_bcm(dir / model, p.R);
        written.push_back(dir / model);
        pj["model"] = model.string();
        nlohmann::json xs = nlohmann::json::array(), us = nlohmann::json::array();
        for (Index i = 0; i < ctrl.cells(); ++i)
        {
            const std::string xs_stem = "gains/" + p.name + "_Xdag_" + std::to_string(i);
            const std::string us_stem = "gains/" + p.name + "_U_" + std::to_string(i);
            io::write_complex_bcm(dir / xs_stem, p.Xdag[static_cast<std::size_t>(i)]);
            io::write_complex_bcm(dir / us_stem, p.U[static_cast<std::size_t>(i)]);
            for (const auto& stem : {xs_stem, us_stem})
            {
                written.push_back(dir / (stem + "_re.bcm"));
                written.push_back(dir / (stem + "_im.bcm"));
            }
            xs.push_back(xs_stem);
            us.push_back(us_stem);
        }
        pj["Xdag"] = xs;
        pj["U"] = us;
        paths.push_back(pj);
    }
    j["paths"] = paths;
    const fs::path file = dir / "controller.json";
    std::ofstream(file) << j.dump(2) << '\n';
    written.push_back(file);
    return written;
}

MidRangingController load_controller(const std::filesystem::path& dir)
{
    const auto j = load_json_file(dir / "controller.json");
    try
    {
        const Index n = j.at("n").get<Index>();
        const Index n_y = j.at("n_y").get<Index>();
        std::vector<ControlPath> paths;
        for (const auto& pj : j.at("paths"))
        {
            ControlPath p;
            p.name = pj.at("name").get<std::string>();
            p.Q = tf_from(pj.at("Q"));
            p.channels = pj.at("channels").get<Index>();
            p.active = pj.at("active").get<Index>();
            p.dyn = {pj.at("dyn").at("a").get<double>(), pj.at("dyn").at("mu").get<int>(),
                     pj.at("dyn").at("tau").get<double>()};
            p.R = io::read_bcm(dir / pj.at("model").get<std::string>());
            for (const auto& s : pj.at("Xdag"))
                p.Xdag.push_back(io::read_complex_bcm(dir / s.get<std::string>()));
            for (const auto& s : pj.at("U"))
                p.U.push_back(io::read_complex_bcm(dir / s.get<std::string>()));
            paths.push_back(std::move(p));
        }
        return MidRangingController(n, n_y, std::move(paths));
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError((dir / "controller.json").string() + ": " + e.what());
    }
}

} // namespace xdctrl
