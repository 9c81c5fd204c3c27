#include "xdctrl/plant.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace xdctrl
{

void ActuatorDynamics::validate() const
{
    if (!(a > 0.0) || !std::isfinite(a))
        throw DomainError("actuator bandwidth a must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw DomainError("sampling period tau must be positive");
    if (mu < 0)
        throw DomainError("loop delay mu must be non-negative");
}

TransferFunction ActuatorDynamics::transfer_function() const
{
    const double p = pole();
    TransferFunction g;
    g.delay = mu + 1;
    g.num = {1.0 - p};
    g.den = {1.0, -p};
    return g;
}

Complex actuator_response(const ActuatorDynamics& dyn, Complex z)
{
    dyn.validate();
    const double p = dyn.pole();
    const Complex zinv = 1.0 / z;
    const Complex den = 1.0 - zinv * p;
    if (std::abs(den) <= 1e-14)
        throw DomainError("actuator_response: z coincides with the actuator pole");
    return std::pow(zinv, dyn.mu + 1) * (1.0 - p) / den;
}

void TwoArrayPlant::validate() const
{
    if (n < 1 || n_y < 1 || n_s < 1 || n_f < 0)
        throw ShapeError("plant: invalid dimensions");
    if (n_f > n_s)
        throw ShapeError("plant: n_f must not exceed n_s");
    if (R_s.cells() != n || R_s.block_rows() != n_y || R_s.block_cols() != n_s)
        throw ShapeError("plant: R_s does not match (n, n_y, n_s)");
    if (R_f.cells() != n || R_f.block_rows() != n_y || R_f.block_cols() != n_f)
        throw ShapeError("plant: R_f does not match (n, n_y, n_f)");
    dyn_s.validate();
    dyn_f.validate();
}

MatrixXd TwoArrayPlant::R_dense() const
{
    MatrixXd R(N_y(), N_u());
    R << R_s.dense(), R_f.dense();
    return R;
}

TwoArrayPlant make_plant(BlockCirculantMatrixd R_s, BlockCirculantMatrixd R_f, ActuatorDynamics dyn_s,
                         ActuatorDynamics dyn_f)
{
    if (R_s.cells() != R_f.cells() || R_s.block_rows() != R_f.block_rows())
        throw ShapeError("make_plant: R_s and R_f must share cells and sensors");
    TwoArrayPlant p;
    p.n = R_s.cells();
    p.n_y = R_s.block_rows();
    p.n_s = R_s.block_cols();
    p.n_f = R_f.block_cols();
    p.R_s = std::move(R_s);
    p.R_f = std::move(R_f);
    p.dyn_s = dyn_s;
    p.dyn_f = dyn_f;
    p.validate();
    return p;
}

// ---------------------------------------------------------------- config

void RingConfig::validate() const
{
    if (n < 1 || n_y < 1 || n_s < 1 || n_f < 0)
        throw ConfigError("ring: n, n_y, n_s must be >= 1 and n_f >= 0");
    if (n_s != n_y)
        throw ConfigError("ring: the per-cell slow response must be square (n_s == n_y)");
    if (n_f > n_s)
        throw ConfigError("ring: n_f must not exceed n_s");
    if (!(a_s > 0.0) || !(a_f > 0.0))
        throw ConfigError("ring: actuator bandwidths must be positive");
    if (mu < 0)
        throw ConfigError("ring: mu must be non-negative");
    if (!(tau_hz > 0.0))
        throw ConfigError("ring: tau_hz must be positive");
    if (!(decay > 0.0))
        throw ConfigError("ring: decay must be positive");
    if (!(gain > 0.0) || !(fast_strength > 0.0))
        throw ConfigError("ring: gain and fast_strength must be positive");
}

nlohmann::json RingConfig::to_json() const
{
    return {{"n", n},          {"n_y", n_y},       {"n_s", n_s},
            {"n_f", n_f},      {"a_s", a_s},       {"a_f", a_f},
            {"mu", mu},        {"tau_hz", tau_hz}, {"decay", decay},
            {"seed", seed},    {"gain", gain},     {"fast_strength", fast_strength},
            {"oscillation", oscillation}};
}

RingConfig RingConfig::from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw ConfigError("ring config must be a JSON object");
    static const char* known[] = {"n",      "n_y",   "n_s",  "n_f",  "a_s",           "a_f",        "mu",
                                  "tau_hz", "decay", "seed", "gain", "fast_strength", "oscillation"};
    for (const auto& [key, _] : j.items())
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
            std::end(known))
            throw ConfigError("ring config: unknown key '" + key + "'");
    RingConfig c;
    try
    {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key))
                field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("n", c.n);
        get("n_y", c.n_y);
        get("n_s", c.n_s);
        get("n_f", c.n_f);
        get("a_s", c.a_s);
        get("a_f", c.a_f);
        get("mu", c.mu);
        get("tau_hz", c.tau_hz);
        get("decay", c.decay);
        get("seed", c.seed);
        get("gain", c.gain);
        get("fast_strength", c.fast_strength);
        get("oscillation", c.oscillation);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("ring config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json parse_json_text(const std::string& text, const std::string& origin)
{
    try
    {
        return nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        std::size_t line = 1, col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < stop; ++i)
        {
            if (text[i] == '\n')
            {
                ++line;
                col = 1;
            }
            else
                ++col;
        }
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": malformed JSON: " + e.what());
    }
}

nlohmann::json load_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path.string());
}

RingConfig load_ring_config(const std::filesystem::path& path)
{
    return RingConfig::from_json(load_json_file(path));
}

// ---------------------------------------------------------------- generator

TwoArrayPlant generate_synthetic_ring(const RingConfig& cfg)
{
    cfg.validate();
    const Index n = cfg.n, ny = cfg.n_y, ns = cfg.n_s, nf = cfg.n_f;

    // local positions and gains, identical in every cell
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd spos(ny), apos(ns), sg(ny), ag(ns);
    for (Index i = 0; i < ny; ++i)
        spos(i) = (static_cast<double>(i) + 0.5) / static_cast<double>(ny) + 0.2 * unit(rng) / static_cast<double>(ny);
    for (Index j = 0; j < ns; ++j)
        apos(j) = (static_cast<double>(j) + 0.5) / static_cast<double>(ns) + 0.2 * unit(rng) / static_cast<double>(ns);
    for (Index i = 0; i < ny; ++i)
        sg(i) = 1.0 + 0.1 * normal(rng);
    for (Index j = 0; j < ns; ++j)
        ag(j) = 1.0 + 0.1 * normal(rng);

    const double nd = static_cast<double>(n);
    std::vector<MatrixXd> bs, bf;
    bs.reserve(static_cast<std::size_t>(n));
    bf.reserve(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k)
    {
        MatrixXd b(ny, ns);
        for (Index i = 0; i < ny; ++i)
            for (Index j = 0; j < ns; ++j)
            {
                double delta = std::fmod(std::abs(static_cast<double>(k) + apos(j) - spos(i)), nd);
                const double d = std::min(delta, nd - delta);
                b(i, j) = cfg.gain * sg(i) * ag(j) * std::exp(-cfg.decay * d) *
                          std::cos(2.0 * std::numbers::pi * cfg.oscillation * d);
            }
        MatrixXd f(ny, nf);
        for (Index j = 0; j < nf; ++j)
            f.col(j) = cfg.fast_strength * b.col((j * ns) / nf);
        bs.push_back(std::move(b));
        bf.push_back(std::move(f));
    }
    return make_plant(BlockCirculantMatrixd(std::move(bs)), BlockCirculantMatrixd(std::move(bf)), cfg.dyn_s(),
                      cfg.dyn_f());
}

// ---------------------------------------------------------------- decomposition

FourierForm fourier_decompose(const TwoArrayPlant& p)
{
    p.validate();
    return {block_diagonalize(p.R_s), block_diagonalize(p.R_f)};
}

namespace
{

MatrixXcd block_diag(const std::vector<ModeCell>& cells, MatrixXcd ModeCell::*member)
{
    Index rows = 0, cols = 0;
    for (const auto& c : cells)
    {
        rows += (c.*member).rows();
        cols += (c.*member).cols();
    }
    MatrixXcd D = MatrixXcd::Zero(rows, cols);
    Index r = 0, k = 0;
    for (const auto& c : cells)
    {
        const auto& b = c.*member;
        D.block(r, k, b.rows(), b.cols()) = b;
        r += b.rows();
        k += b.cols();
    }
    return D;
}

} // namespace

MatrixXcd ModalSystem::X() const { return block_diag(cells, &ModeCell::X); }
MatrixXcd ModalSystem::U_s() const { return block_diag(cells, &ModeCell::U_s); }
MatrixXcd ModalSystem::U_f() const { return block_diag(cells, &ModeCell::U_f); }
MatrixXcd ModalSystem::S_s() const { return block_diag(cells, &ModeCell::S_s); }
MatrixXcd ModalSystem::S_f() const { return block_diag(cells, &ModeCell::S_f); }

std::vector<ModeRow> ModalSystem::mode_table() const
{
    std::vector<ModeRow> rows;
    for (Index i = 0; i < n; ++i)
    {
        const auto& c = cells[static_cast<std::size_t>(i)];
        for (Index j = 0; j < n_s; ++j)
        {
            const bool tiso = j < n_f;
            rows.push_back({i, j, tiso, c.S_s(j, j).real(), tiso ? c.S_f(j, j).real() : 0.0});
        }
    }
    return rows;
}

ModalSystem modal_decompose(const BlockDiagonalForm& Rhat_s, const BlockDiagonalForm& Rhat_f,
                            std::optional<double> rank_tol)
{
    if (Rhat_s.n != Rhat_f.n || Rhat_s.p != Rhat_f.p)
        throw ShapeError("modal_decompose: slow and fast forms must share cells and sensors");
    if (Rhat_s.p != Rhat_s.m)
        throw ShapeError("modal_decompose: per-cell slow response must be square");
    ModalSystem ms;
    ms.n = Rhat_s.n;
    ms.n_y = Rhat_s.p;
    ms.n_s = Rhat_s.m;
    ms.n_f = Rhat_f.m;
    ms.cells.resize(static_cast<std::size_t>(ms.n));

    parallel_for(ms.n, [&](Index i) {
        try
        {
            auto f = gsvd<Complex>(Rhat_s.beta[static_cast<std::size_t>(i)], Rhat_f.beta[static_cast<std::size_t>(i)],
                                   rank_tol);
            ModeCell c;
            c.X = f.X;
            c.U_s = f.U_A;
            c.U_f = f.U_B;
            c.S_s = f.core_A().cast<Complex>();
            c.S_f = f.core_B().cast<Complex>();
            c.cond_X = condition_report(f).cond_X;
            c.factors = std::move(f);
            ms.cells[static_cast<std::size_t>(i)] = std::move(c);
        }
        catch (const Error& e)
        {
            throw CellError("GSVD failed in cell " + std::to_string(i) + ": " + e.what(), i);
        }
    });
    return ms;
}

MatrixXcd cell_transform(const Eigen::Ref<const VectorXcd>& x, Index n)
{
    if (n < 1 || x.size() % n != 0)
        throw ShapeError("cell_transform: length is not a multiple of n");
    const Index p = x.size() / n;
    MatrixXcd G(n, n);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (Index k = 0; k < n; ++k)
        for (Index j = 0; j < n; ++j)
            G(k, j) = s * std::conj(twiddle(j * k, n));
    const MatrixXcd xp = Eigen::Map<const MatrixXcd, 0, Eigen::OuterStride<>>(x.data(), p, n, Eigen::OuterStride<>(p));
    return xp * G;
}

VectorXcd inverse_cell_transform(const MatrixXcd& cells)
{
    const Index p = cells.rows(), n = cells.cols();
    MatrixXcd G(n, n);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < n; ++k)
            G(j, k) = s * twiddle(j * k, n);
    const MatrixXcd yp = cells * G;
    return Eigen::Map<const VectorXcd>(yp.data(), p * n);
}

ModalDisturbance modal_disturbance(const ModalSystem& ms, const MatrixXcd& dhat, double cond_warn)
{
    if (dhat.rows() != ms.n_y || dhat.cols() != ms.n)
        throw ShapeError("modal_disturbance: expected an n_y x n array of Fourier coefficients");
    ModalDisturbance out;
    out.coeffs.resize(ms.n_y, ms.n);
    for (Index i = 0; i < ms.n; ++i)
    {
        const auto& c = ms.cells[static_cast<std::size_t>(i)];
        out.coeffs.col(i) = c.X.colPivHouseholderQr().solve(dhat.col(i));
        out.worst_cond = std::max(out.worst_cond, c.cond_X);
    }
    if (out.worst_cond > cond_warn)
    {
        out.ill_conditioned = true;
        std::ostringstream os;
        os << "X is ill-conditioned (cond " << out.worst_cond << "); modal disturbance is unreliable";
        out.warning = os.str();
    }
    return out;
}

SimPlant to_sim_plant(const TwoArrayPlant& p)
{
    p.validate();
    SimPlant s;
    s.n = p.n;
    s.n_y = p.n_y;
    s.arrays.push_back({"slow", p.R_s, p.dyn_s});
    s.arrays.push_back({"fast", p.R_f, p.dyn_f});
    return s;
}

SimPlant hypothetical_plant(const TwoArrayPlant& p)
{
    p.validate();
    SimPlant s;
    s.n = p.n;
    s.n_y = p.n_y;
    s.arrays.push_back({"fast", p.n_f > 0 ? hconcat(p.R_s, p.R_f) : p.R_s, p.dyn_f});
    return s;
}

} // namespace xdctrl
