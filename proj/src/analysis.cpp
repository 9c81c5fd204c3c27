#include "xdctrl/analysis.hpp"

#include <charconv>
#include <fstream>
#include <future>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace xdctrl
{

MatrixXd SpectrumResult::normalized() const
{
    if (!(normalization > 0.0))
        return MatrixXd::Zero(power.rows(), power.cols());
    return power / normalization;
}

SpectrumResult power_spectrum(const MatrixXd& x, const WelchConfig& cfg)
{
    const Index N = x.rows();
    if (N < 256)
        throw DomainError("power_spectrum: at least 256 samples are required (got " + std::to_string(N) + ")");
    if (!(cfg.overlap >= 0.0 && cfg.overlap < 1.0) || cfg.segment < 2 || !(cfg.fs > 0.0))
        throw DomainError("power_spectrum: invalid Welch configuration");
    const Index seg = std::min(cfg.segment, N);
    const Index hop = std::max<Index>(1, static_cast<Index>(std::llround(static_cast<double>(seg) * (1.0 - cfg.overlap))));
    const Index nseg = 1 + (N - seg) / hop;
    const Index bins = seg / 2 + 1;

    VectorXd w(seg);
    for (Index i = 0; i < seg; ++i)
        w(i) = cfg.window == Window::hann
                   ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg))
                   : 1.0;
    const double s1 = w.sum();
    const double s2 = w.squaredNorm();
    const double scale = cfg.scaling == Scaling::power ? 1.0 / (s1 * s1) : 1.0 / (cfg.fs * s2);

    SpectrumResult out;
    out.freqs.resize(bins);
    for (Index k = 0; k < bins; ++k)
        out.freqs(k) = static_cast<double>(k) * cfg.fs / static_cast<double>(seg);
    out.power = MatrixXd::Zero(bins, x.cols());

    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> buf(static_cast<std::size_t>(seg));
    std::vector<Complex> coef;
    for (Index c = 0; c < x.cols(); ++c)
        for (Index s = 0; s < nseg; ++s)
        {
            for (Index i = 0; i < seg; ++i)
                buf[static_cast<std::size_t>(i)] = w(i) * x(s * hop + i, c);
            fft.fwd(coef, buf);
            for (Index k = 0; k < bins; ++k)
            {
                const bool edge = k == 0 || (seg % 2 == 0 && k == seg / 2);
                out.power(k, c) += (edge ? 1.0 : 2.0) * std::norm(coef[static_cast<std::size_t>(k)]) * scale;
            }
        }
    out.power /= static_cast<double>(nseg);
    out.normalization = out.power.size() ? out.power.maxCoeff() : 0.0;
    return out;
}

IbmCurve cumulative_integral(const VectorXd& freqs, const VectorXd& integrand, double up_to)
{
    if (freqs.size() != integrand.size())
        throw ShapeError("cumulative_integral: grid and integrand differ in length");
    Index m = freqs.size();
    if (up_to >= 0.0)
    {
        m = 0;
        while (m < freqs.size() && freqs(m) <= up_to)
            ++m;
    }
    IbmCurve c;
    c.freqs = freqs.head(m);
    c.ibm = VectorXd::Zero(m);
    for (Index k = 1; k < m; ++k)
    {
        const double df = freqs(k) - freqs(k - 1);
        if (df < 0.0)
            throw DomainError("cumulative_integral: frequency grid must be ascending");
        c.ibm(k) = c.ibm(k - 1) + 0.5 * df * (std::abs(integrand(k)) + std::abs(integrand(k - 1)));
    }
    return c;
}

IbmCurve ibm_from_trace(const VectorXd& y, const WelchConfig& cfg, double up_to)
{
    WelchConfig c = cfg;
    c.scaling = Scaling::density;
    const auto s = power_spectrum(y, c);
    return cumulative_integral(s.freqs, s.power.col(0).cwiseMax(0.0).cwiseSqrt(), up_to);
}

IbmCurve ibm_from_response(const VectorXd& freqs, const VectorXcd& S, const VectorXd& d_abs, double up_to)
{
    if (S.size() != freqs.size() || d_abs.size() != freqs.size())
        throw ShapeError("ibm_from_response: inputs differ in length");
    return cumulative_integral(freqs, (S.cwiseAbs().array() * d_abs.cwiseAbs().array()).matrix(), up_to);
}

SpectrumResult correction_spectrum(const SimulationTrace& tr, const WelchConfig& cfg)
{
    SpectrumResult out;
    for (std::size_t p = 0; p < tr.corrections.size(); ++p)
    {
        const auto s = power_spectrum(tr.corrections[p], cfg);
        if (p == 0)
        {
            out.freqs = s.freqs;
            out.power = MatrixXd::Zero(s.freqs.size(), static_cast<Index>(tr.corrections.size()));
        }
        out.power.col(static_cast<Index>(p)) = s.power.rowwise().sum();
    }
    out.normalization = out.power.size() ? out.power.maxCoeff() : 0.0;
    return out;
}

Comparison compare_controllers(const MidRangingController& present, const MidRangingController& hypothetical,
                               const MatrixXd& disturbance, Index sensor, const WelchConfig& cfg,
                               bool with_corrections)
{
    if (present.cells() != hypothetical.cells() || present.n_y() != hypothetical.n_y())
        throw ShapeError("compare_controllers: controllers were designed for different sensor footprints");
    const Index Ny = present.cells() * present.n_y();
    if (disturbance.cols() != Ny)
        throw ShapeError("compare_controllers: disturbance width does not match N_y");
    if (sensor < 0 || sensor >= Ny)
        throw ShapeError("compare_controllers: sensor index out of range");

    auto run = [&](const MidRangingController& ctrl, bool corrections) {
        SimulationConfig sc;
        sc.steps = disturbance.rows();
        sc.controller = ctrl;
        sc.disturbance = &disturbance;
        sc.record.u = false;
        sc.record.sensors = {sensor};
        sc.record.corrections = corrections;
        return run_closed_loop(std::move(sc));
    };
    auto fut = std::async(std::launch::async, [&] { return run(hypothetical, false); });
    const SimulationTrace tp = run(present, with_corrections);
    const SimulationTrace th = fut.get();

    Comparison c;
    c.sensor = sensor;
    c.open_loop = ibm_from_trace(disturbance.col(sensor), cfg);
    c.present = ibm_from_trace(tp.y.col(0), cfg);
    c.hypothetical = ibm_from_trace(th.y.col(0), cfg);
    c.ratio.resize(c.present.ibm.size());
    for (Index k = 0; k < c.ratio.size(); ++k)
    {
        const double a = c.present.ibm(k), b = c.hypothetical.ibm(k);
        c.ratio(k) = b > 0.0 ? a / b : (a == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
    }
    if (with_corrections)
    {
        c.correction_power = correction_spectrum(tp, cfg);
        c.correction_names = tp.names;
    }
    return c;
}

// ---------------------------------------------------------------- export

namespace
{

void put_number(std::ostream& os, double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
}

void write_columns(const std::filesystem::path& path, const SpectrumResult& s, const std::vector<std::string>& names,
                   bool normalized, char sep, const char* comment)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    const MatrixXd P = normalized ? s.normalized() : s.power;
    out << comment << "freq_hz";
    for (Index c = 0; c < P.cols(); ++c)
        out << sep << (static_cast<std::size_t>(c) < names.size() ? names[static_cast<std::size_t>(c)]
                                                                   : "ch" + std::to_string(c));
    out << '\n';
    for (Index k = 0; k < P.rows(); ++k)
    {
        put_number(out, s.freqs(k));
        for (Index c = 0; c < P.cols(); ++c)
        {
            out << sep;
            put_number(out, P(k, c));
        }
        out << '\n';
    }
}

} // namespace

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumResult& s,
                        const std::vector<std::string>& names, bool normalized)
{
    write_columns(path, s, names, normalized, ',', "");
}

void write_spectrum_dat(const std::filesystem::path& path, const SpectrumResult& s,
                        const std::vector<std::string>& names, bool normalized)
{
    write_columns(path, s, names, normalized, ' ', "# ");
}

void write_ibm_csv(const std::filesystem::path& path, const std::vector<std::pair<std::string, IbmCurve>>& curves)
{
    if (curves.empty())
        throw ShapeError("write_ibm_csv: no curves");
    SpectrumResult s;
    s.freqs = curves.front().second.freqs;
    s.power.resize(s.freqs.size(), static_cast<Index>(curves.size()));
    std::vector<std::string> names;
    for (std::size_t c = 0; c < curves.size(); ++c)
    {
        if (curves[c].second.freqs.size() != s.freqs.size())
            throw ShapeError("write_ibm_csv: curves use different grids");
        s.power.col(static_cast<Index>(c)) = curves[c].second.ibm;
        names.push_back(curves[c].first);
    }
    write_spectrum_csv(path, s, names);
}

nlohmann::json comparison_summary(const Comparison& c)
{
    auto last = [](const IbmCurve& k) { return k.ibm.size() ? k.ibm(k.ibm.size() - 1) : 0.0; };
    return {{"sensor_index", c.sensor},
            {"ibm_final", {{"present", last(c.present)}, {"hypothetical", last(c.hypothetical)},
                           {"open_loop", last(c.open_loop)}}},
            {"ratio", c.ratio.size() ? c.ratio(c.ratio.size() - 1) : 1.0}};
}

} // namespace xdctrl
