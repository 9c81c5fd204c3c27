#ifndef XDCTRL_ANALYSIS_HPP
#define XDCTRL_ANALYSIS_HPP

///
/// \file analysis.hpp
///
/// Welch spectra, integrated beam motion and the present-versus-hypothetical
/// controller comparison.
///

#include <filesystem>
#include <string>

#include "json.hpp"
#include "xdctrl/simulator.hpp"

namespace xdctrl
{

enum class Window
{
    hann,
    rectangular
};

enum class Scaling
{
    power,   ///< a sinusoid of amplitude A peaks at A^2 / 2
    density  ///< one-sided PSD; sum(psd) df equals the (windowed) mean square
};

struct WelchConfig
{
    Index segment = 4096;
    double overlap = 0.5;
    Window window = Window::hann;
    Scaling scaling = Scaling::power;
    double fs = 1e5;
};

struct SpectrumResult
{
    VectorXd freqs;        ///< Hz
    MatrixXd power;        ///< bins x channels
    double normalization = 0.0;  ///< maximum over the group

    /// power / normalization (all zero for a zero spectrum).
    MatrixXd normalized() const;
};

/// Welch periodogram of each column of x (samples x channels). At least 256
/// samples are required; the segment is shortened to the signal length.
SpectrumResult power_spectrum(const MatrixXd& x, const WelchConfig& cfg = {});

struct IbmCurve
{
    VectorXd freqs;
    VectorXd ibm;
};

/// Cumulative trapezoid of a nonnegative integrand on an ascending grid,
/// truncated at up_to (inclusive).
IbmCurve cumulative_integral(const VectorXd& freqs, const VectorXd& integrand, double up_to);

/// From a closed-loop sensor trace: integrand sqrt(PSD) of the Welch
/// density estimate.
IbmCurve ibm_from_trace(const VectorXd& y, const WelchConfig& cfg = {}, double up_to = -1.0);

/// From a sensitivity response and disturbance spectrum: integrand |S d|.
IbmCurve ibm_from_response(const VectorXd& freqs, const VectorXcd& S, const VectorXd& d_abs, double up_to = -1.0);

struct Comparison
{
    Index sensor = 0;
    IbmCurve present;
    IbmCurve hypothetical;
    IbmCurve open_loop;
    VectorXd ratio;  ///< present / hypothetical, 1 where both vanish
    /// Summed-over-sensors power of the correction delivered by each family
    /// of the first controller (empty unless requested).
    SpectrumResult correction_power;
    std::vector<std::string> correction_names;
};

///
/// Runs the open loop and both controllers on the same disturbance; each
/// controller's own internal model serves as its true plant. The two closed
/// loops run concurrently.
///
Comparison compare_controllers(const MidRangingController& present, const MidRangingController& hypothetical,
                               const MatrixXd& disturbance, Index sensor, const WelchConfig& cfg = {},
                               bool with_corrections = false);

/// PSD of the summed delivered correction sum_i |(R_p w_p)_i|^2 per family.
SpectrumResult correction_spectrum(const SimulationTrace& tr, const WelchConfig& cfg);

// exports: CSV (freq, one column per channel), gnuplot .dat and JSON summary
void write_spectrum_csv(const std::filesystem::path& path, const SpectrumResult& s,
                        const std::vector<std::string>& names, bool normalized = false);
void write_spectrum_dat(const std::filesystem::path& path, const SpectrumResult& s,
                        const std::vector<std::string>& names, bool normalized = false);
void write_ibm_csv(const std::filesystem::path& path, const std::vector<std::pair<std::string, IbmCurve>>& curves);
nlohmann::json comparison_summary(const Comparison& c);

} // namespace xdctrl

#endif // XDCTRL_ANALYSIS_HPP
