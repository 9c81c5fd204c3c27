#ifndef XDCTRL_CONTROLLER_HPP
#define XDCTRL_CONTROLLER_HPP

///
/// \file controller.hpp
///
/// Mid-ranging internal model control in generalized-mode coordinates.
///
/// Per mode the slow and fast filters are
///
///   Q_s = g_s^-1 T_s,   Q_f = g_f^-1 (T_f - T_s),
///
/// so that g_s Q_s + g_f Q_f = T_f. Targets T carry the plant delay, which
/// cancels in both filters. The full controller acts on the IMC error e:
///
///   u_p = -(F (x) I) U_p K_p Xdag_p (F^* (x) I) e,   p in {slow, fast},
///
/// with regularized gains Xdag_p = (S_p^H X^H X S_p + mu_p I)^-1 S_p^H X^H
/// evaluated per Fourier cell.
///

#include <filesystem>

#include "json.hpp"
#include "xdctrl/plant.hpp"
#include "xdctrl/transfer_function.hpp"

namespace xdctrl
{

struct ControllerConfig
{
    double lambda_s_hz = 100.0;
    double lambda_f_hz = 1400.0;
    double mu_s = 1.0;
    double mu_f = 10.0;

    nlohmann::json to_json() const;
    static ControllerConfig from_json(const nlohmann::json& j);
};

ControllerConfig load_controller_config(const std::filesystem::path& path);

/// T(z^-1) = z^{-(mu+1)} (1 - e^{-lambda tau}) / (1 - z^-1 e^{-lambda tau}).
struct ClosedLoopTarget
{
    double lambda = 0.0;  ///< rad/s
    int mu_delay = 0;
    double tau = 0.0;

    double pole() const { return std::exp(-lambda * tau); }
    TransferFunction transfer_function() const;
    Complex response(double omega) const { return transfer_function().frequency_response(omega, tau); }
};

struct Targets
{
    ClosedLoopTarget T_s;
    ClosedLoopTarget T_f;
};

/// Bandwidths in Hz, converted to rad/s as 2 pi f. Requires
/// 0 < lambda_s < lambda_f < 1 / (2 tau); DesignError otherwise.
Targets design_targets(double lambda_s_hz, double lambda_f_hz, int mu, double tau);

struct ModeFilters
{
    TransferFunction Q_s;
    TransferFunction Q_f;
};

/// Q_s = g_s^-1 T_s and Q_f = g_f^-1 (T_f - T_s). SynthesisError when the
/// result is non-causal (target delay shorter than the plant delay).
ModeFilters synthesize_mode_controllers(const ActuatorDynamics& g_s, const ActuatorDynamics& g_f,
                                        const Targets& targets);

/// 1 - k_s g_s Q_s - k_f g_f Q_f at z for a mode with static loop gains
/// k_s, k_f (product of plant gain and regularized inverse gain).
Complex mode_sensitivity(const ModeFilters& filters, const ActuatorDynamics& g_s, const ActuatorDynamics& g_f,
                         double k_s, double k_f, Complex z);

/// (S^H X^H X S + mu I)^-1 S^H X^H for one cell. DomainError if mu <= 0.
MatrixXcd regularized_inverse(const MatrixXcd& X, const MatrixXcd& S, double mu);

struct RegularizedGains
{
    std::vector<MatrixXcd> Xdag_s;  ///< per cell, n_s x n_y
    std::vector<MatrixXcd> Xdag_f;  ///< per cell, n_f x n_y

    MatrixXcd dense_s() const;
    MatrixXcd dense_f() const;
};

RegularizedGains regularized_gains(const ModalSystem& ms, double mu_s, double mu_f);

///
/// One actuator family as seen by the controller: modal gains, the modal
/// filter, the map back to actuators, and the internal model of the family.
/// Modal vectors have `channels` entries per cell; Q acts on the first
/// `active` of them and the rest are held at zero.
///
struct ControlPath
{
    std::string name;
    TransferFunction Q;
    Index channels = 0;
    Index active = 0;
    std::vector<MatrixXcd> Xdag;  ///< per cell, channels x n_y
    std::vector<MatrixXcd> U;     ///< per cell, actuators x channels
    BlockCirculantMatrixd R;      ///< internal model response
    ActuatorDynamics dyn;         ///< internal model dynamics

    Index actuators_per_cell() const { return R.block_cols(); }
};

class MidRangingController
{
  public:
    MidRangingController() = default;
    MidRangingController(Index n, Index n_y, std::vector<ControlPath> paths);

    Index cells() const { return n_; }
    Index n_y() const { return n_y_; }
    const std::vector<ControlPath>& paths() const { return paths_; }
    const ControlPath& path(Index k) const { return paths_.at(static_cast<std::size_t>(k)); }

    /// Internal model P as a plant.
    SimPlant model() const;

    /// One controller sample: IMC error e (length N_y) to actuator commands,
    /// one vector per path. Mutates the filter states.
    void step(const Eigen::Ref<const VectorXd>& e, std::vector<VectorXd>& u);
    void reset();

    /// Filtered modal commands of the last step for path k, channels x
    /// (floor(n/2)+1) cells.
    const MatrixXcd& modal_commands(Index k) const { return modal_.at(static_cast<std::size_t>(k)); }

    /// Static response: every filter replaced by its DC gain.
    VectorXd static_command(const Eigen::Ref<const VectorXd>& e, Index k) const;

    /// Per-cell sensitivity I - sum_p g_p Q_p beta_p U_p K_p Xdag_p of the
    /// perfect-model loop at z (cell j in 0..n-1).
    MatrixXcd cell_sensitivity(Index cell, Complex z) const;

    /// Physical d -> y frequency response at z, N_y x N_y complex.
    MatrixXcd sensitivity(Complex z) const;

  private:
    Index n_ = 0, n_y_ = 0, half_ = 0;
    std::vector<ControlPath> paths_;
    std::vector<FilterBank> filters_;
    std::vector<MatrixXcd> modal_;
    MatrixXcd fwd_;   ///< n x half, e -> e_hat on the retained cells
    MatrixXd inv_re_, inv_im_;  ///< half x n, real synthesis from retained cells
    std::vector<std::vector<MatrixXcd>> beta_model_;  ///< per path, all n cells

    void transform(const Eigen::Ref<const VectorXd>& e, MatrixXcd& ehat) const;
    void synthesize(const MatrixXcd& uhat, Eigen::Ref<VectorXd> u) const;
};

/// Present two-array controller from its ingredients.
MidRangingController assemble_controller(const TwoArrayPlant& model, const ModalSystem& ms,
                                         const ModeFilters& filters, const RegularizedGains& gains);

/// Everything produced by the design pipeline.
struct Design
{
    bool hypothetical = false;
    ControllerConfig config;
    FourierForm fourier;
    ModalSystem modal;
    Targets targets;
    ModeFilters filters;
    RegularizedGains gains;
    MidRangingController controller;
};

/// fourier_decompose -> modal_decompose -> design_targets ->
/// synthesize_mode_controllers -> regularized_gains -> assemble_controller.
Design design_controller(const TwoArrayPlant& plant, const ControllerConfig& cfg);

/// Comparator design: one family of N_s + N_f actuators with the fast
/// dynamics, regularization mu = 1 and closed-loop target T_f.
Design design_hypothetical(const TwoArrayPlant& plant, const ControllerConfig& cfg);

/// Writes controller.json (filters, targets, shapes) and per-cell gain files
/// under dir; returns the written paths.
std::vector<std::filesystem::path> export_controller(const MidRangingController& ctrl, const Design* design,
                                                     const std::filesystem::path& dir);
MidRangingController load_controller(const std::filesystem::path& dir);

} // namespace xdctrl

#endif // XDCTRL_CONTROLLER_HPP
