#ifndef XDCTRL_SIMULATOR_HPP
#define XDCTRL_SIMULATOR_HPP

///
/// \file simulator.hpp
///
/// Discrete-time simulation of the internal-model loop: true plant,
/// internal model and controller advance once per sample,
///
///   y[k] = sum_p R_p w_p[k] + d[k],   e[k] = y[k] - y_model[k],
///   w_p[k+1] = e^{-a tau} w_p[k] + (1 - e^{-a tau}) u_p[k - mu].
///
/// All states start at zero.
///

#include <optional>
#include <string>

#include "xdctrl/controller.hpp"

namespace xdctrl
{

///
/// First-order actuators behind a mu + 1 sample delay, one per channel.
/// output() is w[k]; advance(u[k]) moves to w[k+1].
///
template <typename Scalar>
class BasicActuatorBank
{
  public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    BasicActuatorBank() = default;
    BasicActuatorBank(const ActuatorDynamics& dyn, Index channels)
        : pole_(dyn.pole()), line_(static_cast<std::size_t>(dyn.mu + 1), Vector::Zero(channels)),
          w_(Vector::Zero(channels))
    {
        dyn.validate();
    }

    Index channels() const { return w_.size(); }
    const Vector& output() const { return w_; }

    void advance(const Eigen::Ref<const Vector>& u)
    {
        // slot pos_ holds u[k - mu] once u[k] is written to the slot after it
        line_[pos_] = u;
        pos_ = (pos_ + 1) % line_.size();
        const Vector& delayed = line_[pos_];
        w_ = pole_ * w_ + (1.0 - pole_) * delayed;
    }

    void reset()
    {
        for (auto& v : line_)
            v.setZero();
        w_.setZero();
        pos_ = 0;
    }

  private:
    double pole_ = 0.0;
    std::vector<Vector> line_;
    std::size_t pos_ = 0;
    Vector w_;
};

using ActuatorBank = BasicActuatorBank<double>;

///
/// Physical-space plant state. Each actuator family has its own bank and an
/// FFT-structured product with its response. gain_error scales the response
/// of each family by (1 + gain_error[p]) for mismatch studies.
///
class PlantSimulator
{
  public:
    PlantSimulator(const SimPlant& plant, std::vector<double> gain_error = {});

    const SimPlant& plant() const { return plant_; }
    Index arrays() const { return static_cast<Index>(banks_.size()); }

    /// y[k] with the current actuator state; the delivered correction of
    /// each family is available from correction(p) afterwards.
    void output(const Eigen::Ref<const VectorXd>& d, Eigen::Ref<VectorXd> y);
    void advance(const std::vector<VectorXd>& u);
    const VectorXd& correction(Index p) const { return corr_.at(static_cast<std::size_t>(p)); }
    void reset();

  private:
    SimPlant plant_;
    std::vector<double> gain_;
    std::vector<ActuatorBank> banks_;
    std::vector<CirculantOperator> ops_;
    std::vector<VectorXd> corr_;
    CirculantOperator::Workspace ws_;
};

/// y[k] from the present state and d[k], then advance with u[k].
VectorXd step_plant(PlantSimulator& state, const std::vector<VectorXd>& u, const Eigen::Ref<const VectorXd>& d);

struct RecordFlags
{
    bool y = true;
    bool u = true;
    bool y_model = false;
    bool corrections = false;
    std::vector<Index> sensors;  ///< recorded columns of y; empty records every sensor
};

struct SimulationConfig
{
    Index steps = 0;
    const SimPlant* plant = nullptr;  ///< true plant; the controller's model when null
    MidRangingController controller;
    const MatrixXd* disturbance = nullptr;  ///< at least steps x N_y
    std::vector<double> gain_error;
    RecordFlags record;
};

struct SimulationTrace
{
    MatrixXd y;                          ///< steps x (recorded sensors)
    std::vector<std::string> names;      ///< actuator family per entry of u
    std::vector<MatrixXd> u;             ///< steps x actuators
    std::vector<MatrixXd> corrections;   ///< steps x N_y, R_p w_p
    MatrixXd y_model;

    const MatrixXd& u_of(const std::string& name) const;
};

/// Closed loop of the internal-model structure. Deterministic; throws
/// DivergenceError at the first non-finite sample.
SimulationTrace run_closed_loop(SimulationConfig cfg);

///
/// The same loop simulated in generalized-mode coordinates: every cell of
/// the modal system is advanced with
///   y~ = S_s w~_s + S_f w~_f + d~,  d~ = X^-1 d_hat,
/// and the outputs are mapped back to physical space as (F (x) I) X y~.
/// Independent of the physical-space route; used to check equivalence.
///
MatrixXd run_modal_closed_loop(const Design& design, const ActuatorDynamics& dyn_s, const ActuatorDynamics& dyn_f,
                               const MatrixXd& disturbance, Index steps);

// ---------------------------------------------------------------- disturbances

enum class TemporalProfile
{
    white,
    pink  ///< amplitude 1/max(f, 1 Hz) plus a broadband floor
};

enum class ModeWeighting
{
    uniform,
    singular,  ///< (sigma_j / sigma_max)^gamma
    custom
};

struct DisturbanceProfile
{
    TemporalProfile temporal = TemporalProfile::pink;
    double floor = 1e-4;
    ModeWeighting weighting = ModeWeighting::singular;
    double gamma = 1.0;
    VectorXd weights;  ///< used with ModeWeighting::custom, length N_y
    double fs = 1e5;
};

/// steps x N_y mode-space coloured noise mapped through the left singular
/// vectors of R (N_y x N_u). Deterministic per seed.
MatrixXd synthesize_disturbance(const MatrixXd& R, Index steps, std::uint64_t seed,
                                const DisturbanceProfile& profile = {});

/// Left singular basis (N_y x N_y) and singular values padded with zeros to N_y.
struct ModeBasis
{
    MatrixXd W;
    VectorXd sigma;
};
ModeBasis mode_basis(const MatrixXd& R);

// Four-step measurement augmentation.

/// (1) Appends copies of the first target - raw columns (cycling when more
/// columns are needed than exist).
MatrixXd copy_append(const MatrixXd& raw, Index target);
/// (2) Mode coordinates M = Y W.
MatrixXd to_mode_space(const MatrixXd& Y, const MatrixXd& W);
/// (3) Scales mode column j by weights(j).
MatrixXd rescale_modes(const MatrixXd& M, const VectorXd& weights);
/// (4) Back to measurement space, Y = M W^T.
MatrixXd from_mode_space(const MatrixXd& M, const MatrixXd& W);

/// Monotone weighting (sigma_j / sigma_max)^gamma; gamma = 0 gives ones.
VectorXd singular_value_weights(const VectorXd& sigma, double gamma);

MatrixXd augment_measurements(const MatrixXd& raw, Index target, const MatrixXd& R_target, double gamma = 0.0);

} // namespace xdctrl

#endif // XDCTRL_SIMULATOR_HPP
