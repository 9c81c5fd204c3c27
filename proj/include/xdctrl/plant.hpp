#ifndef XDCTRL_PLANT_HPP
#define XDCTRL_PLANT_HPP

///
/// \file plant.hpp
///
/// Two-array storage-ring model
///
///   y[k] = R_s g_s(z^-1) u_s[k] + R_f g_f(z^-1) u_f[k] + d[k]
///
/// with block-circulant R_s (N_y x N_s), R_f (N_y x N_f) and first-order
/// actuator dynamics behind a delay of mu + 1 samples. The decomposition
/// pipeline maps the plant first to Fourier cells and then, per cell, to
/// generalized modes via the GSVD of the cell pair (sigma_i, phi_i).
///

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "xdctrl/block_circulant.hpp"
#include "xdctrl/gsvd.hpp"
#include "xdctrl/transfer_function.hpp"

namespace xdctrl
{

/// g(z^-1) = z^{-(mu+1)} (1 - e^{-a tau}) / (1 - z^-1 e^{-a tau}).
struct ActuatorDynamics
{
    double a = 80.0;     ///< bandwidth, rad/s
    int mu = 7;          ///< loop delay, samples
    double tau = 1e-5;   ///< sampling period, s

    void validate() const;
    double pole() const { return std::exp(-a * tau); }
    TransferFunction transfer_function() const;
};

/// Frequency response of the actuator model at z. Throws DomainError at the pole.
Complex actuator_response(const ActuatorDynamics& dyn, Complex z);

struct TwoArrayPlant
{
    Index n = 0;
    Index n_y = 0, n_s = 0, n_f = 0;
    BlockCirculantMatrixd R_s;
    BlockCirculantMatrixd R_f;
    ActuatorDynamics dyn_s{80.0, 7, 1e-5};
    ActuatorDynamics dyn_f{12000.0, 7, 1e-5};

    Index N_y() const { return n * n_y; }
    Index N_s() const { return n * n_s; }
    Index N_f() const { return n * n_f; }
    Index N_u() const { return N_s() + N_f(); }

    void validate() const;
    /// Dense [R_s R_f], N_y x N_u.
    MatrixXd R_dense() const;
};

/// Plant from two block-circulant responses; dimensions are inferred.
TwoArrayPlant make_plant(BlockCirculantMatrixd R_s, BlockCirculantMatrixd R_f, ActuatorDynamics dyn_s,
                         ActuatorDynamics dyn_f);

///
/// ring.json. Keys beyond the listed defaults shape the synthetic response:
/// gain (overall scale), fast_strength (fast column relative to the slow
/// column it copies) and oscillation (spatial frequency of the cosine
/// factor, cycles per cell).
///
struct RingConfig
{
    Index n = 6;
    Index n_y = 42;
    Index n_s = 42;
    Index n_f = 24;
    double a_s = 80.0;
    double a_f = 12000.0;
    int mu = 7;
    double tau_hz = 100000.0;
    double decay = 0.3;
    std::uint64_t seed = 42;
    double gain = 10.0;
    double fast_strength = 0.5;
    double oscillation = 0.37;

    double tau() const { return 1.0 / tau_hz; }
    ActuatorDynamics dyn_s() const { return {a_s, mu, tau()}; }
    ActuatorDynamics dyn_f() const { return {a_f, mu, tau()}; }

    void validate() const;
    nlohmann::json to_json() const;
    static RingConfig from_json(const nlohmann::json& j);
};

/// Parses JSON text; syntax errors are reported as ConfigError with line and column.
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);
nlohmann::json load_json_file(const std::filesystem::path& path);
RingConfig load_ring_config(const std::filesystem::path& path);

/// Seeded block-circulant ring with exponentially decaying, oscillating
/// sensor-actuator coupling. Fast actuator k of each cell duplicates, scaled
/// by fast_strength, slow actuator floor(k n_s / n_f) of the same cell, so
/// the fast column space is contained in the slow one.
TwoArrayPlant generate_synthetic_ring(const RingConfig& cfg);

struct FourierForm
{
    BlockDiagonalForm Rhat_s;
    BlockDiagonalForm Rhat_f;
};

FourierForm fourier_decompose(const TwoArrayPlant& p);

/// GSVD factors of one Fourier cell, sigma_i = X S_s U_s^H, phi_i = X S_f U_f^H.
struct ModeCell
{
    GsvdFactors<Complex> factors;
    MatrixXcd X;    ///< n_y x n_y
    MatrixXcd U_s;  ///< n_s x n_s
    MatrixXcd U_f;  ///< n_f x n_f
    MatrixXcd S_s;  ///< n_y x n_s, diag(S_A, I_{n_s - n_f})
    MatrixXcd S_f;  ///< n_y x n_f, [S_B; 0]
    double cond_X = 0.0;
};

struct ModeRow
{
    Index cell;
    Index mode;
    bool tiso;      ///< both arrays act on the mode
    double s_slow;
    double s_fast;
};

struct ModalSystem
{
    Index n = 0;
    Index n_y = 0, n_s = 0, n_f = 0;
    std::vector<ModeCell> cells;

    Index tiso_per_cell() const { return n_f; }
    Index siso_per_cell() const { return n_s - n_f; }

    // block-diagonal concatenations over all cells
    MatrixXcd X() const;
    MatrixXcd U_s() const;
    MatrixXcd U_f() const;
    MatrixXcd S_s() const;
    MatrixXcd S_f() const;

    std::vector<ModeRow> mode_table() const;
};

/// Per-cell GSVD. Throws CellError naming the failing cell.
ModalSystem modal_decompose(const BlockDiagonalForm& Rhat_s, const BlockDiagonalForm& Rhat_f,
                            std::optional<double> rank_tol = std::nullopt);

///
/// Unitary transform across cells, (F_n^* (x) I_p) x, for x stacked as n
/// blocks of length p. Column j of the result is cell j.
///
MatrixXcd cell_transform(const Eigen::Ref<const VectorXcd>& x, Index n);
/// Inverse of cell_transform: (F_n (x) I_p) applied to the stacked columns.
VectorXcd inverse_cell_transform(const MatrixXcd& cells);

///
/// Diagnostic modal disturbance X_i^{-1} d_hat_i. The controller never
/// forms this; it is exposed for inspection only and flags cells whose X
/// is ill-conditioned.
///
struct ModalDisturbance
{
    MatrixXcd coeffs;  ///< n_y x n, column per cell
    double worst_cond = 0.0;
    bool ill_conditioned = false;
    std::string warning;
};

ModalDisturbance modal_disturbance(const ModalSystem& ms, const MatrixXcd& dhat, double cond_warn = 1e8);

/// One actuator family of a simulated plant.
struct ActuatorArray
{
    std::string name;
    BlockCirculantMatrixd R;
    ActuatorDynamics dyn;
};

/// Plant as a list of actuator families sharing the sensors.
struct SimPlant
{
    Index n = 0;
    Index n_y = 0;
    std::vector<ActuatorArray> arrays;

    Index N_y() const { return n * n_y; }
};

SimPlant to_sim_plant(const TwoArrayPlant& p);
/// All N_s + N_f actuators with the fast dynamics: response [R_s R_f].
SimPlant hypothetical_plant(const TwoArrayPlant& p);

} // namespace xdctrl

#endif // XDCTRL_PLANT_HPP
