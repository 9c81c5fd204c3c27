#ifndef XDCTRL_TRANSFER_FUNCTION_HPP
#define XDCTRL_TRANSFER_FUNCTION_HPP

///
/// \file transfer_function.hpp
///
/// Rational discrete-time transfer functions in the backward-shift operator,
///
///   H(z^-1) = z^{-delay} (b_0 + b_1 z^-1 + ... ) / (a_0 + a_1 z^-1 + ... ),
///
/// with a_0 = 1 after normalization. A negative delay denotes a predictor
/// and cannot be realized.
///

#include <vector>

#include "xdctrl/common.hpp"

namespace xdctrl
{

struct TransferFunction
{
    int delay = 0;
    std::vector<double> num{1.0};
    std::vector<double> den{1.0};

    /// H evaluated at the complex point z (not z^-1).
    Complex eval(Complex z) const;
    /// H at z = exp(i w tau).
    Complex frequency_response(double omega, double tau) const;
    /// DC gain H(1).
    double dc_gain() const;

    /// Poles in the z-plane (roots of z^N a(z^-1)).
    std::vector<Complex> poles() const;
    bool is_stable() const;
    bool is_causal() const { return delay >= 0; }

    /// Scales so den[0] = 1 and strips trailing zero coefficients.
    TransferFunction normalized() const;
    TransferFunction inverse() const;
};

TransferFunction operator*(const TransferFunction& a, const TransferFunction& b);
TransferFunction operator+(const TransferFunction& a, const TransferFunction& b);
TransferFunction operator-(const TransferFunction& a, const TransferFunction& b);
TransferFunction operator*(double s, const TransferFunction& a);

/// Polynomial product of coefficient lists in z^-1.
std::vector<double> poly_multiply(const std::vector<double>& a, const std::vector<double>& b);

/// First n samples of the impulse response by long division of num by den
/// (including the delay).
std::vector<double> impulse_response(const TransferFunction& h, Index n);
/// Cumulative sum of the impulse response.
std::vector<double> step_response(const TransferFunction& h, Index n);

///
/// A bank of identical filters, one per channel, realized in direct form II
/// transposed. Coefficient order: b = num, a = den (a_0 = 1); the state of
/// each channel has max(len(b), len(a)) - 1 entries. Inputs are complex so
/// the bank can run on Fourier-domain signals; the coefficients are real.
/// The delay of the transfer function is realized as a separate line.
///
class FilterBank
{
  public:
    FilterBank() = default;
    FilterBank(const TransferFunction& h, Index channels);

    Index channels() const { return channels_; }
    const TransferFunction& transfer_function() const { return h_; }

    /// Advances every channel by one sample. x and y may alias.
    void step(const Eigen::Ref<const VectorXcd>& x, Eigen::Ref<VectorXcd> y);
    void reset();

  private:
    TransferFunction h_;
    Index channels_ = 0;
    Index order_ = 0;
    std::vector<double> b_, a_;
    MatrixXcd state_;                 // order x channels
    std::vector<VectorXcd> delay_line_;
    Index delay_pos_ = 0;
};

} // namespace xdctrl

#endif // XDCTRL_TRANSFER_FUNCTION_HPP
