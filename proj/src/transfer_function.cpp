#include "xdctrl/transfer_function.hpp"

#include <cmath>

#include <unsupported/Eigen/Polynomials>

namespace xdctrl
{

namespace
{

Complex poly_eval_inverse(const std::vector<double>& c, Complex zinv)
{
    // Horner in z^-1
    Complex acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it)
        acc = acc * zinv + *it;
    return acc;
}

std::vector<double> shifted(const std::vector<double>& c, int k)
{
    std::vector<double> out(static_cast<std::size_t>(k), 0.0);
    out.insert(out.end(), c.begin(), c.end());
    return out;
}

std::vector<double> poly_add(const std::vector<double>& a, const std::vector<double>& b, double sb)
{
    std::vector<double> out(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i)
        out[i] += sb * b[i];
    return out;
}

TransferFunction combine(const TransferFunction& a, const TransferFunction& b, double sb)
{
    const int d = std::min(a.delay, b.delay);
    TransferFunction r;
    r.delay = d;
    r.num = poly_add(poly_multiply(shifted(a.num, a.delay - d), b.den),
                     poly_multiply(shifted(b.num, b.delay - d), a.den), sb);
    r.den = poly_multiply(a.den, b.den);
    return r.normalized();
}

} // namespace

std::vector<double> poly_multiply(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.empty() || b.empty())
        return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            out[i + j] += a[i] * b[j];
    return out;
}

Complex TransferFunction::eval(Complex z) const
{
    const Complex zinv = 1.0 / z;
    const Complex d = poly_eval_inverse(den, zinv);
    if (std::abs(d) == 0.0)
        throw DomainError("TransferFunction::eval: z is a pole");
    return std::pow(zinv, delay) * poly_eval_inverse(num, zinv) / d;
}

Complex TransferFunction::frequency_response(double omega, double tau) const
{
    return eval(std::polar(1.0, omega * tau));
}

double TransferFunction::dc_gain() const
{
    return eval(Complex(1.0, 0.0)).real();
}

std::vector<Complex> TransferFunction::poles() const
{
    // a_0 z^N + a_1 z^{N-1} + ... + a_N; Eigen wants increasing powers.
    std::size_t N = den.size();
    while (N > 1 && den[N - 1] == 0.0)
        --N;
    if (N <= 1)
        return {};
    Eigen::VectorXd coeffs(static_cast<Index>(N));
    for (std::size_t k = 0; k < N; ++k)
        coeffs(static_cast<Index>(N - 1 - k)) = den[k];
    Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
    solver.compute(coeffs);
    const auto& roots = solver.roots();
    return {roots.data(), roots.data() + roots.size()};
}

bool TransferFunction::is_stable() const
{
    for (const auto& p : poles())
        if (!(std::abs(p) < 1.0))
            return false;
    return true;
}

TransferFunction TransferFunction::normalized() const
{
    TransferFunction r = *this;
    if (r.den.empty() || r.den.front() == 0.0)
        throw DomainError("TransferFunction: leading denominator coefficient is zero");
    const double a0 = r.den.front();
    for (auto& c : r.num)
        c /= a0;
    for (auto& c : r.den)
        c /= a0;
    while (r.num.size() > 1 && r.num.back() == 0.0)
        r.num.pop_back();
    while (r.den.size() > 1 && r.den.back() == 0.0)
        r.den.pop_back();
    // leading zeros of the numerator become delay
    std::size_t lead = 0;
    while (lead + 1 < r.num.size() && r.num[lead] == 0.0)
        ++lead;
    if (lead > 0)
    {
        r.num.erase(r.num.begin(), r.num.begin() + static_cast<std::ptrdiff_t>(lead));
        r.delay += static_cast<int>(lead);
    }
    return r;
}

TransferFunction TransferFunction::inverse() const
{
    if (num.empty() || num.front() == 0.0)
        throw DomainError("TransferFunction::inverse: leading numerator coefficient is zero");
    TransferFunction r;
    r.delay = -delay;
    r.num = den;
    r.den = num;
    return r.normalized();
}

TransferFunction operator*(const TransferFunction& a, const TransferFunction& b)
{
    TransferFunction r;
    r.delay = a.delay + b.delay;
    r.num = poly_multiply(a.num, b.num);
    r.den = poly_multiply(a.den, b.den);
    return r.normalized();
}

TransferFunction operator+(const TransferFunction& a, const TransferFunction& b)
{
    return combine(a, b, 1.0);
}

TransferFunction operator-(const TransferFunction& a, const TransferFunction& b)
{
    return combine(a, b, -1.0);
}

TransferFunction operator*(double s, const TransferFunction& a)
{
    TransferFunction r = a;
    for (auto& c : r.num)
        c *= s;
    return r;
}

std::vector<double> impulse_response(const TransferFunction& h0, Index n)
{
    if (h0.delay < 0)
        throw SynthesisError("impulse_response: non-causal transfer function");
    const TransferFunction h = h0.normalized();
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    // long division: h_k = b_k - sum_{i>=1} a_i h_{k-i}
    const Index len = n - h.delay;
    std::vector<double> q(static_cast<std::size_t>(std::max<Index>(len, 0)), 0.0);
    for (Index k = 0; k < len; ++k)
    {
        double v = static_cast<std::size_t>(k) < h.num.size() ? h.num[static_cast<std::size_t>(k)] : 0.0;
        for (std::size_t i = 1; i < h.den.size() && static_cast<Index>(i) <= k; ++i)
            v -= h.den[i] * q[static_cast<std::size_t>(k) - i];
        q[static_cast<std::size_t>(k)] = v;
        out[static_cast<std::size_t>(k + h.delay)] = v;
    }
    return out;
}

std::vector<double> step_response(const TransferFunction& h, Index n)
{
    auto r = impulse_response(h, n);
    double acc = 0.0;
    for (auto& v : r)
        v = (acc += v);
    return r;
}

FilterBank::FilterBank(const TransferFunction& h, Index channels) : h_(h.normalized()), channels_(channels)
{
    if (h_.delay < 0)
        throw SynthesisError("FilterBank: transfer function has negative delay (non-causal)");
    b_ = h_.num;
    a_ = h_.den;
    order_ = static_cast<Index>(std::max(b_.size(), a_.size())) - 1;
    b_.resize(static_cast<std::size_t>(order_ + 1), 0.0);
    a_.resize(static_cast<std::size_t>(order_ + 1), 0.0);
    reset();
}

void FilterBank::reset()
{
    state_ = MatrixXcd::Zero(order_, channels_);
    delay_line_.assign(static_cast<std::size_t>(h_.delay), VectorXcd::Zero(channels_));
    delay_pos_ = 0;
}

void FilterBank::step(const Eigen::Ref<const VectorXcd>& x_in, Eigen::Ref<VectorXcd> y)
{
    if (x_in.size() != channels_ || y.size() != channels_)
        throw ShapeError("FilterBank::step: channel count mismatch");
    VectorXcd x = x_in;
    if (!delay_line_.empty())
    {
        auto& slot = delay_line_[static_cast<std::size_t>(delay_pos_)];
        slot.swap(x);
        delay_pos_ = (delay_pos_ + 1) % static_cast<Index>(delay_line_.size());
    }
    for (Index c = 0; c < channels_; ++c)
    {
        const Complex xc = x(c);
        const Complex yc = b_[0] * xc + (order_ > 0 ? state_(0, c) : Complex(0.0));
        for (Index i = 0; i + 1 < order_; ++i)
            state_(i, c) = b_[static_cast<std::size_t>(i + 1)] * xc - a_[static_cast<std::size_t>(i + 1)] * yc +
                           state_(i + 1, c);
        if (order_ > 0)
            state_(order_ - 1, c) =
                b_[static_cast<std::size_t>(order_)] * xc - a_[static_cast<std::size_t>(order_)] * yc;
        y(c) = yc;
    }
}

} // namespace xdctrl
