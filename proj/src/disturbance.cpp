#include <random>

#include <unsupported/Eigen/FFT>

#include "xdctrl/simulator.hpp"

namespace xdctrl
{

ModeBasis mode_basis(const MatrixXd& R)
{
    const Index ny = R.rows();
    Eigen::JacobiSVD<MatrixXd> svd(R, Eigen::ComputeFullU);
    ModeBasis b;
    b.W = svd.matrixU();
    b.sigma = VectorXd::Zero(ny);
    b.sigma.head(svd.singularValues().size()) = svd.singularValues();
    return b;
}

VectorXd singular_value_weights(const VectorXd& sigma, double gamma)
{
    if (gamma == 0.0)
        return VectorXd::Ones(sigma.size());
    const double smax = sigma.size() ? sigma.maxCoeff() : 0.0;
    if (!(smax > 0.0))
        return VectorXd::Zero(sigma.size());
    return (sigma.array() / smax).pow(gamma).matrix();
}

namespace
{

// shapes a unit-variance white sequence by a real amplitude profile and
// renormalizes to unit variance
void shape_pink(Eigen::Ref<VectorXd> x, double fs, double floor, Eigen::FFT<double>& fft)
{
    const Index N = x.size();
    std::vector<double> buf(x.data(), x.data() + N);
    std::vector<Complex> bins;
    fft.fwd(bins, buf);
    for (std::size_t k = 0; k < bins.size(); ++k)
    {
        const double f = static_cast<double>(k) * fs / static_cast<double>(N);
        bins[k] *= 1.0 / std::max(f, 1.0) + floor;
    }
    fft.inv(buf, bins, N);
    Eigen::Map<const VectorXd> shaped(buf.data(), N);
    const double mean = shaped.mean();
    const double sd = std::sqrt((shaped.array() - mean).square().mean());
    x = sd > 0.0 ? VectorXd(shaped / sd) : VectorXd(shaped);
}

} // namespace

MatrixXd synthesize_disturbance(const MatrixXd& R, Index steps, std::uint64_t seed, const DisturbanceProfile& profile)
{
    if (steps < 1)
        throw DomainError("synthesize_disturbance: steps must be >= 1");
    const Index ny = R.rows();
    const ModeBasis basis = mode_basis(R);
    VectorXd w;
    switch (profile.weighting)
    {
    case ModeWeighting::uniform:
        w = VectorXd::Ones(ny);
        break;
    case ModeWeighting::singular:
        w = singular_value_weights(basis.sigma, profile.gamma);
        break;
    case ModeWeighting::custom:
        if (profile.weights.size() != ny)
            throw ShapeError("synthesize_disturbance: custom weights must have N_y entries");
        w = profile.weights;
        break;
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd M(steps, ny);
    for (Index j = 0; j < ny; ++j)
        for (Index k = 0; k < steps; ++k)
            M(k, j) = normal(rng);
    if (profile.temporal == TemporalProfile::pink)
    {
        Eigen::FFT<double> fft;
        fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
        for (Index j = 0; j < ny; ++j)
            shape_pink(M.col(j), profile.fs, profile.floor, fft);
    }
    return rescale_modes(M, w) * basis.W.transpose();
}

MatrixXd copy_append(const MatrixXd& raw, Index target)
{
    const Index nraw = raw.cols();
    if (nraw < 1)
        throw ShapeError("copy_append: raw data needs at least one column");
    if (target < nraw)
        throw ShapeError("copy_append: target width " + std::to_string(target) + " is below the raw width " +
                         std::to_string(nraw));
    MatrixXd out(raw.rows(), target);
    out.leftCols(nraw) = raw;
    for (Index c = nraw; c < target; ++c)
        out.col(c) = raw.col((c - nraw) % nraw);
    return out;
}

MatrixXd to_mode_space(const MatrixXd& Y, const MatrixXd& W)
{
    if (Y.cols() != W.rows())
        throw ShapeError("to_mode_space: basis does not match measurement width");
    return Y * W;
}

MatrixXd rescale_modes(const MatrixXd& M, const VectorXd& weights)
{
    if (weights.size() != M.cols())
        throw ShapeError("rescale_modes: one weight per mode is required");
    return M * weights.asDiagonal();
}

MatrixXd from_mode_space(const MatrixXd& M, const MatrixXd& W)
{
    if (M.cols() != W.cols())
        throw ShapeError("from_mode_space: basis does not match mode count");
    return M * W.transpose();
}

MatrixXd augment_measurements(const MatrixXd& raw, Index target, const MatrixXd& R_target, double gamma)
{
    if (R_target.rows() != target)
        throw ShapeError("augment_measurements: R_target must have target rows");
    const MatrixXd appended = copy_append(raw, target);
    const ModeBasis basis = mode_basis(R_target);
    const MatrixXd modes = to_mode_space(appended, basis.W);
    const MatrixXd scaled = rescale_modes(modes, singular_value_weights(basis.sigma, gamma));
    return from_mode_space(scaled, basis.W);
}

} // namespace xdctrl
