#include "xdctrl/block_circulant.hpp"

#include <random>

namespace xdctrl
{

namespace
{

template <typename Fn>
double median_seconds(int trials, Fn&& fn)
{
    using clock = std::chrono::steady_clock;
    // calibrate the repetition count so one sample lasts about 200 us
    int reps = 1;
    for (;;)
    {
        const auto t0 = clock::now();
        for (int r = 0; r < reps; ++r)
            fn();
        const double dt = std::chrono::duration<double>(clock::now() - t0).count();
        if (dt > 2e-4 || reps > (1 << 20))
            break;
        reps *= 2;
    }
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t)
    {
        const auto t0 = clock::now();
        for (int r = 0; r < reps; ++r)
            fn();
        samples.push_back(std::chrono::duration<double>(clock::now() - t0).count() / reps);
    }
    std::nth_element(samples.begin(), samples.begin() + static_cast<long>(samples.size() / 2), samples.end());
    return samples[samples.size() / 2];
}

} // namespace

BenchResult bench_matvec(const BlockCirculantMatrixd& B, int trials, unsigned seed)
{
    if (trials < 1)
        throw DomainError("bench_matvec: trials must be >= 1");
    const MatrixXd D = B.dense();
    const CirculantOperator op(B);
    CirculantOperator::Workspace ws;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    VectorXd x(B.cols());
    for (Index i = 0; i < x.size(); ++i)
        x(i) = unif(rng);

    VectorXd y_dense = D * x;
    VectorXd y_fft(B.rows());
    op.apply(x, y_fft, ws);

    BenchResult res;
    const double scale = std::max(y_dense.norm(), 1e-300);
    res.max_rel_error = (y_dense - y_fft).norm() / scale;
    if (res.max_rel_error > 1e-10)
        throw Error("bench_matvec: Fourier-domain product disagrees with dense product");

    res.t_dense = median_seconds(trials, [&] { y_dense.noalias() = D * x; });
    res.t_fft = median_seconds(trials, [&] { op.apply(x, y_fft, ws); });

    const Index n = B.cells(), p = B.block_rows(), m = B.block_cols();
    MatrixXd xplanar(n, m);
    MatrixXd yplanar = MatrixXd::Zero(n, p);
    VectorXd yback(B.rows());
    res.t_reshape = median_seconds(trials, [&] {
        xplanar = Eigen::Map<const MatrixXd>(x.data(), m, n).transpose();
        Eigen::Map<MatrixXd>(yback.data(), p, n) = yplanar.transpose();
    });
    res.reduction = 1.0 - res.t_fft / res.t_dense;
    return res;
}

} // namespace xdctrl
