#ifndef XDCTRL_COMMON_HPP
#define XDCTRL_COMMON_HPP

#include <algorithm>
#include <complex>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace xdctrl
{

using Eigen::Index;
using Complex = std::complex<double>;
using MatrixXd = Eigen::MatrixXd;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXd = Eigen::VectorXd;
using VectorXcd = Eigen::VectorXcd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions are inconsistent.
class ShapeError : public Error
{
  public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error
{
  public:
    using Error::Error;
};

/// Input violates a documented precondition (e.g. orthonormality).
class PreconditionError : public Error
{
  public:
    using Error::Error;
};

/// A dense matrix is not block-circulant within tolerance.
class StructureError : public Error
{
  public:
    StructureError(const std::string& what, double worst_deviation, Index worst_block)
        : Error(what), worst_deviation_(worst_deviation), worst_block_(worst_block)
    {
    }
    double worst_deviation() const noexcept { return worst_deviation_; }
    Index worst_block() const noexcept { return worst_block_; }

  private:
    double worst_deviation_;
    Index worst_block_;
};

/// Controller synthesis produced a non-causal filter.
class SynthesisError : public Error
{
  public:
    using Error::Error;
};

/// Invalid design parameters (e.g. bandwidth ordering).
class DesignError : public Error
{
  public:
    using Error::Error;
};

/// Generalized SVD of one Fourier cell failed.
class CellError : public Error
{
  public:
    CellError(const std::string& what, Index cell) : Error(what), cell_(cell) {}
    Index cell() const noexcept { return cell_; }

  private:
    Index cell_;
};

/// Closed-loop signal became non-finite.
class DivergenceError : public Error
{
  public:
    DivergenceError(const std::string& what, Index step) : Error(what), step_(step) {}
    Index step() const noexcept { return step_; }

  private:
    Index step_;
};

/// Malformed configuration or input file.
class ConfigError : public Error
{
  public:
    using Error::Error;
};

/// Worker count: XDCTRL_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count()
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("XDCTRL_THREADS"))
    {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0)
            return static_cast<unsigned>(v);
    }
    return hw;
}

/// Runs fn(i) for i in [0, count). Each index is handled by exactly one
/// worker, so results written to per-index slots are independent of the
/// thread count.
inline void parallel_for(Index count, const std::function<void(Index)>& fn)
{
    const unsigned workers =
        static_cast<unsigned>(std::min<Index>(count, static_cast<Index>(worker_count())));
    if (workers <= 1)
    {
        for (Index i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
    {
        pool.emplace_back([&, w] {
            for (Index i = w; i < count; i += workers)
            {
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace xdctrl

#endif // XDCTRL_COMMON_HPP
