#ifndef XDCTRL_TEST_SUPPORT_HPP
#define XDCTRL_TEST_SUPPORT_HPP

#include <filesystem>
#include <random>
#include <string>

#include "xdctrl/common.hpp"

namespace xdctrl::test
{

inline MatrixXd random_real(Index rows, Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> N;
    MatrixXd M(rows, cols);
    for (Index i = 0; i < M.size(); ++i)
        M.data()[i] = N(rng);
    return M;
}

inline MatrixXcd random_complex(Index rows, Index cols, std::mt19937_64& rng)
{
    return random_real(rows, cols, rng).cast<Complex>() + Complex(0, 1) * random_real(rows, cols, rng).cast<Complex>();
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("xdctrl_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double rel_err(const auto& a, const auto& b)
{
    const double nb = b.norm();
    return (a - b).norm() / (nb > 0.0 ? nb : 1.0);
}

} // namespace xdctrl::test

#endif
