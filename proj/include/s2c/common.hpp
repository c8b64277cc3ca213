#ifndef S2C_COMMON_HPP
#define S2C_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace s2c {

/// Row-major dense matrix. Every tensor in the library is 2-D; 3-D feature
/// maps are packed as (height*width) x channels.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

/// Base error. The exit code is what the command-line tool returns.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, int exit_code) : std::runtime_error(what), code_(exit_code) {}
    int exit_code() const noexcept { return code_; }

private:
    int code_;
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(what, 1) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what, 1) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what, 2) {}
};

class DimensionError : public DataError {
public:
    explicit DimensionError(const std::string& what) : DataError(what) {}
};

class RegionError : public DataError {
public:
    explicit RegionError(const std::string& what) : DataError(what) {}
};

class IoError : public DataError {
public:
    explicit IoError(const std::string& what) : DataError(what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(what, 3) {}
};

std::string shape_string(Index rows, Index cols);

template <typename Derived>
std::string shape_of(const Eigen::EigenBase<Derived>& m) {
    return shape_string(m.rows(), m.cols());
}

/// Portable seeded generator. Draws are defined here rather than through
/// <random> distributions so sequences are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    double normal();
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

} // namespace s2c

#endif
