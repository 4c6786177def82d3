// Common types and error classes shared by every part of the library.
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace hho {

using Point = Eigen::Vector2d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Matrix2 = Eigen::Matrix2d;

/// Scalar field evaluated at a physical point.
using ScalarFunction = std::function<double(const Point&)>;
/// Vector field evaluated at a physical point.
using VectorFunction = std::function<Point(const Point&)>;

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad mesh file, invalid argument, out-of-range degree.
class InputError : public Error {
public:
    using Error::Error;
};

/// Degenerate or invalid geometry detected while building a mesh or a basis.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Nonlinear or linear solver failure.
class SolverError : public Error {
public:
    enum class Kind { max_iterations, line_search, singular, non_finite };

    SolverError(Kind kind, const std::string& what)
        : Error(what), kind_(kind)
    {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Dimension of P^k in two variables.
inline constexpr std::size_t dim_cell_space(int k)
{
    return k < 0 ? 0 : static_cast<std::size_t>((k + 1) * (k + 2) / 2);
}

/// Dimension of P^k in one variable.
inline constexpr std::size_t dim_face_space(int k)
{
    return k < 0 ? 0 : static_cast<std::size_t>(k + 1);
}

} // namespace hho
