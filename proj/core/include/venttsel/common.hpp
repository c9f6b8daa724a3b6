#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>
#include <utility>

namespace venttsel {

using Point = Eigen::Vector2d;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Error carrying a machine-readable rule identifier ("sigma.window",
/// "coefficient.b_nonnegative", ...). The CLI serializes both fields.
class Error : public std::runtime_error {
 public:
  Error(std::string rule, const std::string& message)
      : std::runtime_error(message), rule_(std::move(rule)) {}

  const std::string& rule() const noexcept { return rule_; }

 private:
  std::string rule_;
};

inline double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace venttsel
