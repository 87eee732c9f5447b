#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nullot {

// Largest chart dimension supported. Small fixed-capacity Eigen types keep the
// integrator hot loop free of heap allocations.
inline constexpr int kMaxDim = 6;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

enum class ErrorKind {
  SingularMetric,
  OutOfChart,
  InvalidN,
  WeightNotSmooth,
  LeftChart,
  NullDefect,
  DegenerateSection,
  NoTransverse,
  FocalPoint,
  FitFailure,
  OutOfWindow,
  NonPositiveScale,
  MassMismatch,
  EmptySupport,
  NonInjective,
  NotAbsolutelyContinuous,
  NotNullConnected,
  NotComplete,
  MonotonicityViolation,
  SignatureLoss,
  ParseError,
  ValidationError,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Affine-parameter location used by FocalPoint reports.
class FocalPointError : public Error {
 public:
  FocalPointError(double parameter, const std::string& what)
      : Error(ErrorKind::FocalPoint, what), parameter_(parameter) {}
  double parameter() const { return parameter_; }

 private:
  double parameter_;
};

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Vec to_vec(std::span<const double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v(static_cast<Eigen::Index>(i)) = xs[i];
  return v;
}

// Area of the unit round k-sphere, valid for real k > -1.
double unit_sphere_area(double k);

// Shortest %g-style text for error messages.
std::string format_number(double x);

}  // namespace nullot
