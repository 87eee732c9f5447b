#include "nullot/core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace nullot {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SingularMetric: return "SingularMetric";
    case ErrorKind::OutOfChart: return "OutOfChart";
    case ErrorKind::InvalidN: return "InvalidN";
    case ErrorKind::WeightNotSmooth: return "WeightNotSmooth";
    case ErrorKind::LeftChart: return "LeftChart";
    case ErrorKind::NullDefect: return "NullDefect";
    case ErrorKind::DegenerateSection: return "DegenerateSection";
    case ErrorKind::NoTransverse: return "NoTransverse";
    case ErrorKind::FocalPoint: return "FocalPoint";
    case ErrorKind::FitFailure: return "FitFailure";
    case ErrorKind::OutOfWindow: return "OutOfWindow";
    case ErrorKind::NonPositiveScale: return "NonPositiveScale";
    case ErrorKind::MassMismatch: return "MassMismatch";
    case ErrorKind::EmptySupport: return "EmptySupport";
    case ErrorKind::NonInjective: return "NonInjective";
    case ErrorKind::NotAbsolutelyContinuous: return "NotAbsolutelyContinuous";
    case ErrorKind::NotNullConnected: return "NotNullConnected";
    case ErrorKind::NotComplete: return "NotComplete";
    case ErrorKind::MonotonicityViolation: return "MonotonicityViolation";
    case ErrorKind::SignatureLoss: return "SignatureLoss";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

double unit_sphere_area(double k) {
  const double m = 0.5 * (k + 1.0);
  return 2.0 * std::pow(std::numbers::pi, m) / std::tgamma(m);
}

std::string format_number(double x) {
  std::ostringstream o;
  o.precision(6);
  o << x;
  return o.str();
}

}  // namespace nullot
