#ifndef PFLOW_CONDITION_HPP
#define PFLOW_CONDITION_HPP

#include <string>
#include <string_view>

#include "pflow/linalg.hpp"

namespace pflow {

enum class NormChoice { nuclear, spectral };

std::string to_string(NormChoice norm);
NormChoice parse_norm(std::string_view name);

// Condition number of a symmetric matrix that is expected to be SPD:
//   nuclear  -> tr(M) tr(M^{-1})
//   spectral -> lambda_max / lambda_min
// Returns +infinity when M is singular or not SPD.
double condition_number(const Mat& M, NormChoice norm);

// Same norms for a general square matrix, through singular values:
//   nuclear  -> (sum sigma_i)(sum 1/sigma_i),  spectral -> sigma_max / sigma_min.
// Used for the (non-symmetric) flow Jacobian. +infinity when singular.
double condition_number_general(const Mat& F, NormChoice norm);

}  // namespace pflow

#endif  // PFLOW_CONDITION_HPP
