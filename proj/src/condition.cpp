#include "pflow/condition.hpp"

#include <cmath>
#include <limits>

#include "pflow/errors.hpp"

namespace pflow {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative threshold below which the smallest eigen/singular value counts as zero.
constexpr double kSingularRel = 1e-14;
}  // namespace

std::string to_string(NormChoice norm) { return norm == NormChoice::nuclear ? "nuclear" : "spectral"; }

NormChoice parse_norm(std::string_view name) {
    if (name == "nuclear") return NormChoice::nuclear;
    if (name == "spectral") return NormChoice::spectral;
    throw ContractViolation("unknown norm '" + std::string(name) + "' (expected nuclear|spectral)");
}

double condition_number(const Mat& M, NormChoice norm) {
    if (!is_square(M) || M.size() == 0) throw ContractViolation("condition_number: M must be square");
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(M), Eigen::EigenvaluesOnly);
    const Vec& ev = es.eigenvalues();  // ascending
    const double lmin = ev(0);
    const double lmax = ev(ev.size() - 1);
    if (!(lmax > 0.0) || lmin <= kSingularRel * lmax) return kInf;
    if (norm == NormChoice::spectral) return lmax / lmin;
    return ev.sum() * ev.cwiseInverse().sum();
}

double condition_number_general(const Mat& F, NormChoice norm) {
    if (!is_square(F) || F.size() == 0) throw ContractViolation("condition_number_general: F must be square");
    Eigen::JacobiSVD<Mat> svd(F);
    const Vec& sv = svd.singularValues();  // descending
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    if (!(smax > 0.0) || smin <= kSingularRel * smax) return kInf;
    if (norm == NormChoice::spectral) return smax / smin;
    return sv.sum() * sv.cwiseInverse().sum();
}

}  // namespace pflow
