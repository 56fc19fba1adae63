#include "arff/types.hpp"

#include "arff/errors.hpp"

#include <string>

namespace arff {

std::string_view to_string(ActivationKind kind) noexcept {
  switch (kind) {
    case ActivationKind::kComplexExp:
      return "complex_exp";
    case ActivationKind::kCosineBias:
      return "cosine_bias";
  }
  return "unknown";
}

std::string_view to_string(NormKind kind) noexcept {
  switch (kind) {
    case NormKind::kModulus:
      return "modulus";
    case NormKind::kTwoNorm:
      return "two_norm";
  }
  return "unknown";
}

ActivationKind parse_activation(std::string_view text) {
  if (text == "complex_exp" || text == "complex-exp" || text == "exp") return ActivationKind::kComplexExp;
  if (text == "cosine_bias" || text == "cosine-bias" || text == "cosine" || text == "cos") return ActivationKind::kCosineBias;
  throw ConfigError("unknown activation kind '" + std::string(text) + "'");
}

NormKind parse_norm_kind(std::string_view text) {
  if (text == "modulus") return NormKind::kModulus;
  if (text == "two_norm" || text == "two-norm") return NormKind::kTwoNorm;
  throw ConfigError("unknown amplitude norm kind '" + std::string(text) + "'");
}

FrequencySet::FrequencySet(Eigen::MatrixXd vectors) : vectors_(std::move(vectors)) {
  if (vectors_.rows() < 1 || vectors_.cols() < 1) throw PreconditionError("FrequencySet needs at least one vector");
  if (!vectors_.allFinite()) throw PreconditionError("FrequencySet entries must be finite");
}

FrequencySet FrequencySet::zeros(Index count, Index dimension) {
  return FrequencySet(Eigen::MatrixXd::Zero(count, dimension));
}

AmplitudeVector::AmplitudeVector(Eigen::MatrixXcd values, NormKind norm_kind)
    : values_(std::move(values)), norm_kind_(norm_kind) {
  if (norm_kind_ == NormKind::kModulus && values_.cols() != 1)
    throw PreconditionError("modulus norm requires scalar amplitudes");
}

Eigen::VectorXd AmplitudeVector::node_norms() const {
  if (norm_kind_ == NormKind::kModulus) return values_.col(0).cwiseAbs();
  return values_.rowwise().norm();
}

}  // namespace arff
