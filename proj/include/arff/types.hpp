#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace arff {

using Index = Eigen::Index;

/// Feature map of the shallow network.
///   kComplexExp: x -> exp(i w.x), frequencies of dimension d.
///   kCosineBias: x -> cos(w.x + b), frequencies stored bias-extended (d + 1).
enum class ActivationKind { kComplexExp, kCosineBias };

/// How a node's amplitude is reduced to a nonnegative mass.
enum class NormKind { kModulus, kTwoNorm };

std::string_view to_string(ActivationKind kind) noexcept;
std::string_view to_string(NormKind kind) noexcept;
ActivationKind parse_activation(std::string_view text);
NormKind parse_norm_kind(std::string_view text);

/// The K frequency vectors, one per row. For kCosineBias the last column is
/// the bias b_k.
class FrequencySet {
 public:
  FrequencySet() = default;
  explicit FrequencySet(Eigen::MatrixXd vectors);

  static FrequencySet zeros(Index count, Index dimension);

  Index count() const noexcept { return vectors_.rows(); }
  Index dimension() const noexcept { return vectors_.cols(); }

  const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }
  Eigen::MatrixXd& vectors() noexcept { return vectors_; }

  bool operator==(const FrequencySet& other) const {
    return vectors_.rows() == other.vectors_.rows() && vectors_.cols() == other.vectors_.cols() &&
           vectors_ == other.vectors_;
  }

 private:
  Eigen::MatrixXd vectors_;
};

/// Output weights, K rows by C channels. Real amplitudes (cosine features) are
/// stored with zero imaginary part. C == 1 for scalar targets, 3 for RGB.
class AmplitudeVector {
 public:
  AmplitudeVector() = default;
  AmplitudeVector(Eigen::MatrixXcd values, NormKind norm_kind);

  Index count() const noexcept { return values_.rows(); }
  Index channels() const noexcept { return values_.cols(); }
  NormKind norm_kind() const noexcept { return norm_kind_; }

  const Eigen::MatrixXcd& values() const noexcept { return values_; }
  Eigen::MatrixXcd& values() noexcept { return values_; }

  /// Per-node |a_k| (modulus) or ||a_k||_2 (two-norm over channels).
  Eigen::VectorXd node_norms() const;

  /// Euclidean norm over all entries.
  double norm() const { return values_.norm(); }

 private:
  Eigen::MatrixXcd values_;
  NormKind norm_kind_ = NormKind::kModulus;
};

}  // namespace arff
