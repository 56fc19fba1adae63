#pragma once

#include <Eigen/Dense>

#include <optional>

namespace arff {

struct KdeEstimate {
  Eigen::VectorXd grid;
  Eigen::VectorXd density;
  double bandwidth = 0.0;
  Eigen::Index axis = 0;  // which coordinate of B^{-1} w the samples came from
};

/// Silverman's rule (4 / (3 n))^{1/5} * sigma with the sample std; when all
/// samples coincide, 1e-3 * max(1, |mean|) is used instead.
double silverman_bandwidth(const Eigen::VectorXd& samples);

/// 512 points over [min - 4h, max + 4h].
Eigen::VectorXd default_kde_grid(const Eigen::VectorXd& samples, double bandwidth, Eigen::Index points = 512);

/// Gaussian-kernel density estimate on `grid`.
KdeEstimate kde(const Eigen::VectorXd& samples, const Eigen::VectorXd& grid,
                std::optional<double> bandwidth = std::nullopt);
/// Same with the default grid.
KdeEstimate kde(const Eigen::VectorXd& samples, std::optional<double> bandwidth = std::nullopt);

/// Trapezoid rule over the estimate's grid.
double trapezoid_integral(const KdeEstimate& estimate);

}  // namespace arff
