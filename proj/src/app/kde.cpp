#include "arff/app/kde.hpp"

#include "arff/errors.hpp"

#include <cmath>
#include <numbers>

namespace arff {

double silverman_bandwidth(const Eigen::VectorXd& samples) {
  const Eigen::Index n = samples.size();
  if (n < 2) throw PreconditionError("KDE needs at least two samples");
  const double mean = samples.mean();
  const double sd = std::sqrt((samples.array() - mean).square().sum() / static_cast<double>(n - 1));
  if (!(sd > 0.0)) return 1e-3 * std::max(1.0, std::abs(mean));
  return std::pow(4.0 / (3.0 * static_cast<double>(n)), 0.2) * sd;
}

Eigen::VectorXd default_kde_grid(const Eigen::VectorXd& samples, double bandwidth, Eigen::Index points) {
  if (samples.size() < 1) throw PreconditionError("KDE grid needs samples");
  if (points < 2) throw PreconditionError("KDE grid needs at least two points");
  return Eigen::VectorXd::LinSpaced(points, samples.minCoeff() - 4.0 * bandwidth,
                                    samples.maxCoeff() + 4.0 * bandwidth);
}

KdeEstimate kde(const Eigen::VectorXd& samples, const Eigen::VectorXd& grid, std::optional<double> bandwidth) {
  if (samples.size() < 2) throw PreconditionError("KDE needs at least two samples");
  if (!samples.allFinite()) throw PreconditionError("KDE samples must be finite");
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  if (!(h > 0.0) || !std::isfinite(h)) throw PreconditionError("KDE bandwidth must be positive");

  KdeEstimate est;
  est.grid = grid;
  est.bandwidth = h;
  est.density = Eigen::VectorXd::Zero(grid.size());
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    est.density(g) = norm * (-0.5 * ((samples.array() - grid(g)) / h).square()).exp().sum();
  }
  return est;
}

KdeEstimate kde(const Eigen::VectorXd& samples, std::optional<double> bandwidth) {
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  return kde(samples, default_kde_grid(samples, h), h);
}

double trapezoid_integral(const KdeEstimate& estimate) {
  double total = 0.0;
  for (Eigen::Index i = 1; i < estimate.grid.size(); ++i)
    total += 0.5 * (estimate.density(i) + estimate.density(i - 1)) * (estimate.grid(i) - estimate.grid(i - 1));
  return total;
}

}  // namespace arff
