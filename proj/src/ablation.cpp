#include "crs/ablation.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "crs/errors.hpp"

namespace crs {

AblationSpec ablation_spec(const std::string& name) {
  using F = ClinicalFeature;
  if (name == "ct_only") return {name, true, {}, false};
  if (name == "ct_age") return {name, true, {F::kAge}, false};
  if (name == "ct_ca125") return {name, true, {F::kCa125}, false};
  if (name == "ct_age_ca125") return {name, true, {F::kAge, F::kCa125}, false};
  if (name == "clinical_baseline") return {name, false, {F::kAge, F::kCa125}, true};
  throw ConfigError("unknown ablation configuration: " + name);
}

double LogisticModel::predict(std::span<const double> x) const {
  if (x.size() != weights.size()) throw DataError("logistic model: feature count mismatch");
  double s = bias;
  for (std::size_t j = 0; j < x.size(); ++j) s += weights[j] * (x[j] - mean[j]) / scale[j];
  return s >= 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
}

LogisticModel fit_logistic(const std::vector<std::vector<double>>& x, std::span<const int> y, double l2) {
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n) throw DataError("logistic model: empty or mismatched training set");
  const std::size_t d = x.front().size();
  std::size_t pos = 0;
  for (int v : y) pos += v == 1;
  if (pos == 0 || pos == n) throw DataError("logistic model: training set has a single class");

  LogisticModel m;
  m.mean.assign(d, 0.0);
  m.scale.assign(d, 0.0);
  for (const auto& row : x) {
    if (row.size() != d) throw DataError("logistic model: ragged feature rows");
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += row[j];
  }
  for (auto& v : m.mean) v /= static_cast<double>(n);
  for (const auto& row : x)
    for (std::size_t j = 0; j < d; ++j) m.scale[j] += (row[j] - m.mean[j]) * (row[j] - m.mean[j]);
  for (auto& v : m.scale) v = std::max(std::sqrt(v / static_cast<double>(n)), 1e-8);

  // Column 0 is the intercept.
  Eigen::MatrixXd X(n, d + 1);
  Eigen::VectorXd t(n);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) X(i, j + 1) = (x[i][j] - m.mean[j]) / m.scale[j];
    t(i) = y[i];
  }
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, l2);
  penalty(0) = 0.0;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  for (m.iterations = 0; m.iterations < 100; ++m.iterations) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd p(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      p(i) = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = std::max(p(i) * (1.0 - p(i)), 1e-12);
    }
    const Eigen::VectorXd grad = X.transpose() * (p - t) + penalty.cwiseProduct(beta);
    Eigen::MatrixXd hess = X.transpose() * w.asDiagonal() * X;
    hess.diagonal() += penalty;
    hess.diagonal().array() += 1e-10;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    beta -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) {
      ++m.iterations;
      break;
    }
  }
  m.bias = beta(0);
  m.weights.assign(beta.data() + 1, beta.data() + 1 + d);
  return m;
}

std::vector<double> baseline_features(const ClinicalRecord& record, double lesion_volume_cm3) {
  if (!(lesion_volume_cm3 > 0.0)) throw DataError("baseline features need a positive lesion volume");
  return {record.age, std::log1p(record.ca125), std::log(lesion_volume_cm3)};
}

}  // namespace crs
