#include "smartcea/glm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smartcea/error.hpp"

namespace smartcea {

namespace {

double expit_stable(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
double log1pexp(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

Eigen::VectorXd linear_predictor(const DesignMatrix& X, const Eigen::VectorXd& offset, const Eigen::VectorXd& beta) {
  Eigen::VectorXd eta = X.values * beta;
  if (offset.size() > 0) eta += offset;
  return eta;
}

long double log_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& w, const Eigen::VectorXd& eta) {
  long double ll = 0.0L;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (w[i] == 0.0) continue;
    ll += static_cast<long double>(w[i]) * (y[i] * eta[i] - log1pexp(eta[i]));
  }
  return ll;
}

Eigen::VectorXd score_at(const DesignMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& eta) {
  const Eigen::Index n = X.rows(), p = X.cols();
  std::vector<long double> acc(static_cast<std::size_t>(p), 0.0L);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    const long double r = static_cast<long double>(w[i]) * (y[i] - expit_stable(eta[i]));
    for (Eigen::Index j = 0; j < p; ++j) acc[static_cast<std::size_t>(j)] += r * X.values(i, j);
  }
  Eigen::VectorXd s(p);
  for (Eigen::Index j = 0; j < p; ++j) s[j] = static_cast<double>(acc[static_cast<std::size_t>(j)]);
  return s;
}

void check_inputs(const DesignMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                  const Eigen::VectorXd& offset) {
  const Eigen::Index n = X.rows();
  if (X.cols() < 1) throw Error(ErrorKind::DimensionMismatch, "design has no columns");
  if (y.size() != n || w.size() != n || (offset.size() != 0 && offset.size() != n)) {
    throw Error(ErrorKind::LengthMismatch, "response, weights and offset must have one entry per design row");
  }
  if (!X.values.allFinite()) throw Error(ErrorKind::InvalidInput, "design has non-finite entries");
  if (offset.size() != 0 && !offset.allFinite()) throw Error(ErrorKind::InvalidInput, "offset has non-finite entries");
  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(w[i] >= 0.0) || !std::isfinite(w[i])) throw Error(ErrorKind::InvalidInput, "weights must be finite and >= 0");
    if (!(y[i] >= 0.0 && y[i] <= 1.0)) throw Error(ErrorKind::InvalidInput, "response must lie in [0, 1]");
    if (w[i] > 0.0) ++positive;
  }
  if (positive == 0) throw Error(ErrorKind::InvalidInput, "all weights are zero");
  if (positive < X.cols()) {
    throw Error(ErrorKind::RankDeficient, "fewer weighted rows (" + std::to_string(positive) + ") than columns (" +
                                              std::to_string(X.cols()) + ")");
  }
}

// Rank test on the correlation-scaled weighted Gram matrix X' diag(w) X.
void check_rank(const DesignMatrix& X, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd G = X.values.transpose() * w.asDiagonal() * X.values;
  Eigen::VectorXd d = G.diagonal();
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    if (!(d[j] > 0.0)) {
      const std::string label = j < static_cast<Eigen::Index>(X.column_labels.size()) ? X.column_labels[j]
                                                                                     : std::to_string(j);
      throw Error(ErrorKind::RankDeficient, "design column '" + label + "' is identically zero on weighted rows");
    }
  }
  const Eigen::VectorXd inv = d.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd C = inv.asDiagonal() * G * inv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < 1e-10 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
    throw Error(ErrorKind::RankDeficient, "weighted design matrix is singular");
  }
}

}  // namespace

Eigen::VectorXd logistic_score(const DesignMatrix& design, const Eigen::VectorXd& response,
                               const Eigen::VectorXd& weights, const Eigen::VectorXd& offset,
                               const Eigen::VectorXd& coefficients) {
  return score_at(design, response, weights, linear_predictor(design, offset, coefficients));
}

GlmFit fit_logistic(const DesignMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    const Eigen::VectorXd& offset, const GlmOptions& opt) {
  check_inputs(X, y, w, offset);
  check_rank(X, w);
  const Eigen::Index n = X.rows(), p = X.cols();

  GlmFit fit;
  fit.offset_used = offset.size() != 0;
  fit.coefficients = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = linear_predictor(X, offset, fit.coefficients);
  long double ll = log_likelihood(y, w, eta);
  Eigen::VectorXd score = score_at(X, y, w, eta);
  fit.max_abs_score = score.cwiseAbs().maxCoeff();

  while (fit.max_abs_score >= opt.score_tolerance && fit.iterations < opt.max_iterations) {
    ++fit.iterations;
    Eigen::VectorXd irls_w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = expit_stable(eta[i]);
      irls_w[i] = w[i] * m * (1.0 - m);
    }
    Eigen::MatrixXd H = X.values.transpose() * irls_w.asDiagonal() * X.values;
    H.diagonal().array() += opt.ridge;
    const Eigen::VectorXd step = H.ldlt().solve(score);
    if (!step.allFinite()) throw Error(ErrorKind::RankDeficient, "Newton system could not be solved");

    double t = 1.0;
    Eigen::VectorXd beta = fit.coefficients + step;
    Eigen::VectorXd eta_new = linear_predictor(X, offset, beta);
    long double ll_new = log_likelihood(y, w, eta_new);
    for (int h = 0; h < opt.max_halvings && ll_new < ll; ++h) {
      t *= 0.5;
      beta = fit.coefficients + t * step;
      eta_new = linear_predictor(X, offset, beta);
      ll_new = log_likelihood(y, w, eta_new);
    }
    fit.coefficients = beta;
    eta = eta_new;
    ll = ll_new;
    score = score_at(X, y, w, eta);
    fit.max_abs_score = score.cwiseAbs().maxCoeff();
  }
  fit.converged = fit.max_abs_score < opt.score_tolerance;

  // Separation: a binary response reproduced exactly by the coefficients, or a
  // diverging predictor.
  bool binary = offset.size() == 0, perfect = true;
  double max_eta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    binary = binary && (y[i] == 0.0 || y[i] == 1.0);
    max_eta = std::max(max_eta, std::abs(eta[i]));
    perfect = perfect && std::abs(y[i] - expit_stable(eta[i])) < 1e-6;
  }
  if ((binary && perfect) || (!fit.converged && max_eta > opt.separation_eta)) {
    throw Error(ErrorKind::SeparationDetected,
                "logistic fit separates the response (max |eta| = " + std::to_string(max_eta) + ")");
  }
  return fit;
}

Eigen::VectorXd predict(const GlmFit& fit, const DesignMatrix& design, const Eigen::VectorXd& offset) {
  if (design.cols() != fit.coefficients.size()) {
    throw Error(ErrorKind::DimensionMismatch, "design has " + std::to_string(design.cols()) + " columns, fit has " +
                                                  std::to_string(fit.coefficients.size()));
  }
  if (offset.size() != 0 && offset.size() != design.rows()) {
    throw Error(ErrorKind::LengthMismatch, "offset length differs from design rows");
  }
  const Eigen::VectorXd eta = linear_predictor(design, offset, fit.coefficients);
  Eigen::VectorXd p(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    p[i] = std::clamp(expit_stable(eta[i]), kProbabilityFloor, 1.0 - kProbabilityFloor);
  }
  return p;
}

}  // namespace smartcea
