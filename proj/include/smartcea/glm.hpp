#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace smartcea {

struct DesignMatrix {
  Eigen::MatrixXd values;  // n x p
  std::vector<std::string> column_labels;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

struct GlmFit {
  Eigen::VectorXd coefficients;
  bool converged = false;
  int iterations = 0;
  double max_abs_score = 0.0;
  bool offset_used = false;
};

struct GlmOptions {
  double score_tolerance = 1e-8;
  int max_iterations = 100;
  double ridge = 1e-10;  // added to the Newton matrix diagonal only
  int max_halvings = 10;
  double separation_eta = 30.0;
};

// Weighted (quasi-)binomial logistic regression by IRLS. `response` may take
// any value in [0, 1]; `offset` may be empty.
//
// Throws SeparationDetected when the linear predictor runs off to infinity
// (binary response fitted perfectly, or no convergence with |eta| > 30), and
// RankDeficient when the weighted design is singular.
GlmFit fit_logistic(const DesignMatrix& design, const Eigen::VectorXd& response, const Eigen::VectorXd& weights,
                    const Eigen::VectorXd& offset = {}, const GlmOptions& options = {});

// expit(X b + offset), clamped to [1e-12, 1 - 1e-12].
Eigen::VectorXd predict(const GlmFit& fit, const DesignMatrix& design, const Eigen::VectorXd& offset = {});

// Weighted score X' W (y - p) at the given coefficients, accumulated in long double.
Eigen::VectorXd logistic_score(const DesignMatrix& design, const Eigen::VectorXd& response,
                               const Eigen::VectorXd& weights, const Eigen::VectorXd& offset,
                               const Eigen::VectorXd& coefficients);

inline constexpr double kProbabilityFloor = 1e-12;

}  // namespace smartcea
