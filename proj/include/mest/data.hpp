#pragma once

// Regression instance: design matrix (rows are observations) and response.

#include <Eigen/Core>
#include <stdexcept>

namespace mest {

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  Dataset(Eigen::MatrixXd X_, Eigen::VectorXd y_) : X(std::move(X_)), y(std::move(y_)) {
    if (X.rows() < 1 || X.cols() < 1)
      throw std::invalid_argument("dataset needs n >= 1 rows and p >= 1 columns");
    if (y.size() != X.rows())
      throw std::invalid_argument("response length must match the number of rows");
    if (!X.allFinite() || !y.allFinite())
      throw std::invalid_argument("dataset entries must be finite");
  }

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
};

}  // namespace mest
