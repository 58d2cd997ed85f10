#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "ksf/errors.hpp"
#include "ksf/kernels.hpp"

namespace ksf {

// Rows of p_max consecutive past values paired with the next value.
struct LagMatrix {
  Eigen::MatrixXd inputs;   // (n - p_max) x p_max, oldest lag first
  Eigen::VectorXd targets;  // n - p_max

  Eigen::Index rows() const { return inputs.rows(); }
};

LagMatrix build_lag_matrix(const std::vector<double>& series, int p_max);

// epsilon-SVR decision function: f(x) = sum_l coeff_l k(row_l, x) + bias.
// coeffs are the signed duals alpha - alpha*, bounded by C in magnitude.
struct SvrModel {
  KernelConfig kernel;
  double C = 1.0;
  double epsilon = 0.1;
  double bias = 0.0;
  Eigen::VectorXd coeffs;
  Eigen::MatrixXd support_inputs;
};

// Solves the epsilon-SVR dual by SMO with maximal-violating-pair selection;
// terminates at KKT gap <= 1e-3. Throws fit_failure past the iteration budget.
SvrModel svr_train(const LagMatrix& lags, const KernelConfig& kernel, double C, double epsilon);

double svr_predict(const SvrModel& model, const Eigen::VectorXd& lags);

// Value of the dual objective at the model's coefficients:
//   -1/2 b'Kb - eps |b|_1 + y'b   (maximized form)
double svr_dual_objective(const SvrModel& model, const LagMatrix& lags);

struct SvrGridPoint {
  double sigma = 0.0;
  double C = 0.0;
  double cv_rmse = 0.0;
};

struct SvrGridResult {
  double sigma = 0.0;
  double C = 0.0;
  double cv_rmse = 0.0;
  SvrModel model;
  std::vector<SvrGridPoint> table;  // all evaluated combinations, grid order
};

// The 8 x 6 grid sigma in {10^0..10^-7}, C in {10^1..10^-4}; three
// contiguous order-preserving folds; minimizer refit on all rows. Ties keep
// the first combination in row-major (sigma outer) order.
SvrGridResult svr_grid_search(const std::vector<double>& train_series, int p_max, double epsilon);

// Selection logic with an injectable scorer; used by svr_grid_search and by
// tests that stub the cross-validation.
SvrGridResult svr_grid_select(const std::function<double(double sigma, double C)>& cv_score);

}  // namespace ksf
