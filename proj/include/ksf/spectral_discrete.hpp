#pragma once

#include <Eigen/Core>
#include <vector>

#include "ksf/errors.hpp"

namespace ksf {

// Discrete HMM with N hidden states and M observation symbols (1-based
// symbols at the API, 0-based storage). T and O are column-stochastic:
// T(i, j) = P(H' = i | H = j), O(x, j) = P(X = x | H = j).
struct DiscreteHmm {
  Eigen::MatrixXd T;   // N x N
  Eigen::MatrixXd O;   // M x N
  Eigen::VectorXd pi;  // N

  Eigen::Index num_states() const { return T.rows(); }
  Eigen::Index num_symbols() const { return O.rows(); }
  void validate() const;
};

// Observable representation learned from low-order moments via SVD.
struct SpectralModel {
  Eigen::VectorXd b1;               // N
  Eigen::MatrixXd b_inf;            // M x N
  std::vector<Eigen::MatrixXd> Bx;  // M matrices, each N x N
  Eigen::MatrixXd U;                // M x N left singular basis of C21
};

// Low-order joint moments of the observation process.
struct ObservableMoments {
  Eigen::VectorXd u;                  // M, P(X_t = i)
  Eigen::MatrixXd C21;                // M x M, P(X_{t+1} = i, X_t = j)
  std::vector<Eigen::MatrixXd> C3x1;  // M matrices: P(X_{t+2} = i, X_{t+1} = x, X_t = j)
};

// A_x = T diag(O(x, 1), ..., O(x, N)); one transition step combined with
// the emission likelihood of symbol x.
Eigen::MatrixXd observation_operator(const DiscreteHmm& hmm, int symbol);

// Exact predictive distribution P(X_{t+1} = . | obs) via the operator chain
// normalize(O A_{x_t} ... A_{x_1} pi). Empty obs gives normalize(O pi).
Eigen::VectorXd forward_predict(const DiscreteHmm& hmm, const std::vector<int>& obs);

// Analytic moments at the stationary state distribution of T. Throws
// non_ergodic when the stationary distribution is not unique. Passing an
// explicit state marginal skips the stationarity solve.
ObservableMoments population_moments(const DiscreteHmm& hmm);
ObservableMoments population_moments(const DiscreteHmm& hmm, const Eigen::VectorXd& state_marginal);

// Sliding-window frequency estimates: unigrams for u, consecutive pairs for
// C21, consecutive triples keyed by the middle symbol for C3x1.
ObservableMoments empirical_moments(const std::vector<int>& obs, int num_symbols);

// Hsu-style spectral estimator: U = top-N left singular vectors of C21,
// b1 = U'u, b_inf = C21 (U'C21)^+, B_x = (U'C3x1)(U'C21)^+.
SpectralModel spectral_train(const ObservableMoments& moments, int rank);

// normalize(b_inf B_{x_t} ... B_{x_1} b1); equals forward_predict when the
// moments are exact and the rank matches the true hidden-state count.
Eigen::VectorXd spectral_predict(const SpectralModel& model, const std::vector<int>& obs);

// Unique stationary state distribution of a column-stochastic matrix.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& T);

}  // namespace ksf
