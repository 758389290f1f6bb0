#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aquactrl {

// Relative rank cutoff mirroring double-precision machine epsilon.
inline constexpr double kDefaultRankTol = 2.2204e-16;

// Horizontal concatenation [B, AB, ..., A^(N-1) B].
Eigen::MatrixXd ctrb_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int N);

// N-step controllability Gramian, sum of A^tau B B^T (A^T)^tau. Accumulated
// by propagating the input columns forward (O(n^2 N n_u)); forming the
// controllability matrix explicitly is kept as a test oracle only.
Eigen::MatrixXd gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int N);

// Count of singular values >= tol * sigma_max.
int numeric_rank(const Eigen::MatrixXd& M, double tol = kDefaultRankTol);

struct KalmanDecomp {
  Eigen::MatrixXd T;    // orthogonal, rows = controllable basis then complement
  Eigen::MatrixXd A11;  // k x k, controllable block
  Eigen::MatrixXd A12;
  Eigen::MatrixXd A22;
  Eigen::MatrixXd B1;   // k rows
  int k = 0;            // controllable dimension
};

// Staircase form via an orthonormal basis of the controllable subspace,
// completed to a full basis: T A T^T is block upper triangular and T B has
// zero trailing rows.
KalmanDecomp kalman_decompose(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              double tol = kDefaultRankTol);

struct GramianReport {
  Eigen::MatrixXd W;
  int N = 0;
  int rank = 0;       // numeric rank of the N-step controllability factor
  int subspace_dim = 0;
  double trace = 0.0;
  double logdet = std::numeric_limits<double>::quiet_NaN();
  double lambda_min = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;  // logdet / lambda_min defined (rank > 0)
  double tol = kDefaultRankTol;
};

// Scalar controllability metrics. Rank is evaluated on the controllability
// factor (the numerically sound route for a Gram matrix); logdet and
// lambda_min restrict to the controllable subspace when rank < n.
GramianReport gramian_metrics(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int N,
                              double tol = kDefaultRankTol);

// W restricted to a target selection, C_T W C_T^T.
Eigen::MatrixXd target_gramian(const Eigen::MatrixXd& W, const Eigen::MatrixXd& C_T);
Eigen::MatrixXd target_gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int N,
                               const Eigen::MatrixXd& C_T);

// Rank of C_T W C_T^T evaluated through the projected factor C_T * ctrb.
int target_gramian_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int N,
                        const Eigen::MatrixXd& C_T, double tol = kDefaultRankTol);

// 0/1 selector with one unit row per target label. Throws on unknown or
// duplicate labels.
Eigen::MatrixXd make_selector(const std::vector<std::string>& state_labels,
                              const std::vector<std::string>& targets);

// Sum of singular values; equals the trace for symmetric PSD arguments.
double nuclear_norm(const Eigen::MatrixXd& M);

double spectral_norm(const Eigen::MatrixXd& M);

}  // namespace aquactrl
