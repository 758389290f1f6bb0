#include "aquactrl/gramian.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace aquactrl {

Eigen::MatrixXd ctrb_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int N) {
  if (N < 1) throw std::invalid_argument("ctrb_matrix: N must be >= 1");
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  Eigen::MatrixXd C(n, N * m);
  Eigen::MatrixXd blk = B;
  C.leftCols(m) = blk;
  for (int k = 1; k < N; ++k) {
    blk = A * blk;
    C.middleCols(static_cast<Eigen::Index>(k) * m, m) = blk;
  }
  return C;
}

Eigen::MatrixXd gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int N) {
  if (N < 1) throw std::invalid_argument("gramian: N must be >= 1");
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd blk = B;
  W.selfadjointView<Eigen::Lower>().rankUpdate(blk);
  for (int k = 1; k < N; ++k) {
    blk = A * blk;
    W.selfadjointView<Eigen::Lower>().rankUpdate(blk);
  }
  return W.selfadjointView<Eigen::Lower>();
}

int numeric_rank(const Eigen::MatrixXd& M, double tol) {
  if (M.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] >= tol * sv[0]) ++r;
  return r;
}

KalmanDecomp kalman_decompose(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              double tol) {
  const auto n = static_cast<int>(A.rows());
  KalmanDecomp d;
  if (n == 0) return d;
  Eigen::MatrixXd C = ctrb_matrix(A, B, n);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  // Rounding in the matrix powers leaves noise of order dim * eps * sigma_max
  // in the uncontrollable block, so the cutoff scales with the dimension.
  double cutoff = tol * 4.0 * static_cast<double>(std::max(C.rows(), C.cols()));
  int k = 0;
  if (sv.size() > 0 && sv[0] > 0.0)
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] >= cutoff * sv[0]) ++k;
  d.k = k;
  d.T = svd.matrixU().transpose();  // rows: controllable basis, then complement
  Eigen::MatrixXd Abar = d.T * A * d.T.transpose();
  Eigen::MatrixXd Bbar = d.T * B;
  d.A11 = Abar.topLeftCorner(k, k);
  d.A12 = Abar.topRightCorner(k, n - k);
  d.A22 = Abar.bottomRightCorner(n - k, n - k);
  d.B1 = Bbar.topRows(k);
  return d;
}

namespace {

// logdet and lambda_min of a symmetric PSD matrix; logdet is reported as
// undefined (NaN) when numerically singular.
void psd_metrics(const Eigen::MatrixXd& W, double* logdet, double* lmin, bool* defined) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
  const auto& ev = es.eigenvalues();
  *lmin = ev.minCoeff();
  double ld = 0.0;
  bool ok = ev.size() > 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] <= 0.0) {
      ok = false;
      break;
    }
    ld += std::log(ev[i]);
  }
  *logdet = ok ? ld : std::numeric_limits<double>::quiet_NaN();
  *defined = true;
}

}  // namespace

GramianReport gramian_metrics(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int N,
                              double tol) {
  GramianReport rep;
  rep.N = N;
  rep.tol = tol;
  const auto n = static_cast<int>(A.rows());

  Eigen::MatrixXd C = ctrb_matrix(A, B, N);
  rep.W = Eigen::MatrixXd::Zero(n, n);
  rep.W.selfadjointView<Eigen::Lower>().rankUpdate(C);
  rep.W = rep.W.selfadjointView<Eigen::Lower>();
  rep.trace = rep.W.trace();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int k = 0;
  if (sv.size() > 0 && sv[0] > 0.0)
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] >= tol * sv[0]) ++k;
  rep.rank = k;
  rep.subspace_dim = k;

  if (k == 0) {
    rep.defined = false;
    return rep;
  }
  if (k == n) {
    psd_metrics(rep.W, &rep.logdet, &rep.lambda_min, &rep.defined);
    return rep;
  }
  // Restrict to the N-step controllable subspace spanned by the factor's
  // leading left singular vectors.
  Eigen::MatrixXd Q1 = svd.matrixU().leftCols(k);
  Eigen::MatrixXd Wsub = Q1.transpose() * rep.W * Q1;
  psd_metrics(Wsub, &rep.logdet, &rep.lambda_min, &rep.defined);
  return rep;
}

Eigen::MatrixXd target_gramian(const Eigen::MatrixXd& W, const Eigen::MatrixXd& C_T) {
  return C_T * W * C_T.transpose();
}

Eigen::MatrixXd target_gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int N,
                               const Eigen::MatrixXd& C_T) {
  return target_gramian(gramian(A, B, N), C_T);
}

int target_gramian_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int N,
                        const Eigen::MatrixXd& C_T, double tol) {
  Eigen::MatrixXd F = C_T * ctrb_matrix(A, B, N);
  return numeric_rank(F, tol);
}

Eigen::MatrixXd make_selector(const std::vector<std::string>& state_labels,
                              const std::vector<std::string>& targets) {
  std::map<std::string, Eigen::Index> idx;
  for (std::size_t i = 0; i < state_labels.size(); ++i)
    idx[state_labels[i]] = static_cast<Eigen::Index>(i);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(targets.size()),
                                            static_cast<Eigen::Index>(state_labels.size()));
  std::map<std::string, int> seen;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    auto it = idx.find(targets[r]);
    if (it == idx.end())
      throw std::invalid_argument("unknown target state label: " + targets[r]);
    if (++seen[targets[r]] > 1)
      throw std::invalid_argument("duplicate target state label: " + targets[r]);
    C(static_cast<Eigen::Index>(r), it->second) = 1.0;
  }
  return C;
}

double nuclear_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues().sum();
}

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()[0];
}

}  // namespace aquactrl
