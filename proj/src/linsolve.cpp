#include "bilayer/linsolve.hpp"

#include <algorithm>
#include <string>

namespace bilayer {

namespace {

Eigen::SparseMatrix<double> assemble_kkt(const Eigen::SparseMatrix<double>& A,
                                         const Eigen::SparseMatrix<double>& B) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.rows();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(A.nonZeros() + 2 * B.nonZeros()));
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
      triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int k = 0; k < B.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(B, k); it; ++it) {
      triplets.emplace_back(static_cast<int>(n + it.row()), static_cast<int>(it.col()), it.value());
      triplets.emplace_back(static_cast<int>(it.col()), static_cast<int>(n + it.row()), it.value());
    }
  Eigen::SparseMatrix<double> K(n + m, n + m);
  K.setFromTriplets(triplets.begin(), triplets.end());
  K.makeCompressed();
  return K;
}

}  // namespace

SaddlePointSolution SaddlePointSolver::solve(const Eigen::SparseMatrix<double>& A,
                                             const Eigen::SparseMatrix<double>& B,
                                             const Eigen::VectorXd& f) {
  return solve(A, B, f, Eigen::VectorXd::Zero(B.rows()));
}

SaddlePointSolution SaddlePointSolver::solve(const Eigen::SparseMatrix<double>& A,
                                             const Eigen::SparseMatrix<double>& B,
                                             const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.rows();
  if (A.cols() != n || (m > 0 && B.cols() != n) || f.size() != n || g.size() != m)
    throw SolverError("saddle point system: inconsistent dimensions");
  if (m > n) throw SolverError("saddle point system: more constraints than unknowns");

  Eigen::VectorXd rhs(n + m);
  rhs << f, g;
  SaddlePointSolution out;
  const double rhs_norm = rhs.size() ? rhs.cwiseAbs().maxCoeff() : 0.0;
  if (rhs_norm == 0.0) {
    out.primal = Eigen::VectorXd::Zero(n);
    out.multipliers = Eigen::VectorXd::Zero(m);
    return out;
  }

  const Eigen::SparseMatrix<double> K = assemble_kkt(A, B);
  const bool same_pattern =
      analyze_count_ > 0 && static_cast<Eigen::Index>(outer_.size()) == K.outerSize() + 1 &&
      static_cast<Eigen::Index>(inner_.size()) == K.nonZeros() &&
      std::equal(outer_.begin(), outer_.end(), K.outerIndexPtr()) &&
      std::equal(inner_.begin(), inner_.end(), K.innerIndexPtr());
  if (!same_pattern) {
    lu_.analyzePattern(K);
    outer_.assign(K.outerIndexPtr(), K.outerIndexPtr() + K.outerSize() + 1);
    inner_.assign(K.innerIndexPtr(), K.innerIndexPtr() + K.nonZeros());
    ++analyze_count_;
  }
  lu_.factorize(K);
  if (lu_.info() != Eigen::Success)
    throw SolverError("saddle point factorization failed: " + lu_.lastErrorMessage());

  const Eigen::VectorXd x = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success || !x.allFinite())
    throw SolverError("saddle point solve produced no finite solution");
  out.residual = (K * x - rhs).cwiseAbs().maxCoeff() / rhs_norm;
  if (!(out.residual <= kResidualTolerance))
    throw SolverError("saddle point solve residual " + std::to_string(out.residual) +
                      " exceeds tolerance (numerically singular system)");
  out.primal = x.head(n);
  out.multipliers = x.tail(m);
  return out;
}

SaddlePointSolution factor_and_solve(const Eigen::SparseMatrix<double>& A,
                                     const Eigen::SparseMatrix<double>& B, const Eigen::VectorXd& rhs) {
  SaddlePointSolver solver;
  if (rhs.size() == A.rows()) return solver.solve(A, B, rhs);
  if (rhs.size() != A.rows() + B.rows()) throw SolverError("saddle point system: bad rhs length");
  return solver.solve(A, B, rhs.head(A.rows()), rhs.tail(B.rows()));
}

}  // namespace bilayer
