#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace bilayer {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SaddlePointSolution {
  Eigen::VectorXd primal;
  Eigen::VectorXd multipliers;
  double residual = 0.0;  // ||KKT x - rhs||_inf / ||rhs||_inf
};

/// Direct solver for [[A, B^T], [B, 0]] (d, lambda) = (f, g) with A symmetric
/// and positive definite on ker B. The column ordering is computed once per
/// sparsity pattern and reused while only values change. One solve at a time.
class SaddlePointSolver {
 public:
  SaddlePointSolution solve(const Eigen::SparseMatrix<double>& A, const Eigen::SparseMatrix<double>& B,
                            const Eigen::VectorXd& f);
  SaddlePointSolution solve(const Eigen::SparseMatrix<double>& A, const Eigen::SparseMatrix<double>& B,
                            const Eigen::VectorXd& f, const Eigen::VectorXd& g);

  int analyze_count() const { return analyze_count_; }

  static constexpr double kResidualTolerance = 1e-9;

 private:
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<int> outer_;
  std::vector<int> inner_;
  int analyze_count_ = 0;
};

SaddlePointSolution factor_and_solve(const Eigen::SparseMatrix<double>& A,
                                     const Eigen::SparseMatrix<double>& B, const Eigen::VectorXd& rhs);

}  // namespace bilayer
