#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cavlab {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Takes ownership of row-major entries; throws when the size disagrees.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n, double diag = 1.0);
  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  Vector column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  const std::vector<double>& values() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Vector helpers ------------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double cosine(std::span<const double> a, std::span<const double> b);
Vector operator-(const Vector& a, const Vector& b);
Vector operator+(const Vector& a, const Vector& b);
Vector operator*(double s, const Vector& a);

// Matrix helpers ------------------------------------------------------------

/// A x
Vector matvec(const Matrix& a, std::span<const double> x);
/// A^T x
Vector matvec_transposed(const Matrix& a, std::span<const double> x);
/// A A^T (rows x rows), symmetric by construction.
Matrix gram_rows(const Matrix& a);
Matrix transpose(const Matrix& a);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
/// tr(A B) for same-shaped A, B with B symmetric (equals the Frobenius inner product).
double trace_product_symmetric(const Matrix& a, const Matrix& b);
/// x^T A y
double quadratic_form(std::span<const double> x, const Matrix& a, std::span<const double> y);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

/// Lower-triangular Cholesky factor L with A = L L^T.
/// Throws Error{NotPositiveDefinite} on breakdown.
Matrix cholesky(const Matrix& a);

/// Solves A x = b for symmetric positive definite A via Cholesky.
Vector solve_spd(const Matrix& a, std::span<const double> b);

/// Largest eigenvalue of a symmetric positive semi-definite matrix (power
/// iteration from a fixed start vector; relative tolerance 1e-12).
double spectral_norm_psd(const Matrix& a);

// Labeled data ----------------------------------------------------------------

/// d x n activations (features in rows, examples in columns) with +-1 labels.
/// Label -1 is the non-concept class C1, +1 the concept class C2.
struct LabeledActivations {
  Matrix data;
  std::vector<int> labels;
  std::string layer_id;

  std::size_t dim() const noexcept { return data.rows(); }
  std::size_t count() const noexcept { return data.cols(); }
  std::size_t count_of(int label) const noexcept;

  /// Throws when labels are not +-1 or do not match the column count.
  void validate() const;
  /// Columns with the given label, in order, as a d x n_label matrix.
  Matrix columns_with_label(int label) const;
  /// Selected columns (with labels) in the given order.
  LabeledActivations subset(std::span<const std::size_t> columns) const;
};

/// Concatenates columns of a and b (same dimension).
LabeledActivations concat(const LabeledActivations& a, const LabeledActivations& b);

/// Inputs in columns with integer class ids 0..num_classes-1 (training data).
struct ClassDataset {
  Matrix inputs;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t count() const noexcept { return inputs.cols(); }
  void validate() const;
};

struct ClassStats {
  Vector mean;
  Matrix cov;
  std::size_t count = 0;
  double prior = 0.0;
};

/// Row means of a d x m matrix.
Vector row_means(const Matrix& columns);

/// Unbiased (m - 1) covariance of the columns of a d x m matrix around `mean`.
Matrix column_covariance(const Matrix& columns, std::span<const double> mean);

/// Plug-in statistics for (class -1, class +1). Each class needs >= 2 examples.
std::pair<ClassStats, ClassStats> empirical_class_stats(const LabeledActivations& acts);

}  // namespace cavlab
