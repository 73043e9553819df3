#include "cavlab/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "cavlab/error.hpp"
#include "cavlab/kernels.hpp"

namespace cavlab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::DegenerateClass: return "degenerate_class";
    case ErrorCode::NotPositiveDefinite: return "not_positive_definite";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::Diverged: return "diverged";
    case ErrorCode::Io: return "io";
    case ErrorCode::Format: return "format";
  }
  return "unknown";
}

bool is_numerical(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DegenerateClass:
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::Degenerate:
    case ErrorCode::Diverged:
      return true;
    default:
      return false;
  }
}

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": " + std::to_string(a) +
                                                  " vs " + std::to_string(b));
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_same_size(rows_ * cols_, data_.size(), "matrix entry count");
}

Matrix Matrix::identity(std::size_t n, double diag) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = diag;
  return m;
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require_same_size(rows[r].size(), m.cols(), "row length");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

Vector Matrix::column(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_column(std::size_t c, std::span<const double> values) {
  require_same_size(values.size(), rows_, "column length");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  return kernels::dot(a.data(), b.data(), a.size());
}

double norm2(std::span<const double> a) { return std::sqrt(kernels::dot(a.data(), a.data(), a.size())); }

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm2(a), nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

Vector operator-(const Vector& a, const Vector& b) {
  require_same_size(a.size(), b.size(), "vector subtraction");
  Vector out(a.size());
  kernels::sub(a.data(), b.data(), out.data(), a.size());
  return out;
}

Vector operator+(const Vector& a, const Vector& b) {
  require_same_size(a.size(), b.size(), "vector addition");
  Vector out = a;
  kernels::axpy(1.0, b.data(), out.data(), out.size());
  return out;
}

Vector operator*(double s, const Vector& a) {
  Vector out = a;
  kernels::scal(s, out.data(), out.size());
  return out;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  require_same_size(a.cols(), x.size(), "matvec");
  Vector out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) out[r] = kernels::dot(a.row(r).data(), x.data(), x.size());
  return out;
}

Vector matvec_transposed(const Matrix& a, std::span<const double> x) {
  require_same_size(a.rows(), x.size(), "matvec_transposed");
  Vector out(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) kernels::axpy(x[r], a.row(r).data(), out.data(), out.size());
  return out;
}

Matrix gram_rows(const Matrix& a) {
  Matrix g(a.rows(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = kernels::dot(a.row(i).data(), a.row(j).data(), a.cols());
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_size(a.rows(), b.rows(), "matrix addition rows");
  require_same_size(a.cols(), b.cols(), "matrix addition cols");
  Matrix out = a;
  kernels::axpy(1.0, b.data(), out.data(), out.size());
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  kernels::scal(s, out.data(), out.size());
  return out;
}

double trace_product_symmetric(const Matrix& a, const Matrix& b) {
  require_same_size(a.size(), b.size(), "trace product");
  return kernels::dot(a.data(), b.data(), a.size());
}

double quadratic_form(std::span<const double> x, const Matrix& a, std::span<const double> y) {
  return dot(x, matvec(a, y));
}

double frobenius_norm(const Matrix& a) { return std::sqrt(kernels::dot(a.data(), a.data(), a.size())); }

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

Matrix cholesky(const Matrix& a) {
  require_same_size(a.rows(), a.cols(), "cholesky (square)");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double partial = kernels::dot(l.row(i).data(), l.row(j).data(), j);
      const double v = a(i, j) - partial;
      if (i == j) {
        if (!(v > 0.0) || !std::isfinite(v))
          throw Error(ErrorCode::NotPositiveDefinite,
                      "not positive definite: pivot " + std::to_string(i) + " is " + std::to_string(v));
        l(i, i) = std::sqrt(v);
      } else {
        l(i, j) = v / l(j, j);
      }
    }
  }
  return l;
}

Vector solve_spd(const Matrix& a, std::span<const double> b) {
  require_same_size(a.rows(), b.size(), "solve_spd");
  const Matrix l = cholesky(a);
  const std::size_t n = b.size();
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = (b[i] - kernels::dot(l.row(i).data(), y.data(), i)) / l(i, i);
  // L^T x = y, using rows of L^T for contiguous access.
  const Matrix lt = transpose(l);
  Vector x(n);
  for (std::size_t k = n; k-- > 0;) {
    const std::size_t tail = n - k - 1;
    x[k] = (y[k] - kernels::dot(lt.row(k).data() + k + 1, x.data() + k + 1, tail)) / lt(k, k);
  }
  return x;
}

double spectral_norm_psd(const Matrix& a) {
  require_same_size(a.rows(), a.cols(), "spectral norm (square)");
  const std::size_t n = a.rows();
  if (n == 0) return 0.0;
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i + 1));
  kernels::scal(1.0 / norm2(v), v.data(), n);
  double lambda = 0.0;
  for (int iter = 0; iter < 20000; ++iter) {
    Vector av = matvec(a, v);
    const double next = dot(v, av);
    const double len = norm2(av);
    if (len == 0.0) return 0.0;
    kernels::scal(1.0 / len, av.data(), n);
    v = std::move(av);
    if (iter > 0 && std::abs(next - lambda) <= 1e-12 * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

std::size_t LabeledActivations::count_of(int label) const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void LabeledActivations::validate() const {
  require_same_size(labels.size(), data.cols(), "label count vs columns");
  for (int y : labels)
    if (y != -1 && y != 1)
      throw Error(ErrorCode::InvalidArgument, "labels must be -1 or +1, got " + std::to_string(y));
}

Matrix LabeledActivations::columns_with_label(int label) const {
  Matrix out(data.rows(), count_of(label));
  std::size_t k = 0;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (labels[c] != label) continue;
    for (std::size_t r = 0; r < data.rows(); ++r) out(r, k) = data(r, c);
    ++k;
  }
  return out;
}

LabeledActivations LabeledActivations::subset(std::span<const std::size_t> columns) const {
  LabeledActivations out{Matrix(data.rows(), columns.size()), {}, layer_id};
  out.labels.reserve(columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const std::size_t c = columns[k];
    if (c >= data.cols()) throw Error(ErrorCode::InvalidArgument, "column index out of range");
    for (std::size_t r = 0; r < data.rows(); ++r) out.data(r, k) = data(r, c);
    out.labels.push_back(labels[c]);
  }
  return out;
}

void ClassDataset::validate() const {
  require_same_size(labels.size(), inputs.cols(), "label count vs columns");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
      throw Error(ErrorCode::InvalidArgument, "class label " + std::to_string(y) + " outside 0.." +
                                                  std::to_string(num_classes) + ")");
}

LabeledActivations concat(const LabeledActivations& a, const LabeledActivations& b) {
  require_same_size(a.dim(), b.dim(), "concat dimension");
  LabeledActivations out{Matrix(a.dim(), a.count() + b.count()), a.labels, a.layer_id};
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  for (std::size_t r = 0; r < a.dim(); ++r) {
    auto dst = out.data.row(r);
    std::copy(a.data.row(r).begin(), a.data.row(r).end(), dst.begin());
    std::copy(b.data.row(r).begin(), b.data.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.count()));
  }
  return out;
}

Vector row_means(const Matrix& columns) {
  Vector mean(columns.rows());
  const double inv = columns.cols() > 0 ? 1.0 / static_cast<double>(columns.cols()) : 0.0;
  for (std::size_t r = 0; r < columns.rows(); ++r)
    mean[r] = kernels::sum(columns.row(r).data(), columns.cols()) * inv;
  return mean;
}

Matrix column_covariance(const Matrix& columns, std::span<const double> mean) {
  require_same_size(columns.rows(), mean.size(), "covariance mean");
  if (columns.cols() < 2) throw Error(ErrorCode::DegenerateClass, "covariance needs at least 2 columns");
  Matrix centered = columns;
  for (std::size_t r = 0; r < centered.rows(); ++r)
    for (double& v : centered.row(r)) v -= mean[r];
  Matrix cov = gram_rows(centered);
  kernels::scal(1.0 / static_cast<double>(columns.cols() - 1), cov.data(), cov.size());
  return cov;
}

std::pair<ClassStats, ClassStats> empirical_class_stats(const LabeledActivations& acts) {
  acts.validate();
  const double n = static_cast<double>(acts.count());
  auto stats_for = [&](int label) {
    const Matrix cols = acts.columns_with_label(label);
    if (cols.cols() < 2)
      throw Error(ErrorCode::DegenerateClass, "degenerate class: label " + std::to_string(label) +
                                                  " has " + std::to_string(cols.cols()) +
                                                  " examples, need >= 2");
    ClassStats s;
    s.mean = row_means(cols);
    s.cov = column_covariance(cols, s.mean);
    s.count = cols.cols();
    s.prior = static_cast<double>(s.count) / n;
    return s;
  };
  return {stats_for(-1), stats_for(1)};
}

}  // namespace cavlab
