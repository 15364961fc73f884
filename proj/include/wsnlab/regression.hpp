#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wsnlab/dataset.hpp"
#include "wsnlab/errors.hpp"

namespace wsnlab {

// Dense row-major matrix, just enough for least squares on a few columns.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  std::vector<double> multiply(std::span<const double> x) const {
    std::vector<double> y(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) y[r] += (*this)(r, c) * x[c];
    return y;
  }

  // A^T y
  std::vector<double> multiply_transposed(std::span<const double> y) const {
    std::vector<double> x(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) x[c] += (*this)(r, c) * y[r];
    return x;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct DesignMatrix {
  Matrix P;                        // M x (N + 1), column 0 all ones
  std::vector<double> E;           // response
  std::vector<std::string> names;  // the N selected parameters, column order
};

inline DesignMatrix design_matrix(const Dataset& data, const std::vector<std::string>& selected) {
  DesignMatrix d;
  const std::size_t m = data.rows();
  const std::size_t n = selected.size();
  std::vector<const std::vector<double>*> cols;
  for (const auto& s : selected) {
    auto i = data.find(s);
    if (!i) throw LookupError("selected parameter '" + s + "' is not a dataset column");
    cols.push_back(&data.columns[*i]);
    d.names.push_back(data.names[*i]);
  }
  if (m < n + 1)
    throw InsufficientDataError("under-determined fit: " + std::to_string(m) + " rows for " +
                                std::to_string(n + 1) + " coefficients");
  d.P = Matrix(m, n + 1);
  for (std::size_t r = 0; r < m; ++r) {
    d.P(r, 0) = 1.0;
    for (std::size_t c = 0; c < n; ++c) d.P(r, c + 1) = (*cols[c])[r];
  }
  d.E = data.response;
  return d;
}

// Householder QR of a tall matrix; keeps the reflectors so further right-hand
// sides can be solved against the same factorization.
class HouseholderQR {
 public:
  explicit HouseholderQR(const Matrix& a) : m_(a.rows()), n_(a.cols()), qr_(a), diag_(a.cols()), vnorm2_(a.cols(), 0.0) {
    for (std::size_t j = 0; j < n_; ++j) {
      double norm = 0.0;
      for (std::size_t i = j; i < m_; ++i) norm = std::hypot(norm, qr_(i, j));
      if (norm == 0.0) {
        diag_[j] = 0.0;
        continue;
      }
      double alpha = qr_(j, j) > 0 ? -norm : norm;
      // v = x - alpha e1, stored in place below (and on) the diagonal.
      qr_(j, j) -= alpha;
      double vnorm2 = 0.0;
      for (std::size_t i = j; i < m_; ++i) vnorm2 += qr_(i, j) * qr_(i, j);
      for (std::size_t c = j + 1; c < n_; ++c) {
        double s = 0.0;
        for (std::size_t i = j; i < m_; ++i) s += qr_(i, j) * qr_(i, c);
        s = 2.0 * s / vnorm2;
        for (std::size_t i = j; i < m_; ++i) qr_(i, c) -= s * qr_(i, j);
      }
      vnorm2_[j] = vnorm2;
      diag_[j] = alpha;
    }
  }

  const std::vector<double>& r_diagonal() const noexcept { return diag_; }

  Matrix r() const {
    Matrix out(n_, n_);
    for (std::size_t i = 0; i < n_; ++i) {
      out(i, i) = diag_[i];
      for (std::size_t j = i + 1; j < n_; ++j) out(i, j) = qr_(i, j);
    }
    return out;
  }

  // Least-squares solution of A x = b; R must be nonsingular.
  std::vector<double> solve(std::span<const double> b) const {
    std::vector<double> y(b.begin(), b.end());
    for (std::size_t j = 0; j < n_; ++j) {
      if (vnorm2_[j] == 0.0) continue;
      double s = 0.0;
      for (std::size_t i = j; i < m_; ++i) s += qr_(i, j) * y[i];
      s = 2.0 * s / vnorm2_[j];
      for (std::size_t i = j; i < m_; ++i) y[i] -= s * qr_(i, j);
    }
    std::vector<double> x(n_, 0.0);
    for (std::size_t k = n_; k-- > 0;) {
      double s = y[k];
      for (std::size_t j = k + 1; j < n_; ++j) s -= qr_(k, j) * x[j];
      x[k] = s / diag_[k];
    }
    return x;
  }

 private:
  std::size_t m_, n_;
  Matrix qr_;
  std::vector<double> diag_;
  std::vector<double> vnorm2_;
};

// Singular values of a small square matrix by one-sided Jacobi rotations.
inline std::vector<double> singular_values(Matrix a) {
  const std::size_t n = a.cols();
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) {
          alpha += a(i, p) * a(i, p);
          beta += a(i, q) * a(i, q);
          gamma += a(i, p) * a(i, q);
        }
        if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        double zeta = (beta - alpha) / (2.0 * gamma);
        double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (std::size_t i = 0; i < a.rows(); ++i) {
          double x = a(i, p), y = a(i, q);
          a(i, p) = c * x - s * y;
          a(i, q) = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * a(i, j);
    sv[j] = std::sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

struct LinearModel {
  std::vector<std::string> names;  // parameters, coefficient order
  double intercept = 0.0;          // alpha_0
  std::vector<double> coefficients;  // alpha_1 .. alpha_N
  double lse = 0.0;                // sqrt of the residual sum of squares on the training set
  double condition = 0.0;          // estimate of cond(P^T P)
  std::size_t samples = 0;
  std::string provenance;          // training data hash / seed range

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct FitOptions {
  double max_condition = 1e12;
  double orthogonality_tol = 1e-8;
};

inline double least_square_error(const Matrix& P, std::span<const double> E, std::span<const double> a) {
  auto fitted = P.multiply(a);
  double s = 0.0;
  for (std::size_t i = 0; i < fitted.size(); ++i) s += (fitted[i] - E[i]) * (fitted[i] - E[i]);
  return std::sqrt(s);
}

namespace detail {

inline double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline std::vector<double> gradient_residual(const Matrix& P, std::span<const double> E,
                                             std::span<const double> a) {
  auto fitted = P.multiply(a);
  std::vector<double> r(E.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = E[i] - fitted[i];
  return P.multiply_transposed(r);
}

}  // namespace detail

// Coefficients A solving P^T P A = P^T E, computed from a QR factorization of
// P. Rejects rank-deficient or ill-conditioned designs, naming the columns
// responsible.
inline LinearModel fit(const DesignMatrix& d, const FitOptions& opt = {}) {
  const Matrix& P = d.P;
  const std::size_t m = P.rows();
  const std::size_t k = P.cols();
  if (d.E.size() != m) throw ArityError("response length differs from design rows");
  if (k == 0) throw DataError("design matrix has no columns");
  if (m < k) throw InsufficientDataError("under-determined fit");
  for (std::size_t r = 0; r < m; ++r) {
    if (!std::isfinite(d.E[r])) throw DataError("non-finite response");
    for (std::size_t c = 0; c < k; ++c)
      if (!std::isfinite(P(r, c))) throw DataError("non-finite design entry");
  }
  auto column_label = [&](std::size_t c) {
    return c == 0 ? std::string("intercept") : (c - 1 < d.names.size() ? d.names[c - 1] : "column " + std::to_string(c));
  };

  HouseholderQR qr(P);
  const auto& diag = qr.r_diagonal();
  std::vector<double> ratio(k);
  std::vector<std::string> dependent;
  for (std::size_t c = 0; c < k; ++c) {
    double norm = 0.0;
    for (std::size_t r = 0; r < m; ++r) norm = std::hypot(norm, P(r, c));
    ratio[c] = norm > 0.0 ? std::abs(diag[c]) / norm : 0.0;
    if (ratio[c] <= 1e-10) dependent.push_back(column_label(c));
  }
  if (!dependent.empty()) {
    std::string msg = "rank-deficient design; linearly dependent column(s):";
    for (const auto& s : dependent) msg += " " + s;
    throw RankDeficiencyError(msg, dependent);
  }

  auto sv = singular_values(qr.r());
  double cond_r = sv.back() > 0.0 ? sv.front() / sv.back() : std::numeric_limits<double>::infinity();
  double cond = cond_r * cond_r;
  if (!(cond < opt.max_condition)) {
    std::size_t worst = static_cast<std::size_t>(std::min_element(ratio.begin(), ratio.end()) - ratio.begin());
    throw RankDeficiencyError("ill-conditioned design (cond(P^T P) ~ " + std::to_string(cond) +
                                  "); weakest column: " + column_label(worst),
                              {column_label(worst)});
  }

  auto a = qr.solve(d.E);
  const double scale = detail::inf_norm(P.multiply_transposed(d.E));
  for (int pass = 0; pass < 3; ++pass) {
    auto g = detail::gradient_residual(P, d.E, a);
    if (detail::inf_norm(g) <= opt.orthogonality_tol * scale) break;
    // Iterative refinement: solve for the correction on the current residual.
    auto fitted = P.multiply(a);
    std::vector<double> r(m);
    for (std::size_t i = 0; i < m; ++i) r[i] = d.E[i] - fitted[i];
    auto delta = qr.solve(r);
    for (std::size_t c = 0; c < k; ++c) a[c] += delta[c];
  }
  if (detail::inf_norm(detail::gradient_residual(P, d.E, a)) > opt.orthogonality_tol * scale)
    throw NumericalError("least-squares residual is not orthogonal to the design columns");

  LinearModel model;
  model.names = d.names;
  model.intercept = a[0];
  model.coefficients.assign(a.begin() + 1, a.end());
  model.lse = least_square_error(P, d.E, a);
  model.condition = cond;
  model.samples = m;
  for (double c : a)
    if (!std::isfinite(c)) throw NumericalError("non-finite coefficient");
  return model;
}

// alpha_0 + sum alpha_i p_i, with p given in model name order.
inline double predict(const LinearModel& model, std::span<const double> params) {
  if (params.size() != model.coefficients.size())
    throw ArityError("prediction needs " + std::to_string(model.coefficients.size()) + " values");
  double y = model.intercept;
  for (std::size_t i = 0; i < params.size(); ++i) y += model.coefficients[i] * params[i];
  return y;
}

inline std::vector<double> predict_all(const LinearModel& model, const Dataset& data) {
  std::vector<const std::vector<double>*> cols;
  for (const auto& n : model.names) cols.push_back(&data.column(n));
  std::vector<double> out(data.rows());
  std::vector<double> row(cols.size());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) row[c] = (*cols[c])[r];
    out[r] = predict(model, row);
  }
  return out;
}

struct EvaluationRow {
  std::size_t row = 0;
  std::uint64_t seed = 0;
  double truth = 0.0;
  double predicted = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  bool excluded = false;  // |truth| below the denominator floor

  friend bool operator==(const EvaluationRow&, const EvaluationRow&) = default;
};

struct EvaluationReport {
  std::vector<EvaluationRow> rows;
  double mean_rel_error = 0.0;
  double max_rel_error = 0.0;
  double lse = 0.0;
  std::size_t excluded = 0;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

inline constexpr double kRelErrorFloor = 1e-12;  // J

inline EvaluationReport evaluate(const LinearModel& model, const Dataset& holdout) {
  if (holdout.rows() == 0) throw InsufficientDataError("empty holdout set");
  auto pred = predict_all(model, holdout);
  EvaluationReport rep;
  double sum_rel = 0.0, sse = 0.0;
  std::size_t counted = 0;
  for (std::size_t r = 0; r < holdout.rows(); ++r) {
    EvaluationRow row;
    row.row = r;
    row.seed = r < holdout.seeds.size() ? holdout.seeds[r] : r;
    row.truth = holdout.response[r];
    row.predicted = pred[r];
    row.abs_error = std::abs(row.predicted - row.truth);
    sse += row.abs_error * row.abs_error;
    if (std::abs(row.truth) < kRelErrorFloor) {
      row.excluded = true;
      ++rep.excluded;
    } else {
      row.rel_error = row.abs_error / std::abs(row.truth);
      sum_rel += row.rel_error;
      rep.max_rel_error = std::max(rep.max_rel_error, row.rel_error);
      ++counted;
    }
    rep.rows.push_back(row);
  }
  rep.mean_rel_error = counted ? sum_rel / static_cast<double>(counted) : 0.0;
  rep.lse = std::sqrt(sse);
  return rep;
}

}  // namespace wsnlab
