#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dagsm::linalg {

using Vec = std::vector<double>;

/// Square matrix in compressed sparse row form with sorted column indices.
struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::uint64_t> row_begin{0};
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  void multiply(std::span<const double> x, std::span<double> out) const {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (auto k = row_begin[i]; k < row_begin[i + 1]; ++k) acc += val[k] * x[col[k]];
      out[i] = acc;
    }
  }

  void multiply_transposed(std::span<const double> x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (auto k = row_begin[i]; k < row_begin[i + 1]; ++k) out[col[k]] += val[k] * xi;
    }
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

/// Incomplete LU factorization with the sparsity pattern of the matrix
/// (unit lower factor and upper factor share storage). Requires every row to
/// hold its diagonal entry.
class Ilu0 {
 public:
  explicit Ilu0(const CsrMatrix& a) : lu_(a), diag_(a.n) {
    const auto n = a.n;
    for (std::size_t i = 0; i < n; ++i) {
      auto k = lu_.row_begin[i];
      while (k < lu_.row_begin[i + 1] && lu_.col[k] < i) ++k;
      if (k == lu_.row_begin[i + 1] || lu_.col[k] != i) throw std::runtime_error("ILU(0): missing diagonal");
      diag_[i] = k;
    }
    std::vector<std::int64_t> pos(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto begin = lu_.row_begin[i], end = lu_.row_begin[i + 1];
      for (auto k = begin; k < end; ++k) pos[lu_.col[k]] = static_cast<std::int64_t>(k);
      for (auto k = begin; k < diag_[i]; ++k) {
        const auto kk = lu_.col[k];
        const double pivot = lu_.val[diag_[kk]];
        lu_.val[k] /= pivot;
        const double factor = lu_.val[k];
        for (auto m = diag_[kk] + 1; m < lu_.row_begin[kk + 1]; ++m) {
          const auto p = pos[lu_.col[m]];
          if (p >= 0) lu_.val[static_cast<std::size_t>(p)] -= factor * lu_.val[m];
        }
      }
      for (auto k = begin; k < end; ++k) pos[lu_.col[k]] = -1;
      if (lu_.val[diag_[i]] == 0.0 || !std::isfinite(lu_.val[diag_[i]])) {
        throw std::runtime_error("ILU(0): zero pivot");
      }
    }
  }

  /// Solves (LU) z = r.
  void solve(std::span<const double> r, std::span<double> z) const {
    const auto n = lu_.n;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = r[i];
      for (auto k = lu_.row_begin[i]; k < diag_[i]; ++k) acc -= lu_.val[k] * z[lu_.col[k]];
      z[i] = acc;
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double acc = z[ii];
      for (auto k = diag_[ii] + 1; k < lu_.row_begin[ii + 1]; ++k) acc -= lu_.val[k] * z[lu_.col[k]];
      z[ii] = acc / lu_.val[diag_[ii]];
    }
  }

  /// Solves (LU)^T z = r, i.e. U^T y = r then L^T z = y.
  void solve_transposed(std::span<const double> r, std::span<double> z) const {
    const auto n = lu_.n;
    std::copy(r.begin(), r.end(), z.begin());
    for (std::size_t i = 0; i < n; ++i) {
      z[i] /= lu_.val[diag_[i]];
      const double zi = z[i];
      for (auto k = diag_[i] + 1; k < lu_.row_begin[i + 1]; ++k) z[lu_.col[k]] -= lu_.val[k] * zi;
    }
    for (std::size_t ii = n; ii-- > 0;) {
      const double zi = z[ii];
      for (auto k = lu_.row_begin[ii]; k < diag_[ii]; ++k) z[lu_.col[k]] -= lu_.val[k] * zi;
    }
  }

 private:
  CsrMatrix lu_;
  std::vector<std::uint64_t> diag_;
};

struct SolveStats {
  bool converged = false;
  std::size_t iterations = 0;
  double residual = 0.0;  // relative: ||b - Ax|| / ||b||
  std::string method;
};

inline double relative_residual(const CsrMatrix& a, std::span<const double> b, std::span<const double> x) {
  Vec ax(a.n);
  a.multiply(x, ax);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.n; ++i) acc += (b[i] - ax[i]) * (b[i] - ax[i]);
  const double bn = norm2(b);
  return bn == 0.0 ? std::sqrt(acc) : std::sqrt(acc) / bn;
}

/// Preconditioned biconjugate gradient. x holds the initial guess on entry.
inline SolveStats bicg(const CsrMatrix& a, const Ilu0& m, std::span<const double> b, std::span<double> x,
                       double tol, std::size_t max_iter) {
  const auto n = a.n;
  SolveStats st{.method = "bicg"};
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    st.converged = true;
    return st;
  }
  Vec r(n), rt(n), z(n), zt(n), p(n), pt(n), q(n), qt(n);
  a.multiply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  rt = r;
  double rho_prev = 0.0;
  st.residual = norm2(r) / bnorm;
  if (st.residual <= tol) { st.converged = true; return st; }
  for (std::size_t it = 1; it <= max_iter; ++it) {
    st.iterations = it;
    m.solve(r, z);
    m.solve_transposed(rt, zt);
    const double rho = dot(z, rt);
    if (rho == 0.0 || !std::isfinite(rho)) return st;
    if (it == 1) {
      p = z;
      pt = zt;
    } else {
      const double beta = rho / rho_prev;
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = z[i] + beta * p[i];
        pt[i] = zt[i] + beta * pt[i];
      }
    }
    a.multiply(p, q);
    a.multiply_transposed(pt, qt);
    const double denom = dot(pt, q);
    if (denom == 0.0 || !std::isfinite(denom)) return st;
    const double alpha = rho / denom;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      rt[i] -= alpha * qt[i];
    }
    rho_prev = rho;
    st.residual = norm2(r) / bnorm;
    if (!std::isfinite(st.residual)) return st;
    if (st.residual <= tol) {
      st.residual = relative_residual(a, b, x);
      st.converged = st.residual <= 10.0 * tol && all_finite(x);
      if (st.converged) return st;
    }
  }
  return st;
}

/// Right-preconditioned BiCGSTAB. x holds the initial guess on entry.
inline SolveStats bicgstab(const CsrMatrix& a, const Ilu0& m, std::span<const double> b, std::span<double> x,
                           double tol, std::size_t max_iter) {
  const auto n = a.n;
  SolveStats st{.method = "bicgstab"};
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    st.converged = true;
    return st;
  }
  Vec r(n), r0(n), p(n, 0.0), v(n, 0.0), ph(n), s(n), sh(n), t(n);
  a.multiply(x, t);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
  r0 = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  st.residual = norm2(r) / bnorm;
  if (st.residual <= tol) { st.converged = true; return st; }
  for (std::size_t it = 1; it <= max_iter; ++it) {
    st.iterations = it;
    const double rho_new = dot(r0, r);
    if (rho_new == 0.0 || !std::isfinite(rho_new)) {
      // Restart with a fresh shadow residual.
      r0 = r;
      p.assign(n, 0.0);
      v.assign(n, 0.0);
      rho = alpha = omega = 1.0;
      continue;
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    m.solve(p, ph);
    a.multiply(ph, v);
    const double den = dot(r0, v);
    if (den == 0.0 || !std::isfinite(den)) return st;
    alpha = rho_new / den;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (norm2(s) / bnorm <= tol) {
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * ph[i];
      st.residual = relative_residual(a, b, x);
      st.converged = st.residual <= 10.0 * tol && all_finite(x);
      if (st.converged) return st;
      r = s;
      rho = rho_new;
      continue;
    }
    m.solve(s, sh);
    a.multiply(sh, t);
    const double tt = dot(t, t);
    if (tt == 0.0 || !std::isfinite(tt)) return st;
    omega = dot(t, s) / tt;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * ph[i] + omega * sh[i];
      r[i] = s[i] - omega * t[i];
    }
    rho = rho_new;
    st.residual = norm2(r) / bnorm;
    if (!std::isfinite(st.residual)) return st;
    if (st.residual <= tol) {
      st.residual = relative_residual(a, b, x);
      st.converged = st.residual <= 10.0 * tol && all_finite(x);
      if (st.converged) return st;
    }
    if (omega == 0.0) return st;
  }
  return st;
}

}  // namespace dagsm::linalg
