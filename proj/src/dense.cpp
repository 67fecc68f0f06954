#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dolbeault/eigensolver.hpp"
#include "dolbeault/errors.hpp"

namespace dolbeault {

void tridiagonal_eigen(std::vector<double>& d, std::vector<double> e, std::vector<double>* z) {
  const std::size_t n = d.size();
  if (n == 0) return;
  e.resize(n, 0.0);
  e[n - 1] = 0.0;
  const std::size_t r = z ? z->size() / n : 0;
  if (z && z->size() != r * n) throw ValidationError("tridiagonal_eigen: vector block has the wrong size");
  constexpr double eps = std::numeric_limits<double>::epsilon();
  // Absolute floor so eigenvalues near zero (zero diagonal, odd size) deflate.
  double tnorm = 0.0;
  for (std::size_t i = 0; i < n; ++i) tnorm = std::max(tnorm, std::abs(d[i]) + 2.0 * std::abs(e[i]));
  const double floor_tol = eps * tnorm;

  // z is stored as n slots of r tracked components: slot i belongs to column i.
  auto rotate = [&](std::size_t i, double s, double c) {
    double* zi = z->data() + i * r;
    double* zj = zi + r;
    for (std::size_t k = 0; k < r; ++k) {
      const double f = zj[k];
      zj[k] = s * zi[k] + c * f;
      zi[k] = c * zi[k] - s * f;
    }
  };

  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m = l;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd || std::abs(e[m]) <= floor_tol) break;
      }
      if (m != l) {
        if (++iter > 200) throw ConsistencyError("tridiagonal_eigen: QL iteration did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double rr = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(rr, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        bool underflow = false;
        for (std::size_t ii = m; ii-- > l;) {
          double f = s * e[ii];
          const double b = c * e[ii];
          rr = std::hypot(f, g);
          e[ii + 1] = rr;
          if (rr == 0.0) {
            d[ii + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / rr;
          c = g / rr;
          g = d[ii + 1] - p;
          rr = (d[ii] - g) * s + 2.0 * c * b;
          p = s * rr;
          d[ii + 1] = g + p;
          g = c * rr - b;
          if (z) rotate(ii, s, c);
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = d[order[i]];
  d.swap(sorted);
  if (z) {
    std::vector<double> zs(z->size());
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(z->data() + order[i] * r, r, zs.data() + i * r);
    z->swap(zs);
  }
}

EigenResult dense_eigh(std::vector<cplx> a, std::size_t n, bool want_vectors) {
  if (a.size() != n * n) throw ValidationError("dense_eigh: matrix size mismatch");
  EigenResult res;
  res.converged = true;
  if (n == 0) return res;

  // Householder reduction A = Q T Q^H, Q = H_0 H_1 ... with H_k = I - 2 v v^H
  // acting on indices k+1 .. n-1.
  std::vector<std::vector<cplx>> reflectors;
  std::vector<cplx> p(n);
  std::vector<cplx> w(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t len = n - k - 1;
    std::vector<cplx> v(len);
    double alpha2 = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      v[i] = a[(k + 1 + i) * n + k];
      alpha2 += std::norm(v[i]);
    }
    const double tail = alpha2 - std::norm(v[0]);
    if (tail <= 1e-300) {
      reflectors.emplace_back();
      continue;
    }
    const double alpha = std::sqrt(alpha2);
    const double x0abs = std::abs(v[0]);
    const cplx phase = x0abs > 0.0 ? v[0] / x0abs : cplx{1.0, 0.0};
    v[0] += phase * alpha;
    const double vnorm = std::sqrt(2.0 * alpha * (alpha + x0abs));
    for (auto& x : v) x /= vnorm;

    // p = A' v on the trailing block, K = v^H p, w = p - K v.
    const std::size_t off = k + 1;
    for (std::size_t i = 0; i < len; ++i) {
      const cplx* row = a.data() + (off + i) * n + off;
      double re = 0.0;
      double im = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        re += row[j].real() * v[j].real() - row[j].imag() * v[j].imag();
        im += row[j].real() * v[j].imag() + row[j].imag() * v[j].real();
      }
      p[i] = {re, im};
    }
    double kk = 0.0;
    for (std::size_t i = 0; i < len; ++i) kk += (std::conj(v[i]) * p[i]).real();
    for (std::size_t i = 0; i < len; ++i) w[i] = p[i] - kk * v[i];
    // A' -= 2 (v w^H + w v^H)
    for (std::size_t i = 0; i < len; ++i) {
      cplx* row = a.data() + (off + i) * n + off;
      const double vr = 2.0 * v[i].real();
      const double vi = 2.0 * v[i].imag();
      const double wr = 2.0 * w[i].real();
      const double wi = 2.0 * w[i].imag();
      for (std::size_t j = 0; j < len; ++j) {
        const double wjr = w[j].real();
        const double wji = -w[j].imag();
        const double vjr = v[j].real();
        const double vji = -v[j].imag();
        row[j] = {row[j].real() - (vr * wjr - vi * wji) - (wr * vjr - wi * vji),
                  row[j].imag() - (vr * wji + vi * wjr) - (wr * vji + wi * vjr)};
      }
    }
    const cplx sub = -phase * alpha;
    a[(k + 1) * n + k] = sub;
    a[k * n + k + 1] = std::conj(sub);
    for (std::size_t i = 2; i <= len; ++i) {
      a[(k + i) * n + k] = 0.0;
      a[k * n + k + i] = 0.0;
    }
    reflectors.push_back(std::move(v));
  }

  // Make the tridiagonal real: T = D T_r D^H with unimodular D.
  std::vector<double> diag(n);
  std::vector<double> off(n, 0.0);
  std::vector<cplx> delta(n, {1.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) diag[i] = a[i * n + i].real();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const cplx e = a[(i + 1) * n + i];
    const double mag = std::abs(e);
    off[i] = mag;
    delta[i + 1] = mag > 0.0 ? delta[i] * (e / mag) : delta[i];
  }

  std::vector<double> zt;
  if (want_vectors) {
    zt.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) zt[i * n + i] = 1.0;
  }
  tridiagonal_eigen(diag, off, want_vectors ? &zt : nullptr);
  res.eigenvalues = diag;

  if (want_vectors) {
    res.eigenvectors.resize(n);
    for (std::size_t col = 0; col < n; ++col) {
      std::vector<cplx> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = delta[i] * zt[col * n + i];
      for (std::size_t k = reflectors.size(); k-- > 0;) {
        const auto& v = reflectors[k];
        if (v.empty()) continue;
        const std::size_t o = k + 1;
        cplx s{0.0, 0.0};
        for (std::size_t i = 0; i < v.size(); ++i) s += std::conj(v[i]) * y[o + i];
        s *= 2.0;
        for (std::size_t i = 0; i < v.size(); ++i) y[o + i] -= s * v[i];
      }
      res.eigenvectors[col] = std::move(y);
    }
  }
  return res;
}

EigenResult dense_oracle(const CsrMatrix& m, bool want_vectors) {
  if (m.rows() != m.cols()) throw ValidationError("dense_oracle: matrix must be square");
  if (m.rows() > kDenseOracleMaxDim)
    throw ValidationError("dense_oracle: dimension " + std::to_string(m.rows()) + " exceeds the cap of " +
                          std::to_string(kDenseOracleMaxDim));
  const auto n = static_cast<std::size_t>(m.rows());
  auto res = dense_eigh(m.to_dense(), n, want_vectors);
  res.norm_bound = m.gershgorin_bound();
  if (want_vectors) {
    const double scale_ref = std::max(res.norm_bound, 1e-300);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = m.apply(res.eigenvectors[i]);
      axpy(-res.eigenvalues[i], res.eigenvectors[i], r);
      res.residuals.push_back(norm2(r) / scale_ref);
    }
  }
  res.iterations = 1;
  return res;
}

EigenResult dense_oracle(const OperatorHandle& op, bool want_vectors) { return dense_oracle(op.matrix, want_vectors); }

double orthonormality_check(const EigenResult& res) {
  double worst = 0.0;
  const auto& v = res.eigenvectors;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i; j < v.size(); ++j) {
      const cplx g = dot(v[i], v[j]);
      worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

}  // namespace dolbeault
