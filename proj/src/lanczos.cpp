#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dolbeault/eigensolver.hpp"
#include "dolbeault/errors.hpp"

namespace dolbeault {

HermitianOperator as_operator(const CsrMatrix& m) {
  HermitianOperator op;
  op.dim = static_cast<std::size_t>(m.rows());
  op.norm_bound = m.gershgorin_bound();
  op.apply = [&m](std::span<const cplx> x, std::span<cplx> y) { m.apply(x, y); };
  return op;
}

HermitianOperator as_operator(const OperatorHandle& h) { return as_operator(h.matrix); }

namespace {

struct RitzPair {
  double value = 0.0;
  std::vector<cplx> vector;
  double residual = 0.0;  // absolute
};

// Orthogonalise w against every vector in the sets (classical Gram-Schmidt, twice).
void orthogonalize(std::span<cplx> w, const std::vector<std::vector<cplx>>& a,
                   const std::vector<std::vector<cplx>>& b) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto* set : {&a, &b}) {
      std::vector<cplx> coef(set->size());
      for (std::size_t i = 0; i < set->size(); ++i) coef[i] = dot((*set)[i], w);
      for (std::size_t i = 0; i < set->size(); ++i) axpy(-coef[i], (*set)[i], w);
    }
  }
}

class LanczosDriver {
 public:
  LanczosDriver(const HermitianOperator& op, const EigenRequest& req)
      : op_(op), req_(req), rng_(req.seed), tmp_(op.dim) {
    sigma_up_ = op.norm_bound;
    abs_tol_ = req.tol * std::max(op.norm_bound, 1e-300);
  }

  // Ordering key: smaller is more wanted.
  double key(double value) const {
    switch (req_.mode) {
      case EigenMode::smallest: return value;
      case EigenMode::largest: return -value;
      case EigenMode::around_shift: return std::abs(value - req_.shift);
    }
    return value;
  }

  void apply_a(std::span<const cplx> x, std::span<cplx> y) { op_.apply(x, y); }

  void apply_krylov(std::span<const cplx> x, std::span<cplx> y) {
    op_.apply(x, y);
    if (req_.mode == EigenMode::smallest)
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigma_up_ * x[i] - y[i];
  }

  double to_a(double theta) const { return req_.mode == EigenMode::smallest ? sigma_up_ - theta : theta; }

  // Unit vector orthogonal to `locked` and `basis`; false when none exists.
  bool chiral() const { return req_.chiral_split > 0; }

  // Zero every entry outside block `b` (0: upper, 1: lower).
  void restrict_block(std::span<cplx> v, std::size_t b) const {
    const std::size_t split = req_.chiral_split;
    if (b == 0)
      std::fill(v.begin() + static_cast<std::ptrdiff_t>(split), v.end(), cplx{0.0, 0.0});
    else
      std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(split), cplx{0.0, 0.0});
  }

  // Chiral variant of orthogonalize: w lives in block b, and so does every
  // basis vector of the same parity; the others are orthogonal by support.
  void orthogonalize_block(std::span<cplx> w, const std::vector<std::vector<cplx>>& locked,
                           const std::vector<std::vector<cplx>>& basis, std::size_t b) const {
    restrict_block(w, b);
    const std::size_t lo = b == 0 ? 0 : req_.chiral_split;
    const std::size_t len = (b == 0 ? req_.chiral_split : op_.dim) - lo;
    auto ws = w.subspan(lo, len);
    auto sweep = [&](const std::vector<cplx>& u) {
      std::span<const cplx> us(u.data() + lo, len);
      const cplx c = dot(us, ws);
      if (c != cplx{0.0, 0.0}) axpy(-c, us, ws);
    };
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& u : locked) sweep(u);
      for (std::size_t q = b; q < basis.size(); q += 2) sweep(basis[q]);
    }
  }

  bool fresh_vector(std::vector<cplx>& v, const std::vector<std::vector<cplx>>& locked,
                    const std::vector<std::vector<cplx>>& basis, bool use_start, std::size_t block = 0) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      if (use_start && attempt == 0 && !req_.start.empty()) {
        if (req_.start.size() != op_.dim) throw ValidationError("lanczos: start vector has the wrong length");
        v = req_.start;
      } else {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        v.resize(op_.dim);
        for (auto& z : v) z = {u(rng_), u(rng_)};
        if (!req_.start.empty()) {
          // Keep fresh vectors inside the support pattern of the start vector.
          for (std::size_t i = 0; i < v.size(); ++i)
            if (req_.start[i] == cplx{0.0, 0.0}) v[i] = {0.0, 0.0};
        }
      }
      if (chiral()) restrict_block(v, block);
      const double before = norm2(v);
      orthogonalize(v, locked, basis);
      const double after = norm2(v);
      if (after > 1e-8 * before && after > 0.0) {
        scale(1.0 / after, v);
        return true;
      }
    }
    return false;
  }

  struct PassOutcome {
    std::vector<RitzPair> pairs;  // converged wanted pairs, most wanted first
    int iterations = 0;
    bool exhausted = false;       // the complement of `locked` was fully spanned
  };

  PassOutcome run_pass(const std::vector<std::vector<cplx>>& locked, int want, int budget, bool first_pass) {
    PassOutcome out;
    const std::size_t room = op_.dim - std::min(op_.dim, locked.size());
    const auto max_m = static_cast<std::size_t>(std::max<long long>(0, std::min<long long>(budget, static_cast<long long>(room))));
    if (max_m == 0) {
      out.exhausted = true;
      return out;
    }
    want = std::min<int>(want, static_cast<int>(max_m));

    std::vector<std::vector<cplx>> basis;
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<cplx> v;
    if (!fresh_vector(v, locked, basis, first_pass)) {
      out.exhausted = true;
      return out;
    }
    basis.push_back(v);
    std::vector<cplx> w(op_.dim);
    constexpr std::size_t kCheckEvery = 8;

    for (std::size_t j = 0; j < max_m; ++j) {
      apply_krylov(basis[j], w);
      const double a = dot(basis[j], w).real();
      alpha.push_back(a);
      axpy(-a, basis[j], w);
      if (j > 0) axpy(-beta[j - 1], basis[j - 1], w);
      if (chiral())
        orthogonalize_block(w, locked, basis, (j + 1) % 2);
      else
        orthogonalize(w, locked, basis);
      double b = norm2(w);
      ++out.iterations;
      const std::size_t m = j + 1;
      bool invariant = b <= 1e-13 * std::max(sigma_up_, 1e-300);
      const bool last = m == max_m;

      if (m >= static_cast<std::size_t>(want) && (m % kCheckEvery == 0 || invariant || last)) {
        auto est = ritz_estimates(alpha, beta, b, want);
        history_.insert(history_.end(), est.values.begin(), est.values.end());
        if (est.all_below(abs_tol_) || last) {
          auto pairs = ritz_pairs(alpha, beta, basis, want);
          const bool ok = std::all_of(pairs.begin(), pairs.end(),
                                      [&](const RitzPair& p) { return p.residual <= abs_tol_; });
          if (ok || last) {
            for (auto& p : pairs)
              if (p.residual <= abs_tol_) out.pairs.push_back(std::move(p));
            out.exhausted = last && m == room;
            return out;
          }
        }
      }
      if (last) break;
      if (invariant) {
        // Krylov space closed: continue with a fresh direction, T decouples.
        std::vector<cplx> fresh;
        if (!fresh_vector(fresh, locked, basis, false, (j + 1) % 2)) {
          auto pairs = ritz_pairs(alpha, beta, basis, want);
          for (auto& p : pairs)
            if (p.residual <= abs_tol_) out.pairs.push_back(std::move(p));
          out.exhausted = true;
          return out;
        }
        beta.push_back(0.0);
        basis.push_back(std::move(fresh));
        continue;
      }
      beta.push_back(b);
      scale(1.0 / b, w);
      basis.push_back(w);
    }
    return out;
  }

  std::vector<double>& history() { return history_; }
  double abs_tol() const { return abs_tol_; }

 private:
  struct Estimates {
    std::vector<double> values;
    std::vector<double> bounds;
    bool all_below(double tol) const {
      return std::all_of(bounds.begin(), bounds.end(), [tol](double b) { return b <= tol; });
    }
  };

  std::vector<std::size_t> wanted_order(const std::vector<double>& theta) const {
    std::vector<std::size_t> idx(theta.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t x, std::size_t y) { return key(to_a(theta[x])) < key(to_a(theta[y])); });
    return idx;
  }

  // Ritz values with residual bounds |beta_m * y_last|, tracking only the last
  // row of the tridiagonal eigenvector matrix.
  Estimates ritz_estimates(const std::vector<double>& alpha, const std::vector<double>& beta, double b_next,
                           int want) const {
    const std::size_t m = alpha.size();
    std::vector<double> d = alpha;
    std::vector<double> e(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(m - 1));
    std::vector<double> last(m, 0.0);
    last[m - 1] = 1.0;
    tridiagonal_eigen(d, e, &last);
    const auto idx = wanted_order(d);
    Estimates est;
    for (int i = 0; i < want; ++i) {
      est.values.push_back(to_a(d[idx[static_cast<std::size_t>(i)]]));
      est.bounds.push_back(std::abs(b_next * last[idx[static_cast<std::size_t>(i)]]));
    }
    return est;
  }

  std::vector<RitzPair> ritz_pairs(const std::vector<double>& alpha, const std::vector<double>& beta,
                                   const std::vector<std::vector<cplx>>& basis, int want) {
    const std::size_t m = alpha.size();
    std::vector<double> d = alpha;
    std::vector<double> e(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(m - 1));
    std::vector<double> y(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) y[i * m + i] = 1.0;
    tridiagonal_eigen(d, e, &y);
    const auto idx = wanted_order(d);
    std::vector<RitzPair> pairs;
    for (int i = 0; i < want; ++i) {
      const std::size_t col = idx[static_cast<std::size_t>(i)];
      RitzPair p;
      p.vector.assign(op_.dim, {0.0, 0.0});
      for (std::size_t q = 0; q < m; ++q) axpy(y[col * m + q], basis[q], p.vector);
      scale(1.0 / norm2(p.vector), p.vector);
      apply_a(p.vector, tmp_);
      p.value = dot(p.vector, tmp_).real();
      axpy(-p.value, p.vector, tmp_);
      p.residual = norm2(tmp_);
      pairs.push_back(std::move(p));
    }
    return pairs;
  }

  const HermitianOperator& op_;
  const EigenRequest& req_;
  std::mt19937_64 rng_;
  std::vector<cplx> tmp_;
  double sigma_up_ = 0.0;
  double abs_tol_ = 0.0;
  std::vector<double> history_;
};

}  // namespace

EigenResult lanczos(const HermitianOperator& op, const EigenRequest& req) {
  if (req.k < 1) throw ValidationError("lanczos: k must be >= 1");
  if (!(req.tol > 0.0)) throw ValidationError("lanczos: tol must be positive");
  if (static_cast<std::size_t>(req.k) > op.dim) throw ValidationError("lanczos: k exceeds the operator dimension");
  if (!op.apply) throw ValidationError("lanczos: operator has no apply function");
  if (req.chiral_split >= op.dim) throw ValidationError("lanczos: chiral_split must be below the dimension");

  LanczosDriver driver(op, req);
  std::vector<std::vector<cplx>> fixed;  // caller deflation, orthonormalised
  for (const auto& d : req.deflate) {
    if (d.size() != op.dim) throw ValidationError("lanczos: deflation vector has the wrong length");
    std::vector<cplx> v = d;
    orthogonalize(v, fixed, {});
    const double nv = norm2(v);
    if (nv > 1e-12) {
      scale(1.0 / nv, v);
      fixed.push_back(std::move(v));
    }
  }

  std::vector<RitzPair> found;
  EigenResult res;
  res.norm_bound = op.norm_bound;
  int budget = req.max_iter;
  bool first = true;
  bool verified = false;
  bool exhausted = false;

  auto locked = [&] {
    std::vector<std::vector<cplx>> all = fixed;
    if (req.chiral_split == 0) {
      for (const auto& p : found) all.push_back(p.vector);
      return all;
    }
    // A +-pair spans the same two block pieces; duplicates drop out here.
    for (const auto& p : found)
      for (std::size_t b = 0; b < 2; ++b) {
        std::vector<cplx> piece = p.vector;
        driver.restrict_block(piece, b);
        const double before = norm2(piece);
        orthogonalize(piece, all, {});
        const double after = norm2(piece);
        if (after > 1e-6 * before && after > 1e-12) {
          scale(1.0 / after, piece);
          all.push_back(std::move(piece));
        }
      }
    return all;
  };
  auto sort_found = [&] {
    std::stable_sort(found.begin(), found.end(),
                     [&](const RitzPair& a, const RitzPair& b) { return driver.key(a.value) < driver.key(b.value); });
  };

  // Passes with locking: exactly degenerate eigenvalues are reached one copy
  // per pass. Once k pairs are held, one more pass checks that nothing more
  // wanted remains in the complement.
  while (budget > 0) {
    const int have = static_cast<int>(found.size());
    const int want = have >= req.k ? 1 : req.k - have;
    auto pass = driver.run_pass(locked(), want, budget, first);
    first = false;
    budget -= pass.iterations;
    res.iterations += pass.iterations;
    exhausted = pass.exhausted;
    if (have >= req.k) {
      sort_found();
      const double worst = driver.key(found[static_cast<std::size_t>(req.k - 1)].value);
      const double slack = 10.0 * req.tol * std::max(op.norm_bound, 1e-300);
      if (pass.pairs.empty()) {
        verified = exhausted;
        break;
      }
      if (driver.key(pass.pairs.front().value) >= worst - slack) {
        verified = true;
        break;
      }
    } else if (pass.pairs.empty()) {
      if (exhausted) verified = true;
      break;
    }
    if (req.chiral_split == 0) {
      for (auto& p : pass.pairs) found.push_back(std::move(p));
    } else {
      // Store each pair as (u, v) with mu > 0 together with its partner (u, -v).
      std::vector<RitzPair> kept;
      for (auto& p : pass.pairs) {
        const bool paired = std::abs(p.value) > driver.abs_tol();
        if (paired && p.value < 0.0) {
          p.value = -p.value;
          for (std::size_t i = req.chiral_split; i < op.dim; ++i) p.vector[i] = -p.vector[i];
        }
        const bool dup = std::any_of(kept.begin(), kept.end(),
                                     [&](const RitzPair& q) { return std::abs(dot(q.vector, p.vector)) > 0.5; });
        if (!dup) kept.push_back(std::move(p));
      }
      for (auto& p : kept) {
        const bool paired = std::abs(p.value) > driver.abs_tol();
        if (paired) {
          // Partner value and residual are measured, not copied.
          RitzPair partner;
          partner.vector = p.vector;
          for (std::size_t i = req.chiral_split; i < op.dim; ++i) partner.vector[i] = -partner.vector[i];
          std::vector<cplx> t(op.dim);
          op.apply(partner.vector, t);
          partner.value = dot(partner.vector, t).real();
          axpy(-partner.value, partner.vector, t);
          partner.residual = norm2(t);
          found.push_back(std::move(p));
          found.push_back(std::move(partner));
        } else {
          found.push_back(std::move(p));
        }
      }
    }
    if (exhausted && static_cast<int>(found.size()) < req.k) break;
  }

  sort_found();
  const auto keep = std::min<std::size_t>(found.size(), static_cast<std::size_t>(req.k));
  found.resize(keep);
  std::stable_sort(found.begin(), found.end(), [](const RitzPair& a, const RitzPair& b) { return a.value < b.value; });
  const double denom = std::max(op.norm_bound, 1e-300);
  for (auto& p : found) {
    res.eigenvalues.push_back(p.value);
    res.residuals.push_back(p.residual / denom);
    res.eigenvectors.push_back(std::move(p.vector));
  }
  res.ritz_history = std::move(driver.history());
  res.converged = verified && static_cast<int>(keep) == req.k;
  return res;
}

EigenResult lanczos_lowest(const OperatorHandle& op, const EigenRequest& req) {
  return lanczos(as_operator(op), req);
}

}  // namespace dolbeault
