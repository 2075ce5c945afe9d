#include "n2a/mmd.hpp"

#include <algorithm>
#include <cmath>

namespace n2a {

void KernelSpec::validate() const {
  if (family == KernelFamily::Rbf && !(bandwidth > 0.0))
    throw ConfigError("rbf kernel bandwidth must be > 0");
}

double kernel_eval(const KernelSpec& k, const double* a, const double* b, std::size_t d) {
  const auto& ops = kernels::active();
  if (k.family == KernelFamily::Linear) return ops.dot(a, b, d);
  return std::exp(-ops.sqdist(a, b, d) / (2.0 * k.bandwidth * k.bandwidth));
}

double median_bandwidth(const Matrix& X, const Matrix& Y) {
  if (X.cols() != Y.cols() && X.rows() > 0 && Y.rows() > 0)
    throw ShapeError("median_bandwidth: column count mismatch");
  const std::size_t n = X.rows() + Y.rows();
  if (n < 2) throw DataError("median_bandwidth needs at least 2 pooled rows");
  const std::size_t d = X.rows() > 0 ? X.cols() : Y.cols();
  auto row = [&](std::size_t i) { return i < X.rows() ? X.row(i) : Y.row(i - X.rows()); };

  const auto& ops = kernels::active();
  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = std::sqrt(ops.sqdist(row(i), row(j), d));
      if (dist > 0.0) dists.push_back(dist);
    }
  if (dists.empty()) return 1.0;
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  return m % 2 == 1 ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
}

double mmd2_biased(const Matrix& Xs, const Matrix& Xt, const KernelSpec& k) {
  k.validate();
  if (Xs.cols() != Xt.cols()) throw ShapeError("mmd2_biased: column count mismatch");
  if (Xs.rows() == 0 || Xt.rows() == 0) throw DataError("mmd2_biased: empty sample set");
  const std::size_t ns = Xs.rows(), nt = Xt.rows(), d = Xs.cols();

  double ss = 0.0, tt = 0.0, st = 0.0;
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < ns; ++j) ss += kernel_eval(k, Xs.row(i), Xs.row(j), d);
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < nt; ++j) tt += kernel_eval(k, Xt.row(i), Xt.row(j), d);
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < nt; ++j) st += kernel_eval(k, Xs.row(i), Xt.row(j), d);

  const double v = ss / double(ns * ns) + tt / double(nt * nt) - 2.0 * st / double(ns * nt);
  return v < 0.0 ? 0.0 : v;
}

namespace {

Matrix rows_of_class(const Matrix& F, const std::vector<int>& y, int c) {
  std::size_t count = 0;
  for (int label : y)
    if (label == c) ++count;
  Matrix out(count, F.cols());
  std::size_t r = 0;
  for (std::size_t i = 0; i < F.rows(); ++i)
    if (y[i] == c) {
      double* dst = out.row(r++);
      const double* src = F.row(i);
      for (std::size_t j = 0; j < F.cols(); ++j) dst[j] = src[j];
    }
  return out;
}

}  // namespace

double classwise_mmd2(const Matrix& Fs, const std::vector<int>& ys, const Matrix& Ft,
                      const std::vector<int>& yt, int C, const KernelSpec& k) {
  if (ys.size() != Fs.rows() || yt.size() != Ft.rows())
    throw DataError("classwise_mmd2: label/sample count mismatch");
  double total = 0.0;
  for (int c = 0; c < C; ++c) {
    const Matrix sc = rows_of_class(Fs, ys, c);
    const Matrix tc = rows_of_class(Ft, yt, c);
    if (sc.rows() == 0)
      throw CoverageError("class " + std::to_string(c) + " has no source samples");
    if (tc.rows() == 0)
      throw CoverageError("class " + std::to_string(c) + " has no target samples");
    total += mmd2_biased(sc, tc, k);
  }
  return total;
}

void mmd2_biased_grad(const Matrix& F, const Matrix& G, const KernelSpec& k,
                      double coeff, Matrix& dF, Matrix& dG) {
  k.validate();
  if (F.cols() != G.cols()) throw ShapeError("mmd2_biased_grad: column count mismatch");
  if (dF.rows() != F.rows() || dF.cols() != F.cols() || dG.rows() != G.rows() ||
      dG.cols() != G.cols())
    throw ShapeError("mmd2_biased_grad: gradient buffer shape mismatch");

  const auto& ops = kernels::active();
  const std::size_t ns = F.rows(), nt = G.rows(), d = F.cols();
  const double c_ss = 2.0 * coeff / double(ns * ns);
  const double c_tt = 2.0 * coeff / double(nt * nt);
  const double c_st = 2.0 * coeff / double(ns * nt);

  if (k.family == KernelFamily::Linear) {
    // d/da (a.b) = b; the factor 2 for a row's two roles in the symmetric
    // double sum is baked into c_ss/c_tt/c_st.
    for (std::size_t i = 0; i < ns; ++i)
      for (std::size_t j = 0; j < ns; ++j) ops.axpy(c_ss, F.row(j), dF.row(i), d);
    for (std::size_t i = 0; i < nt; ++i)
      for (std::size_t j = 0; j < nt; ++j) ops.axpy(c_tt, G.row(j), dG.row(i), d);
    for (std::size_t i = 0; i < ns; ++i)
      for (std::size_t j = 0; j < nt; ++j) {
        ops.axpy(-c_st, G.row(j), dF.row(i), d);
        ops.axpy(-c_st, F.row(i), dG.row(j), d);
      }
    return;
  }

  const double inv_sigma2 = 1.0 / (k.bandwidth * k.bandwidth);
  std::vector<double> diff(d);
  auto add_pair = [&](const double* a, const double* b, double scale, double* da) {
    // scale * dk(a,b)/da = -scale * k(a,b) * (a-b) / sigma^2
    const double kv = kernel_eval(k, a, b, d);
    for (std::size_t x = 0; x < d; ++x) diff[x] = a[x] - b[x];
    ops.axpy(-scale * kv * inv_sigma2, diff.data(), da, d);
  };

  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < ns; ++j)
      if (i != j) add_pair(F.row(i), F.row(j), c_ss, dF.row(i));
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < nt; ++j)
      if (i != j) add_pair(G.row(i), G.row(j), c_tt, dG.row(i));
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < nt; ++j) {
      add_pair(F.row(i), G.row(j), -c_st, dF.row(i));
      add_pair(G.row(j), F.row(i), -c_st, dG.row(j));
    }
}

}  // namespace n2a
