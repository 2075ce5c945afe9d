#pragma once

#include <string>
#include <vector>

#include "n2a/matrix.hpp"

namespace n2a {

enum class KernelFamily { Rbf, Linear };

// RKHS kernel choice. Rbf: k(a,b) = exp(-||a-b||^2 / (2 sigma^2)).
struct KernelSpec {
  KernelFamily family = KernelFamily::Rbf;
  double bandwidth = 1.0;  // sigma, rbf only; must be > 0

  void validate() const;
};

double kernel_eval(const KernelSpec& k, const double* a, const double* b, std::size_t d);

// Median of the nonzero pairwise Euclidean distances over the pooled rows of
// X and Y; 1.0 when every distance is zero. Needs >= 2 pooled rows.
double median_bandwidth(const Matrix& X, const Matrix& Y);

// Biased (V-statistic) squared MMD:
//   (1/ns^2) sum k(s,s) + (1/nt^2) sum k(t,t) - (2/(ns nt)) sum k(s,t),
// clamped at zero against numerical dips.
double mmd2_biased(const Matrix& Xs, const Matrix& Xt, const KernelSpec& k);

// Sum over classes 0..C-1 of mmd2_biased between the same-class rows of the
// two feature sets. Every class must appear in both domains.
double classwise_mmd2(const Matrix& Fs, const std::vector<int>& ys, const Matrix& Ft,
                      const std::vector<int>& yt, int C, const KernelSpec& k);

// Accumulates coeff * d mmd2_biased(F, G) / dF into dF and likewise for dG.
// For rbf, d k(a,b)/da = -k(a,b) (a-b) / sigma^2.
void mmd2_biased_grad(const Matrix& F, const Matrix& G, const KernelSpec& k,
                      double coeff, Matrix& dF, Matrix& dG);

}  // namespace n2a
