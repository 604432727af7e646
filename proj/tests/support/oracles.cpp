#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

Eigen::MatrixXd torus_covariance(const std::array<std::int64_t, 3>& ext, const dualres::Vec3& vs,
                                 const dualres::KernelParams& p) {
  const dualres::Grid3 g(ext, vs);
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd C(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto ia = g.unravel(static_cast<std::size_t>(a));
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto ib = g.unravel(static_cast<std::size_t>(b));
      double d2 = 0.0;
      for (int ax = 0; ax < 3; ++ax) {
        const auto diff = std::abs(ia[ax] - ib[ax]);
        const auto wrapped = std::min<std::int64_t>(diff, ext[ax] - diff);
        const double d = static_cast<double>(wrapped) * vs[ax];
        d2 += d * d;
      }
      C(a, b) = p(std::sqrt(d2));
    }
  }
  return C;
}

Eigen::MatrixXd masked_covariance(const dualres::MaskedVolume& vol, const dualres::KernelParams& p) {
  const auto& idx = vol.masked_indices();
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto wa = dualres::world_coords(vol.grid(), vol.grid().unravel(idx[a]));
      const auto wb = dualres::world_coords(vol.grid(), vol.grid().unravel(idx[b]));
      K(a, b) = p(dualres::distance(wa, wb));
    }
  return K;
}

Eigen::MatrixXd dense_W(const dualres::KrigingWeights& w) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(w.rows),
                                            static_cast<Eigen::Index>(w.cols));
  for (std::size_t i = 0; i < w.rows; ++i)
    for (auto q = w.row_ptr[i]; q < w.row_ptr[i + 1]; ++q)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w.col_idx[q])) = w.values[q];
  return M;
}

Eigen::VectorXcd to_eigen(const dualres::ComplexField& u) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(u.size()));
  for (std::size_t i = 0; i < u.size(); ++i) v(static_cast<Eigen::Index>(i)) = u[i];
  return v;
}

dualres::ComplexField from_eigen(const Eigen::VectorXcd& v) {
  dualres::ComplexField u(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) u[static_cast<std::size_t>(i)] = v(i);
  return u;
}

GaussianPosterior conjugate_posterior(const Eigen::MatrixXd& K, const Eigen::VectorXd& y_h,
                                      const std::vector<std::uint8_t>& observed, double sh,
                                      const Eigen::MatrixXd* W, const Eigen::VectorXd* y_s,
                                      double ss) {
  const auto n = K.rows();
  Eigen::MatrixXd prec = K.inverse();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!observed.empty() && !observed[static_cast<std::size_t>(i)]) continue;
    prec(i, i) += 1.0 / sh;
    rhs(i) += y_h(i) / sh;
  }
  if (W != nullptr) {
    prec += W->transpose() * (*W) / ss;
    rhs += W->transpose() * (*y_s) / ss;
  }
  GaussianPosterior out;
  out.cov = prec.inverse();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  out.mean = out.cov * rhs;
  return out;
}

double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace oracle
