#include "dualres/kriging.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dualres/error.hpp"
#include "dualres/parallel.hpp"

namespace dualres {

std::vector<std::size_t> KrigingWeights::neighborhood_sizes() const {
  std::vector<std::size_t> out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = row_size(i);
  return out;
}

KrigingWeights KrigingWeights::identity(std::size_t n) {
  KrigingWeights w;
  w.rows = w.cols = n;
  w.row_ptr.resize(n + 1);
  w.col_idx.resize(n);
  w.values.assign(n, 1.0);
  for (std::size_t i = 0; i <= n; ++i) w.row_ptr[i] = i;
  for (std::size_t i = 0; i < n; ++i) w.col_idx[i] = i;
  return w;
}

std::vector<std::size_t> neighborhood(const MaskedVolume& knots, const Vec3& v, double r) {
  if (!(r > 0.0)) throw UsageError("neighborhood radius must be positive");
  const auto& g = knots.grid();
  std::array<std::int64_t, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    const double c = (v[a] - g.origin[a]) / g.voxel_size[a];
    const auto reach = static_cast<std::int64_t>(std::ceil(r / g.voxel_size[a]));
    const auto center = static_cast<std::int64_t>(std::llround(c));
    lo[a] = std::max<std::int64_t>(0, center - reach);
    hi[a] = std::min<std::int64_t>(g.dims[a] - 1, center + reach);
  }
  std::vector<std::size_t> out;
  const auto& ord = knots.ordinals();
  const double r2 = r * r;
  for (auto k = lo[2]; k <= hi[2]; ++k) {
    const double dz = g.origin[2] + static_cast<double>(k) * g.voxel_size[2] - v[2];
    for (auto j = lo[1]; j <= hi[1]; ++j) {
      const double dy = g.origin[1] + static_cast<double>(j) * g.voxel_size[1] - v[1];
      for (auto i = lo[0]; i <= hi[0]; ++i) {
        const auto lin = g.linear({i, j, k});
        if (ord[lin] < 0) continue;
        const double dx = g.origin[0] + static_cast<double>(i) * g.voxel_size[0] - v[0];
        if (dx * dx + dy * dy + dz * dz <= r2) out.push_back(static_cast<std::size_t>(ord[lin]));
      }
    }
  }
  return out;
}

std::vector<double> local_weights(const KernelParams& params, std::span<const Vec3> coords,
                                  const Vec3& v) {
  const auto n = static_cast<Eigen::Index>(coords.size());
  if (n == 0) throw UsageError("local_weights needs a non-empty neighborhood");
  Eigen::MatrixXd K(n, n);
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i) = params(distance(coords[i], v));
    K(i, i) = params.tau_sq;
    for (Eigen::Index j = 0; j < i; ++j) K(i, j) = K(j, i) = params(distance(coords[i], coords[j]));
  }

  const double tol = 1e-8 * params.tau_sq;
  auto solve = [&](const Eigen::MatrixXd& A, Eigen::VectorXd& w) {
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) return false;
    w = llt.solve(k);
    return w.allFinite() && (A * w - k).lpNorm<Eigen::Infinity>() <= tol;
  };

  Eigen::VectorXd w;
  if (!solve(K, w)) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += 1e-8 * params.tau_sq;
    if (!solve(Kj, w)) {
      std::ostringstream msg;
      msg << "kriging system is singular at (" << v[0] << ", " << v[1] << ", " << v[2]
          << ") with " << n << " neighbors";
      throw NumericalError(msg.str());
    }
  }
  return {w.data(), w.data() + n};
}

KrigingWeights build_W(const MaskedVolume& knots, const MaskedVolume& targets,
                       const KernelParams& params, double r, KrigingOptions opts) {
  if (!(r > 0.0)) throw UsageError("kriging radius must be positive");
  const auto& tg = targets.grid();
  const auto& kg = knots.grid();
  const auto& tidx = targets.masked_indices();
  const auto& kidx = knots.masked_indices();
  const std::size_t rows = tidx.size();

  std::vector<std::vector<std::size_t>> cols(rows);
  std::vector<std::vector<double>> vals(rows);
  parallel_for(rows, opts.threads, [&](std::size_t b, std::size_t e, int) {
    std::vector<Vec3> coords;
    for (std::size_t row = b; row < e; ++row) {
      const auto v = world_coords(tg, tg.unravel(tidx[row]));
      cols[row] = neighborhood(knots, v, r);
      if (cols[row].empty()) continue;
      coords.clear();
      for (auto c : cols[row]) coords.push_back(world_coords(kg, kg.unravel(kidx[c])));
      vals[row] = local_weights(params, coords, v);
    }
  });

  KrigingWeights w;
  w.rows = rows;
  w.cols = kidx.size();
  w.radius = r;
  w.row_ptr.assign(rows + 1, 0);
  for (std::size_t i = 0; i < rows; ++i) w.row_ptr[i + 1] = w.row_ptr[i] + cols[i].size();
  w.col_idx.reserve(w.row_ptr.back());
  w.values.reserve(w.row_ptr.back());
  for (std::size_t i = 0; i < rows; ++i) {
    w.col_idx.insert(w.col_idx.end(), cols[i].begin(), cols[i].end());
    w.values.insert(w.values.end(), vals[i].begin(), vals[i].end());
  }
  return w;
}

std::vector<double> apply_W(const KrigingWeights& w, std::span<const double> x) {
  if (x.size() != w.cols) throw UsageError("apply_W: input length does not match W columns");
  std::vector<double> y(w.rows, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i) {
    double s = 0.0;
    for (auto p = w.row_ptr[i]; p < w.row_ptr[i + 1]; ++p) s += w.values[p] * x[w.col_idx[p]];
    y[i] = s;
  }
  return y;
}

std::vector<double> apply_Wt(const KrigingWeights& w, std::span<const double> y) {
  if (y.size() != w.rows) throw UsageError("apply_Wt: input length does not match W rows");
  std::vector<double> x(w.cols, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double yi = y[i];
    for (auto p = w.row_ptr[i]; p < w.row_ptr[i + 1]; ++p) x[w.col_idx[p]] += w.values[p] * yi;
  }
  return x;
}

void write_triplets(const KrigingWeights& w, std::ostream& out) {
  out << "# " << w.rows << ' ' << w.cols << ' ' << w.nnz() << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < w.rows; ++i)
    for (auto p = w.row_ptr[i]; p < w.row_ptr[i + 1]; ++p)
      out << i << ' ' << w.col_idx[p] << ' ' << w.values[p] << '\n';
}

void write_triplets(const KrigingWeights& w, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  write_triplets(w, f);
}

}  // namespace dualres
