#pragma once

// Dense reference computations used as independent oracles.

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "dualres/circulant.hpp"
#include "dualres/grid.hpp"
#include "dualres/kernel.hpp"
#include "dualres/kriging.hpp"

namespace oracle {

// Covariance matrix of the torus with extended dims `ext` and voxel size
// `vs`: entry (a, b) is k at the shortest wrapped distance between a and b.
Eigen::MatrixXd torus_covariance(const std::array<std::int64_t, 3>& ext, const dualres::Vec3& vs,
                                 const dualres::KernelParams& p);

// Dense covariance of the masked voxels of a volume.
Eigen::MatrixXd masked_covariance(const dualres::MaskedVolume& vol, const dualres::KernelParams& p);

Eigen::MatrixXd dense_W(const dualres::KrigingWeights& w);

Eigen::VectorXcd to_eigen(const dualres::ComplexField& u);
dualres::ComplexField from_eigen(const Eigen::VectorXcd& v);

// Closed-form Gaussian posterior of mu over the brain voxels given
// y_h ~ N(mu, sh I) (observed subset) and y_s ~ N(W mu, ss I), with prior
// mu ~ N(0, K).
struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
GaussianPosterior conjugate_posterior(const Eigen::MatrixXd& K, const Eigen::VectorXd& y_h,
                                      const std::vector<std::uint8_t>& observed, double sh,
                                      const Eigen::MatrixXd* W, const Eigen::VectorXd* y_s,
                                      double ss);

// Two-sample Kolmogorov-Smirnov p-value (asymptotic).
double ks_two_sample_p(std::vector<double> a, std::vector<double> b);

}  // namespace oracle
