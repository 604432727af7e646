#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dualres/circulant.hpp"
#include "dualres/grid.hpp"
#include "dualres/hmc.hpp"
#include "dualres/kriging.hpp"

namespace dualres {

enum class Method { Dual, High, Std, Naive };

Method parse_method(const std::string& name);
std::string to_string(Method m);

struct MethodInputs {
  const MaskedVolume* high = nullptr;  // Y_h on the high-resolution mask B_h
  const MaskedVolume* standard = nullptr;  // Y_s on the standard-resolution mask B_s
  // Optional per-voxel observation flags over B_h (Dual/High/Naive).
  std::vector<std::uint8_t> observed_h;
  KernelParams theta;
  double radius = 0.0;
  EmbeddingOptions embedding;
  HmcConfig hmc;
  int threads = 1;
  // Prebuilt weights, reused when given: high -> std (rows B_s, cols B_h)
  // and std -> high (rows B_h, cols B_s).
  const KrigingWeights* w_hs = nullptr;
  const KrigingWeights* w_sh = nullptr;
};

struct MethodFit {
  Method method = Method::Dual;
  // Chains of Re(mu_h) draws over B_h (Std: kriged from B_s draw by draw).
  std::vector<PosteriorDraws> chains;
  std::array<std::int64_t, 3> extended_dims{};
  double min_eig = 0.0;
  std::vector<std::string> notes;
};

MethodFit fit_method(Method method, const MethodInputs& in);

// Input of the naive averaging method: (Y_h + W^T Y_s) / 2.
std::vector<double> naive_average(const std::vector<double>& y_h, const std::vector<double>& y_s,
                                  const KrigingWeights& w_hs);

// Per-voxel posterior mean and sd of pooled draws.
struct PosteriorSummary {
  std::vector<double> mean;
  std::vector<double> sd;
};
PosteriorSummary summarize(const PosteriorDraws& pooled);

}  // namespace dualres
