#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dualres/circulant.hpp"
#include "dualres/decision.hpp"
#include "dualres/grid.hpp"
#include "dualres/hmc.hpp"
#include "dualres/kriging.hpp"
#include "dualres/methods.hpp"

namespace dualres {

enum class KernelFamily { Exponential, Gaussian };

KernelFamily parse_kernel_family(const std::string& name);
std::string to_string(KernelFamily f);
inline double family_nu(KernelFamily f) { return f == KernelFamily::Exponential ? 1.0 : 2.0; }

// 2D phantom geometry in mm, relative to the centre of the slice.
struct PhantomGeometry {
  double semi_axis_x = 90.3;  // elliptical brain mask
  double semi_axis_y = 54.0;
  // Radial undulation of the mask boundary: r(theta) = 1 + amp * cos(count * theta).
  double wave_amp = 0.12;
  int wave_count = 60;
  // T-shape: horizontal bar (width x height) with a stem hanging below it.
  double t_x = 48.0, t_y = 14.0;
  double t_bar_w = 36.0, t_bar_h = 9.0;
  double t_stem_w = 9.0, t_stem_h = 26.0;
  // Disc
  double disc_x = -52.0, disc_y = -24.0, disc_r = 12.0;
  // Square of 2 x 2 voxels
  double square_x = -60.0, square_y = 26.0;
};

struct SimDesign {
  Grid3 high_grid{{104, 65, 1}, {1.8, 1.8, 1.8}};
  Grid3 std_grid{{63, 39, 1}, {3.0, 3.0, 3.0}};
  PhantomGeometry geometry;
  KernelFamily family = KernelFamily::Exponential;
  double background_var = 0.2;
  double background_fwhm = 6.0;
  double activation_fwhm = 6.0;
  double activation_amp = 2.0;
  double activation_threshold = 0.4;
  double snr_h = 0.1;
  double snr_ratio = 2.0;
  // Correlation level defining the kriging radius.
  double radius_level = 0.05;

  KernelParams background() const;
  double radius() const;
};

// Masks, shape signal, embedding and kriging weights shared by every
// replicate of one design. Built once, read-only afterwards.
class SimContext {
 public:
  explicit SimContext(const SimDesign& design, int threads = 1);

  const SimDesign& design() const noexcept { return design_; }
  const MaskedVolume& high_template() const noexcept { return high_; }
  const MaskedVolume& std_template() const noexcept { return std_; }
  // Shape signal over B_h (already thresholded) and the active flags.
  const std::vector<double>& signal() const noexcept { return signal_; }
  const std::vector<std::uint8_t>& active() const noexcept { return active_; }
  std::size_t active_count() const noexcept;
  const CirculantEmbedding& embedding() const noexcept { return *emb_; }
  const KrigingWeights& w_hs() const noexcept { return w_hs_; }
  const KrigingWeights& w_sh() const noexcept { return w_sh_; }

 private:
  SimDesign design_;
  MaskedVolume high_, std_;
  std::vector<double> signal_;
  std::vector<std::uint8_t> active_;
  std::unique_ptr<CirculantEmbedding> emb_;
  KrigingWeights w_hs_, w_sh_;
};

// Binary high-resolution masks of the phantom.
std::vector<std::uint8_t> phantom_brain_mask(const SimDesign& d);
std::vector<std::uint8_t> phantom_shapes(const SimDesign& d);
// Standard-resolution mask: cells containing at least one masked high-resolution voxel centre.
std::vector<std::uint8_t> std_mask_from_high(const Grid3& high, const std::vector<std::uint8_t>& mask,
                                             const Grid3& std_grid);
// Separable discrete Gaussian smoothing of a 2D/3D image (kernel normalized to sum 1).
std::vector<double> gaussian_smooth(const Grid3& grid, const std::vector<double>& image,
                                    double fwhm_mm);

struct Truth {
  std::vector<double> mu_h;  // over B_h
  std::vector<std::uint8_t> active;
};

// Background draw from the design kernel plus the shape signal.
Truth make_truth(const SimContext& ctx, Rng& rng, double amplitude_scale = 1.0);

struct SimData {
  std::vector<double> y_h;
  std::vector<double> y_s;
  std::vector<double> mu_s;
  double sigma_h_sq = 0.0;
  double sigma_s_sq = 0.0;
};

// mu_s = W mu_h; sigma_h^2 = mean(mu_h^2) / snr_h; sigma_s^2 = mean(mu_s^2) / (snr_h * ratio).
// The two noise streams are independent so Y_h does not depend on the ratio.
SimData make_data(const Truth& truth, const KrigingWeights& w_hs, double snr_h, double ratio,
                  Rng& rng_h, Rng& rng_s);

struct SimResult {
  Method method = Method::Dual;
  int replicate = 0;
  double mse = 0.0;
  double false_neg_rate = 0.0;
  double false_pos_rate = 0.0;
  std::size_t discoveries = 0;
};

SimResult score(const PosteriorDraws& pooled, const Truth& truth, std::size_t n_discoveries = 450);
SimResult score(const std::vector<double>& post_mean, const ActivationSummary& summary,
                const Truth& truth, std::size_t n_discoveries = 450);

struct RocPoint {
  double threshold = 0.0;
  double false_pos = 0.0;
  double false_neg = 0.0;
};
// Rates at each threshold of `thresholds` (delta = f_bar >= threshold).
std::vector<RocPoint> roc(const std::vector<double>& f_bar, const std::vector<std::uint8_t>& active,
                          const std::vector<double>& thresholds);
std::vector<double> roc_thresholds(std::size_t n = 101);

struct SweepConfig {
  std::vector<KernelFamily> families{KernelFamily::Exponential};
  std::vector<double> snr_h{0.1};
  std::vector<double> ratios{1.0, 2.0};
  std::vector<Method> methods{Method::Dual, Method::High, Method::Naive, Method::Std};
  int replicates = 100;
  std::size_t n_discoveries = 450;
  HmcConfig hmc;  // chains, lengths and L; seeds are derived per replicate
  std::uint64_t seed = 20210101;
  int threads = 1;
  PhantomGeometry geometry;
};

struct CellSummary {
  Method method = Method::Dual;
  KernelFamily family = KernelFamily::Exponential;
  double snr_ratio = 0.0;
  double snr_h = 0.0;
  int n = 0;
  int failed = 0;
  double mse_mean = 0.0, mse_se = 0.0;
  double false_neg_mean = 0.0, false_neg_se = 0.0;
  double false_pos_mean = 0.0;
  double accept_mean = 0.0;
  double restriction_rate = 0.0;
  std::vector<RocPoint> roc;  // averaged over replicates
};

struct SweepResult {
  std::vector<CellSummary> cells;
  std::vector<std::string> log;
};

SweepResult run_sweep(const SweepConfig& config);

// Table-1-style CSV:
// model,kernel,snr_ratio,snr_h,mse,false_neg_mean,false_neg_se,mse_se,false_pos_mean,
// accept_mean,restriction_rate,replicates,failed
void write_sweep_csv(const SweepResult& r, const std::string& path);
// threshold,false_pos,false_neg
void write_roc_csv(const std::vector<RocPoint>& roc, const std::string& path);

}  // namespace dualres
