// dualres: command-line front end for dual-resolution image fusion.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dualres/covariogram.hpp"
#include "dualres/decision.hpp"
#include "dualres/diagnostics.hpp"
#include "dualres/error.hpp"
#include "dualres/io.hpp"
#include "dualres/methods.hpp"
#include "dualres/nifti.hpp"
#include "dualres/simulation.hpp"

namespace fs = std::filesystem;
using namespace dualres;

namespace {

struct Common {
  std::uint64_t seed = 20210101;
  int threads = default_threads();
  bool quiet = false;
};

void log(const Common& c, const std::string& msg) {
  if (!c.quiet) std::cerr << msg << '\n';
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// ---------------------------------------------------------------- estimate-kernel

struct EstimateArgs {
  std::string in, mask, out = "theta.toml", covariogram, curve;
  std::optional<double> fix_nu;
  double nu_max = 2.0;
  std::string constraint = "psi-le-nu=on";
  bool nugget = false;
  int n0 = 18, n1 = 25, starts = 5, max_evals = 500;
};

int cmd_estimate_kernel(const EstimateArgs& a, const Common& c) {
  const auto vol = read_nifti(a.in, a.mask.empty() ? std::nullopt : std::optional(a.mask));
  EstimateOptions eo;
  eo.n0 = a.n0;
  eo.n1 = a.n1;
  eo.threads = c.threads;
  eo.mce.starts = a.starts;
  eo.mce.max_evals = static_cast<std::size_t>(a.max_evals);
  eo.mce.seed = c.seed;
  eo.mce.mode = a.nugget ? ContrastMode::KernelPlusNugget : ContrastMode::Kernel;
  if (a.constraint == "psi-le-nu=on")
    eo.mce.psi_le_nu = true;
  else if (a.constraint == "psi-le-nu=off")
    eo.mce.psi_le_nu = false;
  else
    throw UsageError("--constraint expects psi-le-nu=on or psi-le-nu=off");
  if (a.fix_nu) {
    eo.mce.nu_lo = eo.mce.nu_hi = *a.fix_nu;
  } else {
    eo.mce.nu_hi = a.nu_max;
  }
  const auto est = estimate_kernel(vol, eo);
  const auto& p = est.fit.params;

  KeyValues extra{{"objective", format_double(est.fit.objective)},
                  {"converged", est.fit.converged ? "true" : "false"},
                  {"evaluations", std::to_string(est.fit.evals)},
                  {"radius_mm", format_double(fwhm(p))}};
  if (a.nugget) extra["nugget"] = format_double(est.fit.nugget);
  write_theta(a.out, p, extra);
  if (!a.covariogram.empty()) {
    std::ofstream f(a.covariogram);
    if (!f) throw IoError("cannot write " + a.covariogram);
    write_covariogram_csv(est.summary, f);
  }
  if (!a.curve.empty()) {
    std::ofstream f(a.curve);
    if (!f) throw IoError("cannot write " + a.curve);
    write_curve_csv(est.curve, f);
  }
  std::ostringstream os;
  os << "theta: tau_sq=" << p.tau_sq << " psi=" << p.psi << " nu=" << p.nu << " (FWHM "
     << fwhm(p) << " mm), objective " << est.fit.objective
     << (est.fit.converged ? "" : " [evaluation budget exhausted]");
  log(c, os.str());
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string mode = "dual";
  std::string high, std_img, mask_high, mask_std;
  std::string theta;
  bool estimate_theta = false;
  std::optional<double> radius;
  int chains = 3, iters = 4000, warmup = 1000, thin = 3, L = 25;
  double target_accept = 0.65;
  bool allow_grow = false, allow_clamp = false;
  std::string out = "fit_out";
  std::string dump_embedding, dump_w;
  double gr_bar = 1.03;
};

HmcConfig hmc_from(int chains, int iters, int warmup, int thin, int L, double target,
                   const Common& c) {
  if (iters <= warmup) throw UsageError("--iters must exceed --warmup (it counts warmup iterations)");
  HmcConfig h;
  h.chains = chains;
  h.warmup = warmup;
  h.iterations = iters - warmup;
  h.thin = thin;
  h.L = L;
  h.target_accept = target;
  h.seed = c.seed;
  h.threads = c.threads;
  h.validate();
  return h;
}

int cmd_fit(const FitArgs& a, const Common& c) {
  const Method method = parse_method(a.mode);
  if (a.theta.empty() == !a.estimate_theta)
    throw UsageError("give exactly one of --theta FILE or --estimate-theta");
  if (a.high.empty()) throw UsageError("--high is required");
  const bool need_std = method != Method::High;
  if (need_std && a.std_img.empty()) throw UsageError("--std is required for mode " + a.mode);

  const auto high = read_nifti(a.high, a.mask_high.empty() ? std::nullopt : std::optional(a.mask_high));
  std::optional<MaskedVolume> std_vol;
  if (!a.std_img.empty())
    std_vol = read_nifti(a.std_img, a.mask_std.empty() ? std::nullopt : std::optional(a.mask_std));

  KernelParams theta;
  if (a.estimate_theta) {
    EstimateOptions eo;
    eo.threads = c.threads;
    eo.mce.seed = c.seed;
    eo.mce.nu_lo = eo.mce.nu_hi = 1.0;
    theta = estimate_kernel(std_vol ? *std_vol : high, eo).fit.params;
    log(c, "estimated theta: tau_sq=" + format_double(theta.tau_sq) + " psi=" +
               format_double(theta.psi) + " nu=" + format_double(theta.nu));
  } else {
    theta = read_theta(a.theta);
  }
  const double r = a.radius ? *a.radius : fwhm(theta);
  if (!(r > 0.0)) throw UsageError("--r must be positive");

  ensure_dir(a.out);
  MethodInputs in;
  in.high = &high;
  in.standard = std_vol ? &*std_vol : nullptr;
  in.theta = theta;
  in.radius = r;
  in.embedding.allow_grow = a.allow_grow;
  in.embedding.allow_clamp = a.allow_clamp;
  in.hmc = hmc_from(a.chains, a.iters, a.warmup, a.thin, a.L, a.target_accept, c);
  in.threads = c.threads;

  std::optional<KrigingWeights> w_hs;
  if (std_vol) {
    w_hs = build_W(high, *std_vol, theta, r, {c.threads});
    std::size_t empty = 0;
    for (std::size_t i = 0; i < w_hs->rows; ++i) empty += w_hs->row_size(i) == 0;
    if (empty > 0)
      throw UsageError("mask mismatch: " + std::to_string(empty) +
                       " standard-resolution voxels have no high-resolution voxel within r = " +
                       format_double(r) + " mm");
    in.w_hs = &*w_hs;
    if (!a.dump_w.empty()) write_triplets(*w_hs, a.dump_w);
  }
  if (!a.dump_embedding.empty()) {
    const auto& vol = method == Method::Std ? *std_vol : high;
    CirculantEmbedding emb(vol.grid(), theta, vol.masked_indices(), in.embedding);
    write_embedding_dump(emb, a.dump_embedding);
  }

  log(c, "fitting mode " + a.mode + " with r = " + format_double(r) + " mm");
  const auto fit = fit_method(method, in);
  for (const auto& n : fit.notes) log(c, "embedding: " + n);
  std::size_t failed = 0;
  for (std::size_t k = 0; k < fit.chains.size(); ++k)
    if (fit.chains[k].failed) {
      ++failed;
      log(c, "chain " + std::to_string(k) + " failed: " + fit.chains[k].error);
    }
  if (failed == fit.chains.size()) throw NumericalError("all chains failed");

  const auto pooled = pool_chains(fit.chains);
  const auto s = summarize(pooled);
  write_nifti(high.with_masked_values(s.mean), join(a.out, "posterior_mean.nii.gz"));
  write_nifti(high.with_masked_values(s.sd), join(a.out, "posterior_sd.nii.gz"));
  write_nifti(high.with_masked_values(std::vector<double>(high.count(), 1.0)),
              join(a.out, "mask.nii.gz"));
  write_draws(join(a.out, "draws.bin"), pooled);
  write_telemetry_csv(join(a.out, "telemetry.csv"), fit.chains);

  std::vector<PosteriorDraws> ok;
  for (const auto& ch : fit.chains)
    if (!ch.failed) ok.push_back(ch);
  const auto ess = ess_all(ok, c.threads);
  std::vector<double> gr;
  if (ok.size() >= 2) gr = gelman_rubin_all(ok, c.threads);
  {
    std::ofstream f(join(a.out, "diagnostics.csv"));
    if (!f) throw IoError("cannot write diagnostics.csv");
    f << "voxel,gelman_rubin,ess,flagged\n";
    for (std::size_t v = 0; v < ess.size(); ++v) {
      const double g = gr.empty() ? std::nan("") : gr[v];
      f << v << ',' << format_double(g) << ',' << format_double(ess[v]) << ','
        << ((!gr.empty() && !(g <= a.gr_bar)) ? 1 : 0) << '\n';
    }
  }
  std::size_t flagged = 0;
  for (double g : gr) flagged += !(g <= a.gr_bar);
  std::vector<double> sorted_ess = ess;
  std::sort(sorted_ess.begin(), sorted_ess.end());
  std::ostringstream os;
  os << "draws kept: " << pooled.n_draws() << " x " << pooled.n_voxels << " voxels\n"
     << "post-warmup acceptance: " << pooled.post_warmup_accept() << "\n"
     << "restriction sigma_h^2 > sigma_s^2: "
     << (pooled.has_std ? format_double(pooled.restriction_rate()) : std::string("n/a")) << "\n"
     << "median ESS: " << (sorted_ess.empty() ? 0.0 : sorted_ess[sorted_ess.size() / 2]) << "\n";
  if (!gr.empty())
    os << "voxels with Gelman-Rubin > " << a.gr_bar << ": " << flagged << " of " << gr.size() << "\n";
  else
    os << "Gelman-Rubin: needs at least two chains\n";
  {
    std::ofstream f(join(a.out, "summary.txt"));
    f << "mode = " << a.mode << "\nradius_mm = " << format_double(r) << "\n" << os.str();
  }
  log(c, os.str());
  return 0;
}

// ---------------------------------------------------------------- threshold

struct ThresholdArgs {
  std::string draws, mask, out = "threshold_out";
  double k1 = 12.0, k2 = 1.0, t = 1.0;
  std::optional<std::size_t> n_discoveries;
  bool plug_in = false;
};

int cmd_threshold(const ThresholdArgs& a, const Common& c) {
  const std::string mask_path =
      a.mask.empty() ? join(fs::path(a.draws).parent_path().string(), "mask.nii.gz") : a.mask;
  const auto tmpl = read_nifti(mask_path);
  const auto draws = to_posterior_draws(read_draws(a.draws));
  if (draws.n_voxels != tmpl.count())
    throw UsageError("draws have " + std::to_string(draws.n_voxels) + " voxels but the mask has " +
                     std::to_string(tmpl.count()));
  auto summary = posterior_m(draws, a.plug_in ? MStatistic::PlugIn : MStatistic::MonteCarlo);
  if (summary.zero_sd > 0)
    log(c, "warning: " + std::to_string(summary.zero_sd) + " voxels with zero posterior sd (f_bar set to 0)");
  if (a.n_discoveries) {
    const auto ct = threshold_for_count(summary.f_bar, *a.n_discoveries);
    summary = decide_at(std::move(summary), ct.threshold);
    log(c, "threshold " + format_double(ct.threshold) + " for " + std::to_string(*a.n_discoveries) +
               " requested discoveries; achieved " + std::to_string(ct.achieved));
  } else {
    DecisionParams dp{a.k1, a.k2, a.t};
    if (const auto w = dp.check(); !w.empty()) log(c, "warning: " + w);
    summary = decide(std::move(summary), dp);
    log(c, "threshold " + format_double(summary.threshold) + "; discoveries " +
               std::to_string(summary.discoveries()));
  }
  ensure_dir(a.out);
  write_nifti(tmpl.with_masked_values(summary.f_bar), join(a.out, "f_bar.nii.gz"));
  write_nifti(tmpl.with_masked_values(summary.m), join(a.out, "m.nii.gz"));
  std::vector<double> d(summary.delta.begin(), summary.delta.end());
  write_nifti(tmpl.with_masked_values(d), join(a.out, "delta.nii.gz"));
  std::ofstream f(join(a.out, "activation.csv"));
  if (!f) throw IoError("cannot write activation.csv");
  f << "voxel,f_bar,m,delta\n";
  for (std::size_t v = 0; v < summary.f_bar.size(); ++v)
    f << v << ',' << format_double(summary.f_bar[v]) << ',' << format_double(summary.m[v]) << ','
      << int(summary.delta[v]) << '\n';
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::vector<std::string> kernels{"exponential"};
  std::vector<double> snr_h{0.1};
  std::vector<double> ratios{2.0};
  std::vector<std::string> methods{"dual", "high", "naive", "std"};
  int replicates = 100;
  std::size_t n_discoveries = 450;
  int chains = 1, iters = 800, warmup = 300, thin = 1, L = 25;
  double target_accept = 0.65;
  std::string out = "sim_out";
};

std::string tag(double x) {
  auto s = format_double(x);
  for (auto& ch : s)
    if (ch == '.') ch = 'p';
  return s;
}

int cmd_simulate(const SimulateArgs& a, const Common& c) {
  SweepConfig cfg;
  cfg.families.clear();
  for (const auto& k : a.kernels) cfg.families.push_back(parse_kernel_family(k));
  cfg.methods.clear();
  for (const auto& m : a.methods) cfg.methods.push_back(parse_method(m));
  cfg.snr_h = a.snr_h;
  cfg.ratios = a.ratios;
  cfg.replicates = a.replicates;
  cfg.n_discoveries = a.n_discoveries;
  cfg.hmc = hmc_from(a.chains, a.iters, a.warmup, a.thin, a.L, a.target_accept, c);
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  ensure_dir(a.out);
  const auto res = run_sweep(cfg);
  for (const auto& l : res.log) log(c, l);
  write_sweep_csv(res, join(a.out, "table.csv"));
  for (const auto& cell : res.cells) {
    const std::string name = "roc_" + to_string(cell.method) + "_" + to_string(cell.family) +
                             "_snr" + tag(cell.snr_h) + "_ratio" + tag(cell.snr_ratio) + ".csv";
    write_roc_csv(cell.roc, join(a.out, name));
    std::ostringstream os;
    os << to_string(cell.method) << ' ' << to_string(cell.family) << " ratio " << cell.snr_ratio
       << " snr_h " << cell.snr_h << ": mse " << cell.mse_mean << " false- "
       << 100.0 * cell.false_neg_mean << "% (" << 100.0 * cell.false_neg_se << ")"
       << (cell.failed ? " failed " + std::to_string(cell.failed) : std::string());
    log(c, os.str());
  }
  return 0;
}

// ---------------------------------------------------------------- config file

// Flat key = value settings for the chosen subcommand; keys are long
// option names without dashes. Command-line flags take precedence.
std::vector<std::string> config_args(const std::string& path, CLI::App* sub,
                                     const std::vector<std::string>& explicit_args) {
  std::vector<std::string> out;
  for (const auto& [key, value] : read_key_values(path)) {
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError(path + ": unknown key '" + key + "' for " + sub->get_name());
    const std::string flag = "--" + key;
    const bool overridden = std::any_of(explicit_args.begin(), explicit_args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (overridden) continue;
    if (opt->get_expected_max() == 0) {
      if (value == "true" || value == "1") out.push_back("--" + key);
      else if (value != "false" && value != "0")
        throw UsageError(path + ": '" + key + "' expects true or false");
      continue;
    }
    std::stringstream ss(value);
    std::string item;
    bool any = false;
    while (std::getline(ss, item, ',')) {
      item.erase(0, item.find_first_not_of(" \t"));
      item.erase(item.find_last_not_of(" \t") + 1);
      if (item.empty()) continue;
      out.push_back("--" + key);
      out.push_back(item);
      any = true;
    }
    if (!any) throw UsageError(path + ": empty value for '" + key + "'");
  }
  return out;
}

int classify(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const IoError*>(&e)) return 2;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian dual-resolution Gaussian-process image fusion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dualres 0.1.0");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  std::string config;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--seed", common.seed, "Master 64-bit random seed");
    s->add_option("--threads", common.threads, "Worker threads (default: DUALRES_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
    s->add_flag("--quiet", common.quiet, "Suppress progress messages");
    s->add_option("--config", config, "Flat key = value settings file");
  };

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate-kernel", "Estimate covariance parameters by minimum contrast");
  est->add_option("--in", ea.in, "Input NIfTI volume")->required();
  est->add_option("--mask", ea.mask, "Optional mask volume (nonzero = in mask)");
  est->add_option("--out", ea.out, "Output parameter file");
  est->add_option("--covariogram", ea.covariogram, "Write the empirical covariogram CSV");
  est->add_option("--curve", ea.curve, "Write the fitted covariance curve CSV");
  est->add_option("--fix-nu", ea.fix_nu, "Hold the exponent nu fixed");
  est->add_option("--nu-max", ea.nu_max, "Upper bound for nu")->check(CLI::Range(0.0, 2.0));
  est->add_option("--constraint", ea.constraint, "psi-le-nu=on|off");
  est->add_flag("--nugget", ea.nugget, "Fit the zero-distance entry with a nugget term");
  est->add_option("--n0", ea.n0, "Scan radius of the principal-direction multiples");
  est->add_option("--n1", ea.n1, "Axis-only scan radius");
  est->add_option("--starts", ea.starts, "Optimizer multistarts");
  est->add_option("--max-evals", ea.max_evals, "Objective evaluations per start");
  add_common(est);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Sample the posterior mean field");
  fit->add_option("--mode", fa.mode, "dual, high, std or naive")
      ->check(CLI::IsMember({"dual", "high", "std", "naive"}));
  fit->add_option("--high", fa.high, "High-resolution NIfTI volume");
  fit->add_option("--std", fa.std_img, "Standard-resolution NIfTI volume");
  fit->add_option("--mask-high", fa.mask_high, "Mask for the high-resolution volume");
  fit->add_option("--mask-std", fa.mask_std, "Mask for the standard-resolution volume");
  fit->add_option("--theta", fa.theta, "Kernel parameter file (tau_sq, psi, nu)");
  fit->add_flag("--estimate-theta", fa.estimate_theta, "Estimate theta from the standard image with nu = 1");
  fit->add_option("--r", fa.radius, "Kriging neighbourhood radius in mm (default: kernel FWHM)");
  fit->add_option("--chains", fa.chains, "Independent chains")->check(CLI::PositiveNumber);
  fit->add_option("--iters", fa.iters, "Iterations per chain, including warmup");
  fit->add_option("--warmup", fa.warmup, "Warmup iterations (step-size adaptation)");
  fit->add_option("--thin", fa.thin, "Keep every thin-th post-warmup draw");
  fit->add_option("--L", fa.L, "Leapfrog steps per iteration");
  fit->add_option("--target-accept", fa.target_accept, "Warmup acceptance target");
  fit->add_flag("--allow-grow", fa.allow_grow, "Double the embedding once if not positive definite");
  fit->add_flag("--allow-clamp", fa.allow_clamp, "Clamp tiny negative embedding eigenvalues");
  fit->add_option("--out", fa.out, "Output directory");
  fit->add_option("--dump-embedding", fa.dump_embedding, "Write the embedding base and eigenvalues");
  fit->add_option("--dump-w", fa.dump_w, "Write the kriging weights as triplets");
  fit->add_option("--gr-bar", fa.gr_bar, "Flag voxels whose Gelman-Rubin statistic exceeds this");
  add_common(fit);

  ThresholdArgs ta;
  auto* thr = app.add_subcommand("threshold", "Turn posterior draws into activation decisions");
  thr->add_option("--draws", ta.draws, "draws.bin written by fit")->required();
  thr->add_option("--mask", ta.mask, "Mask volume (default: mask.nii.gz next to the draws)");
  thr->add_option("--out", ta.out, "Output directory");
  auto* k1 = thr->add_option("--k1", ta.k1, "False-negative penalty");
  auto* k2 = thr->add_option("--k2", ta.k2, "False-positive penalty");
  auto* tt = thr->add_option("--t", ta.t, "Per-discovery penalty");
  auto* nd = thr->add_option("--n-discoveries", ta.n_discoveries, "Pick the threshold giving this many discoveries");
  nd->excludes(k1)->excludes(k2)->excludes(tt);
  thr->add_flag("--plug-in", ta.plug_in, "Use the plug-in rather than the Monte Carlo f statistic");
  add_common(thr);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Run the 2D simulation study");
  sim->add_option("--kernel", sa.kernels, "exponential and/or gaussian")->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sim->add_option("--snr-h", sa.snr_h, "High-resolution SNR values")->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sim->add_option("--ratio", sa.ratios, "SNR_s:SNR_h ratios")->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sim->add_option("--methods", sa.methods, "Subset of dual,high,naive,std")->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sim->add_option("--replicates", sa.replicates, "Replicates per cell")->check(CLI::PositiveNumber);
  sim->add_option("--n-discoveries", sa.n_discoveries, "Discoveries used for count-matched scoring");
  sim->add_option("--chains", sa.chains, "Chains per fit")->check(CLI::PositiveNumber);
  sim->add_option("--iters", sa.iters, "Iterations per chain, including warmup");
  sim->add_option("--warmup", sa.warmup, "Warmup iterations");
  sim->add_option("--thin", sa.thin, "Thinning");
  sim->add_option("--L", sa.L, "Leapfrog steps");
  sim->add_option("--target-accept", sa.target_accept, "Warmup acceptance target");
  sim->add_option("--out", sa.out, "Output directory");
  add_common(sim);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    // A --config file is expanded in front of the remaining arguments so
    // that explicit flags override it.
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
      else continue;
      CLI::App* sub = app.get_subcommand_no_throw(args[0]);
      if (sub == nullptr) throw UsageError("--config must follow a subcommand");
      auto extra = config_args(path, sub, args);
      args.insert(args.begin() + 1, extra.begin(), extra.end());
      break;
    }
    std::vector<const char*> cargv{argv[0]};
    for (const auto& s : args) cargv.push_back(s.c_str());
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return classify(e);
  }

  try {
    if (*est) return cmd_estimate_kernel(ea, common);
    if (*fit) return cmd_fit(fa, common);
    if (*thr) return cmd_threshold(ta, common);
    if (*sim) return cmd_simulate(sa, common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return classify(e);
  }
  return 2;
}
