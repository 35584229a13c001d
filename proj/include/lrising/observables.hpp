#pragma once

// Post-processing of configurations and sample streams: magnetization
// profiles, mirror residuals, interface heights and their fluctuations, the
// van Beijeren comparison and the profile-weighted relative entropy.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrising/enumerate.hpp"
#include "lrising/exactsum.hpp"
#include "lrising/kernel.hpp"
#include "lrising/mc.hpp"

namespace lrising::observables {

// --- magnetization profiles -------------------------------------------------

struct MagnetizationProfile {
  BoxGeometry geometry;
  std::vector<double> mean;       // per site, box index order
  std::vector<double> std_error;  // per site
  std::uint64_t n_samples = 0;    // 0 for exact profiles

  double mean_at(Site s) const { return mean[geometry.index(s)]; }
  double std_error_at(Site s) const { return std_error[geometry.index(s)]; }
};

/// Streaming per-site mean of +-1 spins.  With batch_size > 0 the standard
/// errors come from batch means (for correlated chains) and only complete
/// batches are used.
class ProfileAccumulator {
 public:
  explicit ProfileAccumulator(BoxGeometry box, std::uint64_t batch_size = 0);
  void add(const SpinConfiguration& sigma);
  std::uint64_t count() const { return n_; }
  /// Throws ValidationError with fewer than 2 samples (or 2 complete batches).
  MagnetizationProfile finish() const;

 private:
  BoxGeometry box_;
  std::vector<long long> sums_;
  std::uint64_t n_ = 0;
  std::uint64_t batch_size_ = 0;
  std::uint64_t batches_ = 0;
  std::vector<long long> batch_sums_;
  std::vector<double> bm_sum_, bm_sq_;  // sum and sum of squares of batch means
};

MagnetizationProfile magnetization_profile(std::span<const SpinConfiguration> samples);

/// <sigma_x> from an exact distribution, zero standard errors.
MagnetizationProfile exact_profile(const enumerate::ExactGibbs& g);

// --- mirror antisymmetry ------------------------------------------------------

struct AntisymmetryReport {
  int interface_height = 0;          // mirror j -> 2h - 1 - j
  std::vector<double> residual;      // per site: mean(i,j) + mean(i, 2h-1-j)
  std::vector<double> ratio;         // |residual| / combined standard error
  double max_abs_residual = 0.0;
  double max_ratio = 0.0;
};

/// Throws ValidationError unless the box rows are symmetric about h - 1/2.
AntisymmetryReport antisymmetry_residual(const MagnetizationProfile& p, int interface_height);

// --- interface heights ---------------------------------------------------------

struct InterfaceTrace {
  int i_min = 0;
  std::vector<double> heights;  // one per column i_min, i_min + 1, ...
  int reference_height = 0;

  double at(int i) const { return heights.at(static_cast<std::size_t>(i - i_min)); }
};

/// h_i = sum_{j >= ref} (1 - s)/2 - sum_{j < ref} (1 + s)/2 over column i.
/// Raising a flat interface by k gives h_i = +k.
InterfaceTrace interface_height(const SpinConfiguration& sigma, int reference);

/// Height of a single column (cheaper than a full trace).
double column_height(const SpinConfiguration& sigma, int column, int reference);

struct SizeSeries {
  int size = 0;                 // L (or any size parameter)
  std::vector<double> heights;  // mid-column heights, one per sample
};

struct SizeFluctuation {
  int size = 0;
  std::size_t n_samples = 0;
  double variance = 0.0;
  double bootstrap_error = 0.0;
  double ci_low = 0.0;   // 2.5% bootstrap percentile
  double ci_high = 0.0;  // 97.5%
};

struct FluctuationReport {
  std::vector<SizeFluctuation> sizes;
  std::optional<double> slope;  // least squares log Var vs log size; empty if degenerate
  bool degenerate = false;
  int bootstrap_resamples = 0;
  std::size_t block_length = 1;

  /// Var strictly increasing and consecutive bootstrap intervals disjoint.
  bool strictly_increasing_separated() const;
};

inline constexpr int kBootstrapResamples = 1000;

/// Per-size variance with (block) bootstrap errors and the fitted growth
/// exponent.  Requires at least 3 sizes in increasing order.
FluctuationReport interface_fluctuations(std::span<const SizeSeries> series,
                                         std::uint64_t seed = 1,
                                         int resamples = kBootstrapResamples,
                                         std::size_t block_length = 1);

// --- van Beijeren comparison ----------------------------------------------------

/// 2D box rows 1-M..1+M, columns -L..L under Dobrushin(1); 1D chain on
/// columns -Lc..Lc (Lc >= L) with the row coupling |di|^{-alpha1} under
/// plus boundary conditions.
struct VanBeijerenSetup {
  CouplingModel model2d;
  int L = 1;
  int M = 1;
  int chain_half_length = 1;
  double beta = 1.0;
  double field_epsilon = 1e-10;
  bool claim_mode = true;  // rejects alpha1 outside (1, 2)

  BoxGeometry box2d() const { return BoxGeometry::row_centered(L, M, 1); }
  BoxGeometry chain_box() const { return BoxGeometry::centered(chain_half_length, 0); }
  CouplingModel chain_model() const;
  void validate() const;
};

struct VanBeijerenReport {
  std::vector<int> columns;
  std::vector<double> lhs, lhs_error;  // <sigma_(i,1)> in 2D
  std::vector<double> rhs, rhs_error;  // <sigma'_i> on the chain
  std::vector<double> margin, margin_error;
  double min_margin = 0.0;
  double min_margin_in_errors = 0.0;  // min of margin / margin_error (inf if exact)
  bool exploratory = false;
  std::string mode;  // "exact" or "mc"

  nlohmann::json to_json() const;
};

VanBeijerenReport van_beijeren_exact(const VanBeijerenSetup& setup);

struct McSettings {
  std::uint64_t seed = 1;
  std::uint64_t burn_in_sweeps = 1000;
  std::uint64_t n_samples = 10000;
  std::uint64_t thinning_sweeps = 1;
  std::uint64_t batch_size = 0;  // > 0: batch-means standard errors
};

VanBeijerenReport van_beijeren_mc(const VanBeijerenSetup& setup, const McSettings& mc);

// --- relative entropy -------------------------------------------------------------

struct RelativeEntropyEstimate {
  CertifiedValue estimate;
  CertifiedValue bound;  // unit-profile worst case
  bool within_bound = false;
};

/// Profile measured under Dobrushin(1) on a box covering columns -L..L and
/// rows from 1 upward.  Throws ValidationError if entries are missing.
RelativeEntropyEstimate relative_entropy_estimator(const MagnetizationProfile& profile,
                                                   const CouplingModel& model, int L, int ell,
                                                   double tol = 1e-8);

/// The profile rows j >= 1 over columns -L..L as an exactsum weight grid.
exactsum::ProfileWeight profile_weight_grid(const MagnetizationProfile& profile, int L);

// --- export --------------------------------------------------------------------

/// "i,j,mean,std_error" rows.
std::string profile_csv(const MagnetizationProfile& p);
nlohmann::json profile_summary(const MagnetizationProfile& p);

// --- standard observables for run_chain ----------------------------------------

mc::Observable magnetization_observable();
mc::Observable column_height_observable(int column, int reference);

}  // namespace lrising::observables
