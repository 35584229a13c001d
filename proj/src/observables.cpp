#include "lrising/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lrising/rng.hpp"
#include "lrising/version.hpp"

namespace lrising::observables {

// --- profiles ------------------------------------------------------------------

ProfileAccumulator::ProfileAccumulator(BoxGeometry box, std::uint64_t batch_size)
    : box_(box), sums_(box.size(), 0), batch_size_(batch_size) {
  if (batch_size_ > 0) {
    batch_sums_.assign(box.size(), 0);
    bm_sum_.assign(box.size(), 0.0);
    bm_sq_.assign(box.size(), 0.0);
  }
}

void ProfileAccumulator::add(const SpinConfiguration& sigma) {
  if (!(sigma.geometry() == box_)) throw ValidationError("sample geometry does not match the profile");
  for (std::size_t k = 0; k < sums_.size(); ++k) sums_[k] += sigma[k];
  ++n_;
  if (batch_size_ == 0) return;
  for (std::size_t k = 0; k < sums_.size(); ++k) batch_sums_[k] += sigma[k];
  if (n_ % batch_size_ != 0) return;
  for (std::size_t k = 0; k < sums_.size(); ++k) {
    const double m = static_cast<double>(batch_sums_[k]) / static_cast<double>(batch_size_);
    bm_sum_[k] += m;
    bm_sq_[k] += m * m;
    batch_sums_[k] = 0;
  }
  ++batches_;
}

MagnetizationProfile ProfileAccumulator::finish() const {
  const std::size_t sites = sums_.size();
  if (batch_size_ > 0) {
    if (batches_ < 2) throw ValidationError("batch-means profile needs at least 2 complete batches");
    MagnetizationProfile p{box_, std::vector<double>(sites), std::vector<double>(sites), batches_ * batch_size_};
    const double b = static_cast<double>(batches_);
    for (std::size_t k = 0; k < sites; ++k) {
      const double m = bm_sum_[k] / b;
      const double var = std::max(0.0, (bm_sq_[k] - b * m * m) / (b - 1.0));
      p.mean[k] = m;
      p.std_error[k] = std::sqrt(var / b);
    }
    return p;
  }
  if (n_ < 2) throw ValidationError("a magnetization profile needs at least 2 samples");
  MagnetizationProfile p{box_, std::vector<double>(sites), std::vector<double>(sites), n_};
  const double n = static_cast<double>(n_);
  for (std::size_t k = 0; k < sites; ++k) {
    const double m = static_cast<double>(sums_[k]) / n;
    // spins are +-1 so the sample variance is n/(n-1) (1 - m^2)
    const double var = std::max(0.0, (1.0 - m * m) * n / (n - 1.0));
    p.mean[k] = m;
    p.std_error[k] = std::sqrt(var / n);
  }
  return p;
}

MagnetizationProfile magnetization_profile(std::span<const SpinConfiguration> samples) {
  if (samples.empty()) throw ValidationError("empty sample stream");
  ProfileAccumulator acc(samples.front().geometry());
  for (const auto& s : samples) acc.add(s);
  return acc.finish();
}

MagnetizationProfile exact_profile(const enumerate::ExactGibbs& g) {
  auto m = enumerate::exact_magnetization(g);
  return {g.geometry, std::move(m), std::vector<double>(g.num_sites(), 0.0), 0};
}

// --- antisymmetry --------------------------------------------------------------

AntisymmetryReport antisymmetry_residual(const MagnetizationProfile& p, int h) {
  const BoxGeometry& box = p.geometry;
  if (box.j_min() + box.j_max() != 2 * h - 1)
    throw ValidationError("box rows " + std::to_string(box.j_min()) + ".." +
                          std::to_string(box.j_max()) + " are not symmetric about height " +
                          std::to_string(h) + " - 1/2");
  AntisymmetryReport r;
  r.interface_height = h;
  r.residual.resize(box.size());
  r.ratio.resize(box.size());
  for (std::size_t k = 0; k < box.size(); ++k) {
    const Site s = box.site(k);
    const Site m{s.i, 2 * h - 1 - s.j};
    const std::size_t km = box.index(m);
    const double res = p.mean[k] + p.mean[km];
    const double se = std::hypot(p.std_error[k], p.std_error[km]);
    r.residual[k] = res;
    if (se > 0.0)
      r.ratio[k] = std::abs(res) / se;
    else
      r.ratio[k] = res == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    r.max_abs_residual = std::max(r.max_abs_residual, std::abs(res));
    r.max_ratio = std::max(r.max_ratio, r.ratio[k]);
  }
  return r;
}

// --- interface heights -----------------------------------------------------------

double column_height(const SpinConfiguration& sigma, int column, int reference) {
  const BoxGeometry& box = sigma.geometry();
  if (column < box.i_min() || column > box.i_max()) throw ValidationError("column outside the box");
  long long twice = 0;  // accumulate 2 h to stay in integers
  for (int j = box.j_min(); j <= box.j_max(); ++j) {
    const int s = sigma.at({column, j});
    twice += j >= reference ? (1 - s) : -(1 + s);
  }
  return 0.5 * static_cast<double>(twice);
}

InterfaceTrace interface_height(const SpinConfiguration& sigma, int reference) {
  const BoxGeometry& box = sigma.geometry();
  InterfaceTrace t{box.i_min(), {}, reference};
  t.heights.reserve(static_cast<std::size_t>(box.width()));
  for (int i = box.i_min(); i <= box.i_max(); ++i) t.heights.push_back(column_height(sigma, i, reference));
  return t;
}

namespace {

double sample_variance(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / (n - 1.0);
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

bool FluctuationReport::strictly_increasing_separated() const {
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    if (!(sizes[k].variance > sizes[k - 1].variance)) return false;
    if (!(sizes[k].ci_low > sizes[k - 1].ci_high)) return false;
  }
  return !sizes.empty();
}

FluctuationReport interface_fluctuations(std::span<const SizeSeries> series, std::uint64_t seed,
                                         int resamples, std::size_t block_length) {
  if (series.size() < 3) throw ValidationError("fluctuation analysis needs at least 3 sizes");
  if (resamples < 2) throw ValidationError("need at least 2 bootstrap resamples");
  if (block_length < 1) throw ValidationError("block length must be >= 1");
  FluctuationReport rep;
  rep.bootstrap_resamples = resamples;
  rep.block_length = block_length;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    if (s > 0 && ser.size <= series[s - 1].size) throw ValidationError("sizes must be increasing");
    if (ser.size <= 0) throw ValidationError("sizes must be positive");
    if (ser.heights.size() < 2 * block_length)
      throw ValidationError("size " + std::to_string(ser.size) + " has too few samples");

    SizeFluctuation f;
    f.size = ser.size;
    f.n_samples = ser.heights.size();
    f.variance = sample_variance(ser.heights);

    // moving-block bootstrap; block_length 1 is the ordinary bootstrap
    const std::size_t n = ser.heights.size();
    const std::size_t n_blocks_start = n - block_length + 1;
    Philox4x32 rng(seed, static_cast<std::uint64_t>(s));
    std::vector<double> boot(static_cast<std::size_t>(resamples));
    std::vector<double> resample(n);
    for (int b = 0; b < resamples; ++b) {
      std::size_t filled = 0;
      while (filled < n) {
        const auto start = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_blocks_start));
        for (std::size_t k = 0; k < block_length && filled < n; ++k)
          resample[filled++] = ser.heights[start + k];
      }
      boot[static_cast<std::size_t>(b)] = sample_variance(resample);
    }
    const double bmean = std::accumulate(boot.begin(), boot.end(), 0.0) / resamples;
    double bss = 0.0;
    for (double v : boot) bss += (v - bmean) * (v - bmean);
    f.bootstrap_error = std::sqrt(bss / (resamples - 1));
    f.ci_low = percentile(boot, 0.025);
    f.ci_high = percentile(boot, 0.975);
    rep.sizes.push_back(f);
  }

  rep.degenerate = std::any_of(rep.sizes.begin(), rep.sizes.end(),
                               [](const SizeFluctuation& f) { return !(f.variance > 0.0); });
  if (!rep.degenerate) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(rep.sizes.size());
    for (const auto& f : rep.sizes) {
      const double x = std::log(static_cast<double>(f.size));
      const double y = std::log(f.variance);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return rep;
}

// --- van Beijeren ---------------------------------------------------------------

CouplingModel VanBeijerenSetup::chain_model() const {
  if (const auto* m = std::get_if<AnisoLRNN>(&model2d.variant())) return CouplingModel::dyson_chain(m->alpha1);
  if (const auto* m = std::get_if<BiAxialLR>(&model2d.variant())) return CouplingModel::dyson_chain(m->alpha1);
  throw ValidationError("van Beijeren comparison needs an anisotropic (aniso_nn or biaxial) model");
}

void VanBeijerenSetup::validate() const {
  const CouplingModel chain = chain_model();
  const double a1 = std::get<DysonChain>(chain.variant()).alpha;
  if (claim_mode && !(a1 > 1.0 && a1 < 2.0))
    throw ValidationError("claim mode requires alpha1 in (1, 2); use exploratory mode otherwise");
  if (L < 0 || M < 1) throw ValidationError("van Beijeren box needs L >= 0 and M >= 1");
  if (chain_half_length < L) throw ValidationError("the chain must be at least as wide as the box");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be finite and >= 0");
  if (!(field_epsilon > 0.0)) throw ValidationError("field_epsilon must be > 0");
}

namespace {

VanBeijerenReport assemble(const VanBeijerenSetup& setup, const MagnetizationProfile& p2,
                           const MagnetizationProfile& p1, const std::string& mode) {
  VanBeijerenReport r;
  r.mode = mode;
  r.exploratory = !setup.claim_mode;
  r.min_margin = std::numeric_limits<double>::infinity();
  r.min_margin_in_errors = std::numeric_limits<double>::infinity();
  for (int i = -setup.L; i <= setup.L; ++i) {
    const double l = p2.mean_at({i, 1}), le = p2.std_error_at({i, 1});
    const double rr = p1.mean_at({i, 0}), re = p1.std_error_at({i, 0});
    const double mg = l - rr, me = std::hypot(le, re);
    r.columns.push_back(i);
    r.lhs.push_back(l);
    r.lhs_error.push_back(le);
    r.rhs.push_back(rr);
    r.rhs_error.push_back(re);
    r.margin.push_back(mg);
    r.margin_error.push_back(me);
    r.min_margin = std::min(r.min_margin, mg);
    if (me > 0.0)
      r.min_margin_in_errors = std::min(r.min_margin_in_errors, mg / me);
    else if (mg < 0.0)
      r.min_margin_in_errors = -std::numeric_limits<double>::infinity();
  }
  return r;
}

}  // namespace

nlohmann::json VanBeijerenReport::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["mode"] = mode;
  j["exploratory"] = exploratory;
  j["columns"] = columns;
  j["lhs"] = lhs;
  j["lhs_error"] = lhs_error;
  j["rhs"] = rhs;
  j["rhs_error"] = rhs_error;
  j["margin"] = margin;
  j["margin_error"] = margin_error;
  j["min_margin"] = min_margin;
  if (std::isfinite(min_margin_in_errors)) j["min_margin_in_errors"] = min_margin_in_errors;
  return j;
}

VanBeijerenReport van_beijeren_exact(const VanBeijerenSetup& setup) {
  setup.validate();
  const auto g2 = enumerate::build_exact(setup.model2d, setup.box2d(), BoundaryCondition::dobrushin(1),
                                         setup.beta, setup.field_epsilon);
  const auto g1 = enumerate::build_exact(setup.chain_model(), setup.chain_box(), BoundaryCondition::plus(),
                                         setup.beta, setup.field_epsilon);
  return assemble(setup, exact_profile(g2), exact_profile(g1), "exact");
}

VanBeijerenReport van_beijeren_mc(const VanBeijerenSetup& setup, const McSettings& s) {
  setup.validate();
  auto measure = [&](const CouplingModel& model, const BoxGeometry& box, const BoundaryCondition& bc,
                     std::uint64_t seed) {
    mc::RunPlan plan{model, box, bc, setup.beta, seed, s.burn_in_sweeps, s.n_samples,
                     s.thinning_sweeps, setup.field_epsilon, mc::Sampler::Metropolis};
    ProfileAccumulator acc(box, s.batch_size);
    mc::run_chain(plan, {}, [&](const mc::SampleRecord&, const SpinConfiguration& c) { acc.add(c); },
                  false);
    return acc.finish();
  };
  const auto p2 = measure(setup.model2d, setup.box2d(), BoundaryCondition::dobrushin(1), s.seed);
  // independent stream for the chain
  const auto p1 = measure(setup.chain_model(), setup.chain_box(), BoundaryCondition::plus(),
                          s.seed ^ 0x9E3779B97F4A7C15ull);
  return assemble(setup, p2, p1, "mc");
}

// --- relative entropy ------------------------------------------------------------

exactsum::ProfileWeight profile_weight_grid(const MagnetizationProfile& p, int L) {
  const BoxGeometry& box = p.geometry;
  if (box.i_min() > -L || box.i_max() < L || box.j_min() > 1 || box.j_max() < 1)
    throw ValidationError("profile does not cover columns -L..L and row 1");
  const int rows = box.j_max();
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(2 * L + 1));
  for (int j = 1; j <= rows; ++j)
    for (int i = -L; i <= L; ++i) {
      const double m = p.mean_at({i, j});
      if (!std::isfinite(m)) throw ValidationError("profile entry missing at (" + std::to_string(i) +
                                                   "," + std::to_string(j) + ")");
      values.push_back(std::clamp(m, -1.0, 1.0));
    }
  return exactsum::ProfileWeight::grid(-L, L, rows, std::move(values));
}

RelativeEntropyEstimate relative_entropy_estimator(const MagnetizationProfile& profile,
                                                   const CouplingModel& model, int L, int ell,
                                                   double tol) {
  if (profile.mean.size() != profile.geometry.size())
    throw ValidationError("profile is missing entries");
  const auto w = profile_weight_grid(profile, L);
  RelativeEntropyEstimate r;
  r.estimate = exactsum::relative_entropy_sum(model, L, ell, w, tol);
  r.bound = exactsum::relative_entropy_bound(model, L, ell, exactsum::ProfileWeight::unit(), tol);
  r.within_bound = r.estimate.lower() <= r.bound.upper();
  return r;
}

// --- export ------------------------------------------------------------------------

std::string profile_csv(const MagnetizationProfile& p) {
  std::ostringstream os;
  os.precision(17);
  os << "# schema_version=" << kSchemaVersion << "\n";
  os << "i,j,mean,std_error\n";
  for (std::size_t k = 0; k < p.geometry.size(); ++k) {
    const Site s = p.geometry.site(k);
    os << s.i << "," << s.j << "," << p.mean[k] << "," << p.std_error[k] << "\n";
  }
  return os.str();
}

nlohmann::json profile_summary(const MagnetizationProfile& p) {
  double mean = 0.0, max_se = 0.0;
  for (std::size_t k = 0; k < p.mean.size(); ++k) {
    mean += p.mean[k];
    max_se = std::max(max_se, p.std_error[k]);
  }
  return {{"schema_version", kSchemaVersion},
          {"geometry", p.geometry.label()},
          {"n_samples", p.n_samples},
          {"mean_magnetization", mean / static_cast<double>(p.mean.size())},
          {"max_std_error", max_se}};
}

// --- observables for run_chain ------------------------------------------------------

mc::Observable magnetization_observable() {
  return {"magnetization", [](const SpinConfiguration& s) { return s.magnetization(); }};
}

mc::Observable column_height_observable(int column, int reference) {
  return {"height_i" + std::to_string(column),
          [column, reference](const SpinConfiguration& s) { return column_height(s, column, reference); }};
}

}  // namespace lrising::observables
