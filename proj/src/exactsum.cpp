#include "lrising/exactsum.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <numbers>

#include "lrising/version.hpp"

namespace lrising::exactsum {

namespace {

constexpr double kPi = std::numbers::pi;

// Neumaier compensated summation.
class Accumulator {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Allowance for floating-point rounding in long compensated sums.
double rounding_slack(double magnitude) { return 16.0 * DBL_EPSILON * std::abs(magnitude); }

double offset_power(double a, double t, double k) { return std::pow(t * t + k * k, -a); }

double isotropic_alpha(const CouplingModel& model, const char* what) {
  const auto* iso = std::get_if<IsotropicLR>(&model.variant());
  if (iso == nullptr) throw ValidationError(std::string(what) + " is defined for the isotropic model only");
  return iso->alpha;
}

// Exponent governing the in-row decay.
double row_exponent(const CouplingModel& model) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IsotropicLR>) return m.alpha;
        else if constexpr (std::is_same_v<T, DysonChain>) return m.alpha;
        else return m.alpha1;
      },
      model.variant());
}

// Rigorous bound on R(k) - c_alpha k^{1-alpha} >= 0 from Poisson summation:
// the Fourier transform of (t^2 + k^2)^{-a} is
//   (2 pi^a / Gamma(a)) (|xi|/k)^{a-1/2} K_{a-1/2}(2 pi k |xi|)
// and K_nu(z) <= sqrt(2 pi / z) exp(-z + nu^2 / (2 z)).
double poisson_remainder_bound(double alpha, long long k) {
  const double a = 0.5 * alpha;
  const double nu = a - 0.5;
  const double kk = static_cast<double>(k);
  const double pref = 2.0 * std::pow(kPi, a) / std::tgamma(a);
  const double first =
      std::pow(kk, -nu - 0.5) * std::exp(-2.0 * kPi * kk + nu * nu / (4.0 * kPi * kk));
  const double r = std::pow(2.0, nu) * std::exp(-2.0 * kPi * kk);
  return 2.0 * pref * first / (1.0 - r);
}

double row_integral_constant(double alpha) {
  const double a = 0.5 * alpha;
  return std::sqrt(kPi) * std::tgamma(a - 0.5) / std::tgamma(a);
}

constexpr long long kPoissonRow = 8;

CertifiedValue scaled(const CertifiedValue& v, double factor) {
  return {v.value * factor, v.tail_bound * std::abs(factor), v.truncation_radius};
}

}  // namespace

// --- one-dimensional building blocks ---------------------------------------

Bracket power_tail(double s, long long N) {
  if (!(s > 1.0)) throw ValidationError("power tail requires s > 1");
  if (N < 1) throw ValidationError("power tail requires N >= 1");
  const double n = static_cast<double>(N);
  const double lo = std::pow(n, 1.0 - s) / (s - 1.0) - 0.5 * std::pow(n, -s);
  const double hi = std::pow(n + 0.5, 1.0 - s) / (s - 1.0);
  return {lo, hi};
}

CertifiedValue power_sum(double s, long long N) {
  const Bracket tail = power_tail(s, N);
  Accumulator acc;
  for (long long n = N; n >= 1; --n) acc.add(std::pow(static_cast<double>(n), -s));
  const double value = acc.value() + tail.mid();
  return {value, tail.half_width() + rounding_slack(value), N};
}

CertifiedValue power_sum_tol(double s, double tol) {
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  double est = std::pow(s * (s + 1.0) / (16.0 * tol), 1.0 / (s + 2.0));
  long long N = std::max<long long>(8, static_cast<long long>(std::ceil(std::min(est, 1e7))));
  for (int it = 0; it < 40; ++it) {
    CertifiedValue v = power_sum(s, N);
    if (v.tail_bound <= tol) return v;
    N *= 2;
  }
  throw std::runtime_error("power_sum: tolerance not reachable");
}

long long min_offset_truncation(double alpha, long long k) {
  const double need = 2.0 * std::sqrt(0.5 * alpha + 1.0) * static_cast<double>(k);
  return std::max<long long>(1, static_cast<long long>(std::ceil(need)));
}

Bracket offset_power_integral(double alpha, long long k, double x) {
  if (!(alpha > 1.0)) throw ValidationError("offset power integral requires alpha > 1");
  const double a = 0.5 * alpha;
  const double kk = static_cast<double>(k);
  if (x < 2.0 * std::sqrt(a + 1.0) * kk || !(x > 0.0))
    throw std::logic_error("offset_power_integral: x too small for the binomial series");
  double term = std::pow(x, 1.0 - alpha) / (alpha - 1.0);
  if (k == 0) return {term, term};
  const double q = (kk / x) * (kk / x);
  Accumulator acc;
  acc.add(term);
  double err = 0.0;
  for (int m = 0; m < 400; ++m) {
    const double next = term * (-(a + m) / (m + 1.0)) * q * (2.0 * a + 2.0 * m - 1.0) /
                        (2.0 * a + 2.0 * m + 1.0);
    err = std::abs(next);
    if (err <= 1e-18 * std::abs(acc.value())) break;
    acc.add(next);
    term = next;
  }
  const double v = acc.value();
  // Alternating series with decreasing terms: the omitted part is bounded by
  // the first omitted term.
  return {v - err - rounding_slack(v), v + err + rounding_slack(v)};
}

Bracket offset_power_tail(double alpha, long long k, long long N) {
  if (N < min_offset_truncation(alpha, k))
    throw std::logic_error("offset_power_tail: truncation below the convex range");
  const double a = 0.5 * alpha;
  const double n = static_cast<double>(N);
  const double fN = offset_power(a, n, static_cast<double>(k));
  const Bracket from_n = offset_power_integral(alpha, k, n);
  const Bracket from_half = offset_power_integral(alpha, k, n + 0.5);
  return {from_n.lo - 0.5 * fN, from_half.hi};
}

CertifiedValue isotropic_row_sum(double alpha, long long k, long long N) {
  if (k < 0) k = -k;
  const double a = 0.5 * alpha;
  const double kk = static_cast<double>(k);
  const Bracket tail = offset_power_tail(alpha, k, N);
  Accumulator acc;
  for (long long i = N; i >= 1; --i) acc.add(offset_power(a, static_cast<double>(i), kk));
  const double centre = k > 0 ? std::pow(kk, -alpha) : 0.0;
  const double value = centre + 2.0 * (acc.value() + tail.mid());
  return {value, 2.0 * tail.half_width() + rounding_slack(value), N};
}

CertifiedValue isotropic_row_sum_tol(double alpha, long long k, double tol) {
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (k < 0) k = -k;
  if (k >= kPoissonRow) {
    const double main = row_integral_constant(alpha) * std::pow(static_cast<double>(k), 1.0 - alpha);
    const double rem = poisson_remainder_bound(alpha, k);
    const double value = main + 0.5 * rem;
    return {value, 0.5 * rem + rounding_slack(value), 0};
  }
  const double est = std::pow(alpha * (alpha + 1.0) / (8.0 * tol), 1.0 / (alpha + 2.0));
  long long N = std::max(min_offset_truncation(alpha, k),
                         static_cast<long long>(std::ceil(std::min(est, 1e7))) + 1);
  for (int it = 0; it < 40; ++it) {
    CertifiedValue v = isotropic_row_sum(alpha, k, N);
    if (v.tail_bound <= tol) return v;
    N *= 2;
  }
  throw std::runtime_error("isotropic_row_sum: tolerance not reachable");
}

CertifiedValue row_sum(const CouplingModel& model, long long k, double tol) {
  if (k < 0) k = -k;
  if (model.is_isotropic()) return isotropic_row_sum_tol(row_exponent(model), k, tol);
  if (k == 0) return scaled(power_sum_tol(row_exponent(model), 0.5 * tol), 2.0);
  return std::visit(
      [&](const auto& m) -> CertifiedValue {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AnisoLRNN>) {
          return {k == 1 ? 1.0 : 0.0, 0.0, 0};
        } else if constexpr (std::is_same_v<T, BiAxialLR>) {
          return {std::pow(static_cast<double>(k), -m.alpha2), 0.0, 0};
        } else {
          return {0.0, 0.0, 0};
        }
      },
      model.variant());
}

CertifiedValue lattice_total(const CouplingModel& model, double tol) {
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  const CertifiedValue r0 = row_sum(model, 0, 0.25 * tol);
  CertifiedValue rest{0.0, 0.0, 0};
  if (const auto* iso = std::get_if<IsotropicLR>(&model.variant())) {
    const double alpha = iso->alpha;
    Accumulator acc;
    double err = 0.0;
    for (long long k = 1; k < kPoissonRow; ++k) {
      const CertifiedValue r = isotropic_row_sum_tol(alpha, k, tol / (8.0 * kPoissonRow));
      acc.add(r.value);
      err += r.tail_bound;
      rest.truncation_radius = std::max(rest.truncation_radius, r.truncation_radius);
    }
    // Rows k >= 8: c k^{1-alpha} plus a Poisson remainder decaying like e^{-2 pi k}.
    const double c = row_integral_constant(alpha);
    const double s = alpha - 1.0;
    double est = std::pow(c * s * (s + 1.0) / (4.0 * tol), 1.0 / (s + 2.0));
    long long K = std::max<long long>(64, static_cast<long long>(std::ceil(std::min(est, 1e8))));
    Bracket tail = power_tail(s, K);
    while (c * tail.half_width() > 0.125 * tol && K < (1LL << 40)) {
      K *= 2;
      tail = power_tail(s, K);
    }
    Accumulator far;
    for (long long k = K; k >= kPoissonRow; --k) far.add(std::pow(static_cast<double>(k), -s));
    const double poisson = poisson_remainder_bound(alpha, kPoissonRow) / (1.0 - std::exp(-2.0 * kPi));
    acc.add(c * (far.value() + tail.mid()) + 0.5 * poisson);
    err += c * tail.half_width() + 0.5 * poisson;
    rest.value = acc.value();
    rest.tail_bound = err + rounding_slack(rest.value);
  } else if (std::holds_alternative<AnisoLRNN>(model.variant())) {
    rest = {1.0, 0.0, 0};
  } else if (const auto* bi = std::get_if<BiAxialLR>(&model.variant())) {
    rest = power_sum_tol(bi->alpha2, 0.25 * tol);
  }
  const double value = r0.value + 2.0 * rest.value;
  return {value, r0.tail_bound + 2.0 * rest.tail_bound + rounding_slack(value),
          std::max(r0.truncation_radius, rest.truncation_radius)};
}

CertifiedValue cancelled_half_plane(const CouplingModel& model, long long d, double tol) {
  if (d < 0) throw ValidationError("distance to the interface must be >= 0");
  const double per_row = tol / static_cast<double>(d + 1);
  CertifiedValue out = row_sum(model, 0, per_row);
  Accumulator acc;
  acc.add(out.value);
  for (long long k = 1; k <= d; ++k) {
    const CertifiedValue r = row_sum(model, k, per_row);
    acc.add(2.0 * r.value);
    out.tail_bound += 2.0 * r.tail_bound;
    out.truncation_radius = std::max(out.truncation_radius, r.truncation_radius);
  }
  out.value = acc.value();
  return out;
}

// --- tail bounds -----------------------------------------------------------

double one_sided_row_tail_bound(double alpha, long long R) {
  if (!(alpha > 1.0)) throw ValidationError("row tail requires alpha > 1");
  if (R < 1) throw ValidationError("row tail requires R >= 1");
  return std::pow(static_cast<double>(R), 1.0 - alpha) / (alpha - 1.0);
}

double tail_bound(const CouplingModel& model, long long R) {
  if (R < 2) throw ValidationError("tail_bound requires R >= 2");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IsotropicLR>) {
          // Each lattice point v owns the unit square around it; on that
          // square |u| <= |v| + c with c = sqrt(2)/2, so
          //   sum_{|v|>R} |v|^{-alpha} <= int_{|u|>R-c} (|u| - c)^{-alpha} du = g(R).
          // g(R) / R^{2-alpha} is decreasing, so C = g(2) 2^{alpha-2} works
          // for every R >= 2.
          const double alpha = m.alpha;
          const double c = std::sqrt(2.0) / 2.0;
          const double r0 = 2.0 - 2.0 * c;
          const double g2 = 2.0 * kPi *
                            (std::pow(r0, 2.0 - alpha) / (alpha - 2.0) +
                             c * std::pow(r0, 1.0 - alpha) / (alpha - 1.0));
          const double C = g2 * std::pow(2.0, alpha - 2.0);
          return C * std::pow(static_cast<double>(R), 2.0 - alpha);
        } else if constexpr (std::is_same_v<T, AnisoLRNN>) {
          return 2.0 * one_sided_row_tail_bound(m.alpha1, R);
        } else if constexpr (std::is_same_v<T, BiAxialLR>) {
          return 2.0 * one_sided_row_tail_bound(m.alpha1, R) +
                 2.0 * one_sided_row_tail_bound(m.alpha2, R);
        } else {
          return 2.0 * one_sided_row_tail_bound(m.alpha, R);
        }
      },
      model.variant());
}

// --- boundary field --------------------------------------------------------

BoundaryFieldTable boundary_field(const CouplingModel& model, const BoxGeometry& box,
                                  const BoundaryCondition& bc, double epsilon) {
  if (!(epsilon > 0.0)) throw ValidationError("field epsilon must be positive");
  const std::size_t n = box.size();
  std::vector<CertifiedValue> lattice(n);

  if (bc.is_uniform()) {
    const CertifiedValue total = lattice_total(model, 0.5 * epsilon);
    for (auto& v : lattice) v = scaled(total, bc.upper_sign());
  } else {
    // Distance (in rows) of every box row from the interface.
    const int h = bc.height();
    auto dist = [h](int j) { return j >= h ? j - h : h - 1 - j; };
    const long long dmax = std::max(dist(box.j_min()), dist(box.j_max()));
    const double per_row = 0.25 * epsilon / static_cast<double>(dmax + 1);
    std::vector<CertifiedValue> prefix(static_cast<std::size_t>(dmax + 1));
    CertifiedValue run = row_sum(model, 0, per_row);
    prefix[0] = run;
    for (long long k = 1; k <= dmax; ++k) {
      const CertifiedValue r = row_sum(model, k, per_row);
      run.value += 2.0 * r.value;
      run.tail_bound += 2.0 * r.tail_bound;
      run.truncation_radius = std::max(run.truncation_radius, r.truncation_radius);
      prefix[static_cast<std::size_t>(k)] = run;
    }
    for (std::size_t x = 0; x < n; ++x) {
      const int j = box.site(x).j;
      const int sign = j >= h ? bc.upper_sign() : -bc.upper_sign();
      lattice[x] = scaled(prefix[static_cast<std::size_t>(dist(j))], sign);
    }
  }

  // Subtract the box's own share of the infinite-lattice sum.
  const CouplingTable table(model, box);
  std::vector<int> omega(n);
  for (std::size_t y = 0; y < n; ++y) omega[y] = bc.value(box.site(y));
  const int w = box.width();
  const int ht = box.height();

  BoundaryFieldTable out{box, bc, model, epsilon, {}};
  out.field.resize(n);
  for (int jx = 0; jx < ht; ++jx) {
    for (int ix = 0; ix < w; ++ix) {
      const std::size_t x = static_cast<std::size_t>(jx) * w + ix;
      Accumulator inside;
      for (int jy = 0; jy < ht; ++jy) {
        const double* row = table.row(jy - jx);
        for (int iy = 0; iy < w; ++iy)
          inside.add(row[iy > ix ? iy - ix : ix - iy] * omega[static_cast<std::size_t>(jy) * w + iy]);
      }
      const double b = inside.value();
      CertifiedValue f = lattice[x];
      f.value -= b;
      f.tail_bound += rounding_slack(std::abs(lattice[x].value) + std::abs(b));
      if (f.tail_bound > epsilon)
        throw std::runtime_error("boundary_field: requested epsilon not reachable in double precision");
      out.field[x] = f;
    }
  }
  return out;
}

// --- quantities from the proofs ---------------------------------------------

CertifiedValue shift_energy_bound(const CouplingModel& model, int L, double tol) {
  const double alpha = isotropic_alpha(model, "shift_energy_bound");
  if (L < 1) throw ValidationError("shift_energy_bound requires L >= 1");
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  const double a = 0.5 * alpha;
  const long long W = 2LL * L + 1;
  const double est = std::pow(4.0 * static_cast<double>(W * W) * alpha * (alpha + 1.0) / (16.0 * tol),
                              1.0 / (alpha + 2.0));
  long long T = std::max({min_offset_truncation(alpha, L), W, 16LL,
                          static_cast<long long>(std::ceil(std::min(est, 1e7)))});

  // Tail over t > T, where every column offset t is reached by all W columns.
  auto tail_at = [&](long long t_cut) {
    Bracket sum{0.0, 0.0};
    for (int j = -L; j <= L; ++j) {
      const Bracket b = offset_power_tail(alpha, std::abs(j), t_cut);
      sum.lo += b.lo;
      sum.hi += b.hi;
    }
    return Bracket{static_cast<double>(W) * sum.lo, static_cast<double>(W) * sum.hi};
  };
  Bracket tail = tail_at(T);
  while (4.0 * tail.half_width() > tol && T < (1LL << 30)) {
    T *= 2;
    tail = tail_at(T);
  }

  // D = 4 sum_{t >= 1} min(t, W) G(t), G(t) = sum_{|j| <= L} (t^2 + j^2)^{-alpha/2}.
  Accumulator acc;
  for (long long t = T; t >= 1; --t) {
    const double tt = static_cast<double>(t);
    Accumulator g;
    for (int j = L; j >= 1; --j) g.add(2.0 * offset_power(a, tt, j));
    g.add(std::pow(tt, -alpha));
    acc.add(static_cast<double>(std::min(t, W)) * g.value());
  }
  const double value = 4.0 * (acc.value() + tail.mid());
  return {value, 4.0 * tail.half_width() + rounding_slack(value), T};
}

CertifiedValue step_energy(double alpha, double tolerance) {
  if (!(alpha > 2.0))
    throw DivergenceError("step energy diverges for alpha <= 2 (sum of s^{1-alpha})");
  if (!(tolerance > 0.0)) throw ValidationError("tolerance must be positive");
  const double s = alpha - 1.0;
  const double est = std::pow(s * (s + 1.0) / (8.0 * tolerance), 1.0 / (s + 2.0));
  long long S = std::max<long long>(16, static_cast<long long>(std::ceil(std::min(est, 4e4))));
  for (int it = 0; it < 30; ++it) {
    const Bracket tail = power_tail(s, S);  // sum_{d > S} d * d^{-alpha}
    if (tail.half_width() > 0.5 * tolerance) {
      S *= 2;
      continue;
    }
    // Every lattice pair (i_x >= 1, i_y >= 0) on the diagonals i_x + i_y <= S,
    // largest diagonals first.
    Accumulator acc;
    for (long long d = S; d >= 1; --d)
      for (long long iy = 0; iy < d; ++iy) {
        const long long ix = d - iy;
        acc.add(std::pow(static_cast<double>(ix + iy), -alpha));
      }
    const double value = acc.value() + tail.mid();
    return {value, tail.half_width() + rounding_slack(value), S};
  }
  throw std::runtime_error("step_energy: tolerance not reachable");
}

// --- relative entropy --------------------------------------------------------

ProfileWeight ProfileWeight::unit() { return {}; }

ProfileWeight ProfileWeight::column(std::vector<double> by_height) {
  ProfileWeight w;
  w.kind_ = Kind::Column;
  w.rows_ = static_cast<int>(by_height.size());
  w.values_ = std::move(by_height);
  return w;
}

ProfileWeight ProfileWeight::grid(int i_min, int i_max, int rows, std::vector<double> values) {
  if (i_max < i_min || rows < 0 ||
      values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(i_max - i_min + 1))
    throw ValidationError("profile grid dimensions do not match its values");
  ProfileWeight w;
  w.kind_ = Kind::Grid;
  w.i_min_ = i_min;
  w.i_max_ = i_max;
  w.rows_ = rows;
  w.values_ = std::move(values);
  return w;
}

double ProfileWeight::operator()(int i, int j) const {
  if (kind_ == Kind::Unit || rows_ == 0) return 1.0;
  j = std::clamp(j, 1, rows_);  // rows above the explicit ones repeat the top row
  if (kind_ == Kind::Column) return values_[static_cast<std::size_t>(j - 1)];
  if (i < i_min_ || i > i_max_) throw ValidationError("profile weight requested outside its columns");
  return values_[static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(i_max_ - i_min_ + 1) +
                 static_cast<std::size_t>(i - i_min_)];
}

double ProfileWeight::min_value() const {
  double m = values_.empty() ? 1.0 : values_.front();
  for (double v : values_) m = std::min(m, v);
  return m;
}

double ProfileWeight::max_value() const {
  double m = values_.empty() ? 1.0 : values_.front();
  for (double v : values_) m = std::max(m, v);
  return m;
}

CertifiedValue relative_entropy_sum(const CouplingModel& model, int L, int ell,
                                    const ProfileWeight& weight, double tol) {
  const double alpha = isotropic_alpha(model, "relative_entropy_sum");
  if (L < 1) throw ValidationError("relative entropy sum requires L >= 1");
  if (ell < 1) throw ValidationError("relative entropy sum requires ell >= 1");
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (weight.min_value() < -1.0 || weight.max_value() > 1.0)
    throw ValidationError("profile weights must lie in [-1, 1]");

  const double a = 0.5 * alpha;
  const int J = weight.explicit_rows();
  const int W = 2 * L + 1;

  // ---- near field: i_y in [L, L + ell], full interaction with the half strip.
  const int tmax = 2 * L + ell;
  const double pairs = static_cast<double>(W) * (ell + 1);
  const double jc_est =
      std::pow(2.0 * pairs * alpha * (alpha + 1.0) / (4.0 * tol), 1.0 / (alpha + 2.0));
  std::vector<Bracket> coltail(static_cast<std::size_t>(tmax + 1));
  for (int t = 0; t <= tmax; ++t) {
    long long Jc = std::max<long long>({static_cast<long long>(J) + 1, min_offset_truncation(alpha, t),
                                        static_cast<long long>(std::ceil(std::min(jc_est, 1e6)))});
    Bracket tail = offset_power_tail(alpha, t, Jc);
    Accumulator acc;
    for (long long j = Jc; j > J; --j) acc.add(offset_power(a, t, static_cast<double>(j)));
    coltail[static_cast<std::size_t>(t)] = {acc.value() + tail.lo, acc.value() + tail.hi};
  }
  Accumulator near;
  double near_err = 0.0;
  for (int ix = -L; ix <= L; ++ix) {
    for (int iy = L; iy <= L + ell; ++iy) {
      const int t = iy - ix;
      const Bracket& ct = coltail[static_cast<std::size_t>(t)];
      const double top = weight(ix, J + 1);
      double s = top * ct.mid();
      for (int j = 1; j <= J; ++j) s += weight(ix, j) * offset_power(a, t, j);
      near.add(s);
      near_err += std::abs(top) * ct.half_width();
    }
  }

  // ---- far field: i_y > L + ell, folded difference kernel.
  // With d_j(t) = f_t(j-1) - f_t(j) >= 0 and w_top the weight of the rows
  // above J, F(t) = sum_{j>=1} w_j d_j(t) telescopes to
  //   w_top t^{-alpha} + sum_{j<=J} (w_j - w_top) d_j(t),
  // and sum_{j<=J} d_j(t) = t^{-alpha} - f_t(J) <= a J^2 t^{-alpha-2}.
  const double dev_coef = a * J * J;
  auto column_spread = [&](int ix) {
    const double top = weight(ix, J + 1);
    double c = 0.0;
    for (int j = 1; j <= J; ++j) c = std::max(c, std::abs(weight(ix, j) - top));
    return c;
  };
  long long T = std::max<long long>(2LL * L + ell + 1, 64);
  auto tail_width = [&](long long T_) {
    return power_tail(alpha, T_).half_width() + 2.0 * dev_coef * power_tail(alpha + 2.0, T_).hi;
  };
  while (static_cast<double>(W) * tail_width(T) > 0.25 * tol && T < (1LL << 28)) T *= 2;
  const Bracket p_tail = power_tail(alpha, T);
  const double p2_tail = power_tail(alpha + 2.0, T).hi;

  auto F = [&](int ix, long long t) {
    const double tt = static_cast<double>(t);
    if (J == 0) return weight(ix, 1) * std::pow(tt, -alpha);
    double prev = std::pow(tt, -alpha);
    double s = 0.0;
    for (int j = 1; j <= J; ++j) {
      const double cur = offset_power(a, tt, j);
      s += weight(ix, j) * (prev - cur);
      prev = cur;
    }
    return s + weight(ix, J + 1) * prev;
  };

  Accumulator far;
  double far_err = 0.0;
  for (int ix = -L; ix <= L; ++ix) {
    const long long t0 = static_cast<long long>(L) + ell + 1 - ix;
    const double top = weight(ix, J + 1);
    Accumulator col;
    for (long long t = T; t >= t0; --t) col.add(F(ix, t));
    far.add(col.value() + top * p_tail.mid());
    far_err += std::abs(top) * p_tail.half_width() + column_spread(ix) * dev_coef * p2_tail;
  }

  const double value = 2.0 * (near.value() + far.value());
  return {value, 2.0 * (near_err + far_err) + rounding_slack(value), T};
}

CertifiedValue relative_entropy_bound(const CouplingModel& model, int L, int ell,
                                      const ProfileWeight& profile_bound, double tol) {
  if (profile_bound.min_value() < 0.0 || profile_bound.max_value() > 1.0)
    throw ValidationError("profile bound values must lie in [0, 1]");
  return relative_entropy_sum(model, L, ell, profile_bound, tol);
}

// --- zeta oracle ---------------------------------------------------------------

double zeta_oracle(double s, double tolerance) {
  if (!(s > 1.0)) throw ValidationError("zeta_oracle requires s > 1");
  if (!(tolerance > 0.0)) throw ValidationError("tolerance must be positive");
  // B_2, B_4, ..., B_30
  static constexpr std::array<double, 15> kBernoulli = {
      1.0 / 6,          -1.0 / 30,        1.0 / 42,          -1.0 / 30,         5.0 / 66,
      -691.0 / 2730,    7.0 / 6,          -3617.0 / 510,     43867.0 / 798,     -174611.0 / 330,
      854513.0 / 138,   -236364091.0 / 2730, 8553103.0 / 6,  -23749461029.0 / 870,
      8615841276005.0 / 14322};
  for (long long N = 10; N < (1LL << 24); N *= 2) {
    const double n = static_cast<double>(N);
    Accumulator acc;
    for (long long k = N - 1; k >= 1; --k) acc.add(std::pow(static_cast<double>(k), -s));
    acc.add(std::pow(n, 1.0 - s) / (s - 1.0));
    acc.add(0.5 * std::pow(n, -s));
    // T_k = B_2k / (2k)! * s (s+1) ... (s+2k-2) * N^{1-s-2k}
    double rising = s;  // s (s+1) ... (s+2k-2)
    double fact = 2.0;  // (2k)!
    for (std::size_t k = 1; k <= kBernoulli.size(); ++k) {
      const double term = kBernoulli[k - 1] / fact * rising * std::pow(n, 1.0 - s - 2.0 * k);
      acc.add(term);
      if (k == kBernoulli.size()) break;
      const double r_next = rising * (s + 2.0 * k - 1.0) * (s + 2.0 * k);
      const double f_next = fact * (2.0 * k + 1.0) * (2.0 * k + 2.0);
      const double next = kBernoulli[k] / f_next * r_next * std::pow(n, -1.0 - s - 2.0 * k);
      // For real s the remainder after T_k is bounded by |T_{k+1}|.
      if (std::abs(next) < tolerance) return acc.value();
      if (std::abs(next) > std::abs(term)) break;  // asymptotic series turning; enlarge N
      rising = r_next;
      fact = f_next;
    }
  }
  throw std::runtime_error("zeta_oracle: tolerance not reachable");
}

// --- export -----------------------------------------------------------------------

nlohmann::json certified_record(const std::string& quantity, const nlohmann::json& parameters,
                                const CertifiedValue& v) {
  return {{"schema_version", kSchemaVersion},
          {"quantity", quantity},
          {"parameters", parameters},
          {"value", v.value},
          {"tail_bound", v.tail_bound},
          {"truncation_radius", v.truncation_radius}};
}

}  // namespace lrising::exactsum
