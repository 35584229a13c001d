#pragma once

// Deterministic lattice sums with certified truncation error.
//
// Every infinite series here has eventually nonnegative, monotone (and
// convex) summands along its truncation direction.  Truncated tails are
// bracketed from both sides:
//
//   int_N^inf f - f(N)/2  <=  sum_{n>N} f(n)  <=  int_{N+1/2}^inf f
//
// (trapezoid over-estimates, midpoint under-estimates a convex integrand),
// and the reported value is the midpoint of the bracket.

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrising/kernel.hpp"

namespace lrising::exactsum {

/// Raised when a requested series diverges (e.g. the step energy at alpha <= 2).
class DivergenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Closed interval known to contain a quantity.
struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  double half_width() const { return 0.5 * (hi - lo); }
};

// --- one-dimensional building blocks ---------------------------------------

/// sum_{n > N} n^{-s}, s > 1, N >= 1.
Bracket power_tail(double s, long long N);

/// zeta-like sum_{n >= 1} n^{-s} summed explicitly to N plus a certified tail.
CertifiedValue power_sum(double s, long long N);

/// Same with N chosen so the tail bound is <= tol.
CertifiedValue power_sum_tol(double s, double tol);

/// int_x^inf (t^2 + k^2)^{-alpha/2} dt, for x >= 2 sqrt(alpha/2 + 1) k.
/// Alternating binomial series; the returned bracket includes the series
/// truncation error.
Bracket offset_power_integral(double alpha, long long k, double x);

/// sum_{n > N} (n^2 + k^2)^{-alpha/2}; requires N >= 2 sqrt(alpha/2 + 1) k.
Bracket offset_power_tail(double alpha, long long k, long long N);

/// Smallest N accepted by offset_power_tail for this k.
long long min_offset_truncation(double alpha, long long k);

/// Row sum of the isotropic kernel at vertical offset k:
/// R(k) = sum_{i in Z} (i^2 + k^2)^{-alpha/2}, omitting i = 0 when k = 0.
/// Summed explicitly over |i| <= N.
CertifiedValue isotropic_row_sum(double alpha, long long k, long long N);

/// Same with the truncation chosen automatically; rows with k >= 8 use the
/// Poisson-summation form R(k) = c_alpha k^{1-alpha} + (exponentially small,
/// rigorously bounded).
CertifiedValue isotropic_row_sum_tol(double alpha, long long k, double tol);

/// Row sum R(k) of an arbitrary coupling model (sum over the row at vertical
/// offset k, excluding the origin).
CertifiedValue row_sum(const CouplingModel& model, long long k, double tol);

/// sum_{v != 0} J_v over the whole lattice.
CertifiedValue lattice_total(const CouplingModel& model, double tol);

/// sum_{|k| <= d} R(|k|): the exterior field of a Dobrushin condition on the
/// infinite lattice at distance d from the interface, after exact
/// cancellation of the mirrored rows.
CertifiedValue cancelled_half_plane(const CouplingModel& model, long long d, double tol);

// --- tail bounds -----------------------------------------------------------

/// Rigorous upper bound on sum_{|v| > R} J_v over all lattice sites at
/// Euclidean distance > R from a fixed site.  For the isotropic model this is
/// C(alpha) R^{2-alpha} with an explicit constant; for the row/column models
/// it is a sum of one-dimensional tails R^{1-a}/(a-1).  Requires R >= 2.
double tail_bound(const CouplingModel& model, long long R);

/// One-sided one-dimensional tail bound sum_{n > R} n^{-alpha} <= R^{1-alpha}/(alpha-1).
double one_sided_row_tail_bound(double alpha, long long R);

// --- boundary field --------------------------------------------------------

/// f_x = sum_{y outside box} J_xy omega_y for every box site, each with
/// tail_bound <= epsilon.  Computed as (infinite-lattice sum) - (box sum);
/// for Dobrushin b.c. the infinite-lattice part uses the exact row-by-row
/// cancellation of mirrored rows.
BoundaryFieldTable boundary_field(const CouplingModel& model, const BoxGeometry& box,
                                  const BoundaryCondition& bc, double epsilon);

// --- quantities from the proofs ---------------------------------------------

/// D(L) = 2 sum_{x in Lambda_L} sum_{y outside, j_y = 0} J_xy: the supremum
/// over configurations of the energy difference between Dobrushin b.c. at
/// heights 0 and 1 in the square box.  Isotropic model only.
CertifiedValue shift_energy_bound(const CouplingModel& model, int L, double tol = 1e-9);

/// The prefactor the half-line-flip energy chain starts with.  step_energy()
/// returns the undoubled diagonal series; multiply by this for the doubled
/// normalization.
inline constexpr double kStepEnergyPrefactor = 2.0;

/// sum_{i_y >= 0} sum_{i_x >= 1} (i_x + i_y)^{-alpha}, summed as a lattice
/// sum over diagonals with a certified tail.  Throws DivergenceError for
/// alpha <= 2.
CertifiedValue step_energy(double alpha, double tolerance);

/// Weights <sigma_(i,j)> (or bounds on them) for the relative-entropy sums,
/// for columns i and heights j >= 1.  Rows above the explicit ones repeat
/// the top explicit row of their column.
class ProfileWeight {
 public:
  static ProfileWeight unit();
  /// by_height[j - 1] is the weight of every site at height j.
  static ProfileWeight column(std::vector<double> by_height);
  /// grid[(j - 1) * (i_max - i_min + 1) + (i - i_min)] for heights 1..rows.
  static ProfileWeight grid(int i_min, int i_max, int rows, std::vector<double> values);

  double operator()(int i, int j) const;
  int explicit_rows() const { return rows_; }
  bool is_unit() const { return kind_ == Kind::Unit; }
  double min_value() const;
  double max_value() const;

 private:
  enum class Kind { Unit, Column, Grid };
  Kind kind_ = Kind::Unit;
  int i_min_ = 0;
  int i_max_ = 0;
  int rows_ = 0;
  std::vector<double> values_;
};

/// Weighted relative-entropy sum with the near/far split at i_y = L + ell:
///
///   2 sum_{|i_x|<=L} sum_{j_x>=1} sum_{i_y=L}^{L+ell} w J_{(i_x,j_x),(i_y,0)}
/// + 2 sum_{|i_x|<=L} sum_{i_y>L+ell} sum_{j_x>=1} w |J_{(i_x,j_x),(i_y,0)} - J_{(i_x,1-j_x),(i_y,0)}|
///
/// Weights may lie anywhere in [-1, 1].
CertifiedValue relative_entropy_sum(const CouplingModel& model, int L, int ell,
                                    const ProfileWeight& weight, double tol);

/// Deterministic bound B(L, ell, alpha): relative_entropy_sum with a profile
/// bound in [0, 1] (unit by default).
CertifiedValue relative_entropy_bound(const CouplingModel& model, int L, int ell,
                                      const ProfileWeight& profile_bound = ProfileWeight::unit(),
                                      double tol = 1e-8);

// --- verification oracle ------------------------------------------------------

/// Riemann zeta for real s > 1 by Euler-Maclaurin summation.
double zeta_oracle(double s, double tolerance);

// --- export -------------------------------------------------------------------

/// {schema_version, quantity, parameters, value, tail_bound, truncation_radius}
nlohmann::json certified_record(const std::string& quantity, const nlohmann::json& parameters,
                                const CertifiedValue& v);

}  // namespace lrising::exactsum
