#pragma once

// Lattice geometry, coupling models, boundary conditions and spin
// configurations for two-dimensional long-range Ising models.
//
// Energy convention used throughout the library:
//
//   E(sigma | omega) = -( sum_{x<y in box} J_xy s_x s_y + sum_{x in box} s_x f_x )
//
// where f_x = sum_{y outside box} J_xy omega_y is the boundary field.  Lower
// energy means higher Gibbs weight exp(-beta E), so the all-plus
// configuration is the ground state under plus boundary conditions.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace lrising {

/// Raised for invalid parameters or inputs (maps to CLI exit status 1).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Site {
  int i = 0;  // horizontal
  int j = 0;  // vertical
  friend bool operator==(const Site&, const Site&) = default;
};

/// Rectangular box {i_min..i_max} x {j_min..j_max}, free boundaries.
///
/// Sites are indexed row-major starting from (i_min, j_min): the column index
/// runs fastest.  This ordering is also the bit ordering used by exact
/// enumeration and the scan order of the Metropolis sweep.
class BoxGeometry {
 public:
  /// Lambda_{L,M}: i in [-L, L], j in [-M, M].
  static BoxGeometry centered(int L, int M);
  static BoxGeometry square(int L) { return centered(L, L); }
  /// Rows j in [h - M, h + M - 1]: 2M rows placed symmetrically about the
  /// Dobrushin interface at height h - 1/2 (mirror j -> 2h - 1 - j).
  static BoxGeometry interface_symmetric(int L, int M, int h);
  /// Rows j in [center - M, center + M]: symmetric about row `center`
  /// (mirror j -> 2 center - j).
  static BoxGeometry row_centered(int L, int M, int center);
  static BoxGeometry from_bounds(int i_min, int i_max, int j_min, int j_max);

  int i_min() const { return i_min_; }
  int i_max() const { return i_max_; }
  int j_min() const { return j_min_; }
  int j_max() const { return j_max_; }
  int width() const { return i_max_ - i_min_ + 1; }
  int height() const { return j_max_ - j_min_ + 1; }
  std::size_t size() const {
    return static_cast<std::size_t>(width()) * static_cast<std::size_t>(height());
  }

  bool contains(Site s) const {
    return s.i >= i_min_ && s.i <= i_max_ && s.j >= j_min_ && s.j <= j_max_;
  }
  std::size_t index(Site s) const {
    return static_cast<std::size_t>(s.j - j_min_) * static_cast<std::size_t>(width()) +
           static_cast<std::size_t>(s.i - i_min_);
  }
  Site site(std::size_t k) const {
    const auto w = static_cast<std::size_t>(width());
    return {i_min_ + static_cast<int>(k % w), j_min_ + static_cast<int>(k / w)};
  }

  /// Human-readable label, e.g. "x-8..8_y-8..7".
  std::string label() const;

  friend bool operator==(const BoxGeometry&, const BoxGeometry&) = default;

 private:
  BoxGeometry(int i_min, int i_max, int j_min, int j_max)
      : i_min_(i_min), i_max_(i_max), j_min_(j_min), j_max_(j_max) {}
  int i_min_, i_max_, j_min_, j_max_;
};

// ---------------------------------------------------------------------------
// Coupling models

/// Model I: J = |x - y|^{-alpha}, alpha > 2.
struct IsotropicLR {
  double alpha;
  friend bool operator==(const IsotropicLR&, const IsotropicLR&) = default;
};
/// Model II: nearest-neighbour vertically, |di|^{-alpha1} along rows, alpha1 > 1.
struct AnisoLRNN {
  double alpha1;
  friend bool operator==(const AnisoLRNN&, const AnisoLRNN&) = default;
};
/// Model III: |dj|^{-alpha2} along columns, |di|^{-alpha1} along rows.
struct BiAxialLR {
  double alpha1;
  double alpha2;
  friend bool operator==(const BiAxialLR&, const BiAxialLR&) = default;
};
/// One-dimensional Dyson chain embedded as a single row: |di|^{-alpha} along
/// rows and nothing else.  This is the row restriction of Models II and III
/// and serves as the lower-dimensional comparison system.
struct DysonChain {
  double alpha;
  friend bool operator==(const DysonChain&, const DysonChain&) = default;
};

class CouplingModel {
 public:
  using Variant = std::variant<IsotropicLR, AnisoLRNN, BiAxialLR, DysonChain>;

  /// Validates parameters; throws ValidationError outside the summable range.
  CouplingModel(Variant v);  // NOLINT(google-explicit-constructor)

  static CouplingModel isotropic(double alpha) { return {IsotropicLR{alpha}}; }
  static CouplingModel aniso_nn(double alpha1) { return {AnisoLRNN{alpha1}}; }
  static CouplingModel biaxial(double alpha1, double alpha2) {
    return {BiAxialLR{alpha1, alpha2}};
  }
  static CouplingModel dyson_chain(double alpha) { return {DysonChain{alpha}}; }

  const Variant& variant() const { return v_; }
  bool is_isotropic() const { return std::holds_alternative<IsotropicLR>(v_); }

  /// J for displacement (di, dj) != (0, 0).  Depends only on |di|, |dj|.
  double operator()(int di, int dj) const;

  /// e.g. "isotropic(alpha=2.5)".
  std::string describe() const;

  friend bool operator==(const CouplingModel&, const CouplingModel&) = default;

 private:
  Variant v_;
};

/// J_xy; rejects x == y.
double coupling(const CouplingModel& model, Site x, Site y);

/// Couplings cached by absolute displacement over a box's displacement range.
/// O(width * height) storage; J(0, 0) is stored as 0.
class CouplingTable {
 public:
  CouplingTable(const CouplingModel& model, const BoxGeometry& box);

  double at(int di, int dj) const {
    return values_[static_cast<std::size_t>(dj < 0 ? -dj : dj) * static_cast<std::size_t>(w_) +
                   static_cast<std::size_t>(di < 0 ? -di : di)];
  }
  /// Pointer to the row of couplings at vertical offset |dj|, indexed by |di|.
  const double* row(int dj) const {
    return values_.data() + static_cast<std::size_t>(dj < 0 ? -dj : dj) * static_cast<std::size_t>(w_);
  }
  const BoxGeometry& geometry() const { return box_; }
  const CouplingModel& model() const { return model_; }

 private:
  CouplingModel model_;
  BoxGeometry box_;
  int w_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Boundary conditions

class BoundaryCondition {
 public:
  enum class Kind { Plus, Minus, Dobrushin };

  static BoundaryCondition plus() { return {Kind::Plus, 0, +1}; }
  static BoundaryCondition minus() { return {Kind::Minus, 0, -1}; }
  /// `upper` sign on rows j >= h, the opposite sign below.  The default
  /// (+1) is the usual Dobrushin condition (+ above, - below).
  static BoundaryCondition dobrushin(int h, int upper = +1);

  Kind kind() const { return kind_; }
  int height() const { return h_; }
  int upper_sign() const { return upper_; }
  bool is_uniform() const { return kind_ != Kind::Dobrushin; }

  /// omega_y.
  int value(Site y) const {
    switch (kind_) {
      case Kind::Plus: return +1;
      case Kind::Minus: return -1;
      case Kind::Dobrushin: return y.j >= h_ ? upper_ : -upper_;
    }
    return 0;
  }

  /// The global spin flip omega -> -omega.
  BoundaryCondition flipped() const;

  /// e.g. "plus", "dobrushin(h=1)".
  std::string describe() const;

  friend bool operator==(const BoundaryCondition&, const BoundaryCondition&) = default;

 private:
  BoundaryCondition(Kind k, int h, int upper) : kind_(k), h_(h), upper_(upper) {}
  Kind kind_;
  int h_;
  int upper_;
};

inline int bc_value(const BoundaryCondition& bc, Site y) { return bc.value(y); }

// ---------------------------------------------------------------------------
// Spin configurations

class SpinConfiguration {
 public:
  /// All spins set to `fill` (+1 or -1).
  explicit SpinConfiguration(BoxGeometry box, int fill = +1);
  SpinConfiguration(BoxGeometry box, std::vector<std::int8_t> spins);

  const BoxGeometry& geometry() const { return box_; }
  std::size_t size() const { return spins_.size(); }

  int operator[](std::size_t k) const { return spins_[k]; }
  int at(Site s) const { return spins_[box_.index(s)]; }
  void set(std::size_t k, int s) { spins_[k] = static_cast<std::int8_t>(s); }
  void set(Site site, int s) { set(box_.index(site), s); }
  void flip(std::size_t k) { spins_[k] = static_cast<std::int8_t>(-spins_[k]); }

  const std::vector<std::int8_t>& spins() const { return spins_; }
  SpinConfiguration negated() const;
  double magnetization() const;  // per site

  friend bool operator==(const SpinConfiguration&, const SpinConfiguration&) = default;

 private:
  BoxGeometry box_;
  std::vector<std::int8_t> spins_;
};

/// The Dobrushin ground state sigma_GS (+ on j >= 1 and on row 0, - below)
/// and sigma_GS,step (sigma_GS flipped on the half line {(i, 0): i <= 0}),
/// restricted to the box.
std::pair<SpinConfiguration, SpinConfiguration> ground_state_pair(const BoxGeometry& box);

/// Ground state of the given boundary condition restricted to the box:
/// constant for uniform b.c., the flat interface at the b.c. height for
/// Dobrushin b.c.
SpinConfiguration boundary_ground_state(const BoxGeometry& box, const BoundaryCondition& bc);

// ---------------------------------------------------------------------------
// Energies

/// A value with a rigorous two-sided error bound: the true quantity lies in
/// [value - tail_bound, value + tail_bound].
struct CertifiedValue {
  double value = 0.0;
  double tail_bound = 0.0;
  long long truncation_radius = 0;

  double lower() const { return value - tail_bound; }
  double upper() const { return value + tail_bound; }
  bool contains(double x) const { return x >= lower() && x <= upper(); }
};

/// Per-site boundary field f_x = sum_{y outside box} J_xy omega_y.
/// Built by exactsum::boundary_field.
struct BoundaryFieldTable {
  BoxGeometry geometry;
  BoundaryCondition bc;
  CouplingModel model;
  double epsilon;
  std::vector<CertifiedValue> field;

  double operator[](std::size_t k) const { return field[k].value; }
  double at(Site s) const { return field[geometry.index(s)].value; }
};

/// Total energy under the library sign convention (see top of file).
double total_energy(const CouplingModel& model, const BoxGeometry& box,
                    const BoundaryCondition& bc, const SpinConfiguration& sigma,
                    const BoundaryFieldTable& field);

/// Same, reusing a precomputed coupling table.
double total_energy(const CouplingTable& table, const SpinConfiguration& sigma,
                    const BoundaryFieldTable& field);

/// Local fields h_x = sum_{y in box, y != x} J_xy s_y + f_x for every site.
std::vector<double> local_fields(const CouplingTable& table, const SpinConfiguration& sigma,
                                 const BoundaryFieldTable& field);

}  // namespace lrising
