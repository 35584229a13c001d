#include "lrising/kernel.hpp"

#include <cmath>
#include <sstream>

namespace lrising {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

// --- BoxGeometry -----------------------------------------------------------

BoxGeometry BoxGeometry::from_bounds(int i_min, int i_max, int j_min, int j_max) {
  if (i_max < i_min || j_max < j_min) {
    throw ValidationError("box bounds are empty");
  }
  return BoxGeometry(i_min, i_max, j_min, j_max);
}

BoxGeometry BoxGeometry::centered(int L, int M) {
  if (L < 0 || M < 0) throw ValidationError("box half-sizes must be >= 0");
  return BoxGeometry(-L, L, -M, M);
}

BoxGeometry BoxGeometry::interface_symmetric(int L, int M, int h) {
  if (L < 0 || M < 1) throw ValidationError("interface-symmetric box needs L >= 0, M >= 1");
  return BoxGeometry(-L, L, h - M, h + M - 1);
}

BoxGeometry BoxGeometry::row_centered(int L, int M, int center) {
  if (L < 0 || M < 0) throw ValidationError("box half-sizes must be >= 0");
  return BoxGeometry(-L, L, center - M, center + M);
}

std::string BoxGeometry::label() const {
  std::ostringstream os;
  os << "x" << i_min_ << ".." << i_max_ << "_y" << j_min_ << ".." << j_max_;
  return os.str();
}

// --- CouplingModel ---------------------------------------------------------

CouplingModel::CouplingModel(Variant v) : v_(v) {
  std::visit(overloaded{
                 [](const IsotropicLR& m) {
                   if (!(m.alpha > 2.0) || !std::isfinite(m.alpha))
                     throw ValidationError("isotropic model requires alpha > 2");
                 },
                 [](const AnisoLRNN& m) {
                   if (!(m.alpha1 > 1.0) || !std::isfinite(m.alpha1))
                     throw ValidationError("anisotropic LR/NN model requires alpha1 > 1");
                 },
                 [](const BiAxialLR& m) {
                   if (!(m.alpha1 > 1.0) || !(m.alpha2 > 1.0) || !std::isfinite(m.alpha1) ||
                       !std::isfinite(m.alpha2))
                     throw ValidationError("bi-axial model requires alpha1 > 1 and alpha2 > 1");
                 },
                 [](const DysonChain& m) {
                   if (!(m.alpha > 1.0) || !std::isfinite(m.alpha))
                     throw ValidationError("Dyson chain requires alpha > 1");
                 },
             },
             v_);
}

double CouplingModel::operator()(int di, int dj) const {
  di = di < 0 ? -di : di;
  dj = dj < 0 ? -dj : dj;
  if (di == 0 && dj == 0) return 0.0;
  return std::visit(
      overloaded{
          [&](const IsotropicLR& m) {
            const double r2 = static_cast<double>(di) * di + static_cast<double>(dj) * dj;
            return std::pow(r2, -0.5 * m.alpha);
          },
          [&](const AnisoLRNN& m) {
            if (dj == 0) return std::pow(static_cast<double>(di), -m.alpha1);
            if (di == 0 && dj == 1) return 1.0;
            return 0.0;
          },
          [&](const BiAxialLR& m) {
            if (dj == 0) return std::pow(static_cast<double>(di), -m.alpha1);
            if (di == 0) return std::pow(static_cast<double>(dj), -m.alpha2);
            return 0.0;
          },
          [&](const DysonChain& m) {
            if (dj == 0) return std::pow(static_cast<double>(di), -m.alpha);
            return 0.0;
          },
      },
      v_);
}

std::string CouplingModel::describe() const {
  return std::visit(
      overloaded{
          [](const IsotropicLR& m) { return "isotropic(alpha=" + fmt_double(m.alpha) + ")"; },
          [](const AnisoLRNN& m) { return "aniso_nn(alpha1=" + fmt_double(m.alpha1) + ")"; },
          [](const BiAxialLR& m) {
            return "biaxial(alpha1=" + fmt_double(m.alpha1) + ",alpha2=" + fmt_double(m.alpha2) +
                   ")";
          },
          [](const DysonChain& m) { return "dyson_chain(alpha=" + fmt_double(m.alpha) + ")"; },
      },
      v_);
}

double coupling(const CouplingModel& model, Site x, Site y) {
  if (x == y) throw ValidationError("self-coupling J_xx is undefined");
  return model(x.i - y.i, x.j - y.j);
}

CouplingTable::CouplingTable(const CouplingModel& model, const BoxGeometry& box)
    : model_(model), box_(box), w_(box.width()) {
  values_.resize(box.size());
  for (int dj = 0; dj < box.height(); ++dj)
    for (int di = 0; di < box.width(); ++di)
      values_[static_cast<std::size_t>(dj) * static_cast<std::size_t>(w_) +
              static_cast<std::size_t>(di)] = model(di, dj);
}

// --- BoundaryCondition -----------------------------------------------------

BoundaryCondition BoundaryCondition::dobrushin(int h, int upper) {
  if (upper != 1 && upper != -1) throw ValidationError("Dobrushin upper sign must be +1 or -1");
  return {Kind::Dobrushin, h, upper};
}

BoundaryCondition BoundaryCondition::flipped() const {
  switch (kind_) {
    case Kind::Plus: return minus();
    case Kind::Minus: return plus();
    case Kind::Dobrushin: return dobrushin(h_, -upper_);
  }
  return *this;
}

std::string BoundaryCondition::describe() const {
  switch (kind_) {
    case Kind::Plus: return "plus";
    case Kind::Minus: return "minus";
    case Kind::Dobrushin:
      return "dobrushin(h=" + std::to_string(h_) + (upper_ < 0 ? ",flipped)" : ")");
  }
  return "?";
}

// --- SpinConfiguration -----------------------------------------------------

SpinConfiguration::SpinConfiguration(BoxGeometry box, int fill)
    : box_(box), spins_(box.size(), static_cast<std::int8_t>(fill)) {
  if (fill != 1 && fill != -1) throw ValidationError("spin values must be +1 or -1");
}

SpinConfiguration::SpinConfiguration(BoxGeometry box, std::vector<std::int8_t> spins)
    : box_(box), spins_(std::move(spins)) {
  if (spins_.size() != box_.size()) throw ValidationError("spin vector does not match box size");
  for (auto s : spins_)
    if (s != 1 && s != -1) throw ValidationError("spin values must be +1 or -1");
}

SpinConfiguration SpinConfiguration::negated() const {
  SpinConfiguration out = *this;
  for (auto& s : out.spins_) s = static_cast<std::int8_t>(-s);
  return out;
}

double SpinConfiguration::magnetization() const {
  long long m = 0;
  for (auto s : spins_) m += s;
  return static_cast<double>(m) / static_cast<double>(spins_.size());
}

std::pair<SpinConfiguration, SpinConfiguration> ground_state_pair(const BoxGeometry& box) {
  SpinConfiguration gs(box), step(box);
  for (std::size_t k = 0; k < box.size(); ++k) {
    const Site s = box.site(k);
    const int v = s.j >= 0 ? +1 : -1;  // A+ and A0 are plus, A- minus
    gs.set(k, v);
    step.set(k, (s.j == 0 && s.i <= 0) ? -1 : v);
  }
  return {gs, step};
}

SpinConfiguration boundary_ground_state(const BoxGeometry& box, const BoundaryCondition& bc) {
  SpinConfiguration sigma(box);
  for (std::size_t k = 0; k < box.size(); ++k) sigma.set(k, bc.value(box.site(k)));
  return sigma;
}

// --- energies --------------------------------------------------------------

double total_energy(const CouplingModel& model, const BoxGeometry& box,
                    const BoundaryCondition& bc, const SpinConfiguration& sigma,
                    const BoundaryFieldTable& field) {
  if (!(field.model == model) || !(field.geometry == box) || !(field.bc == bc))
    throw ValidationError("boundary field was computed for a different (model, box, bc)");
  return total_energy(CouplingTable(model, box), sigma, field);
}

double total_energy(const CouplingTable& table, const SpinConfiguration& sigma,
                    const BoundaryFieldTable& field) {
  const BoxGeometry& box = table.geometry();
  if (!(sigma.geometry() == box) || !(field.geometry == box))
    throw ValidationError("configuration geometry does not match the box");
  const int w = box.width();
  const int h = box.height();
  double pair = 0.0;
  double ext = 0.0;
  // Each unordered pair once: later sites only.
  for (int jx = 0; jx < h; ++jx) {
    for (int ix = 0; ix < w; ++ix) {
      const std::size_t x = static_cast<std::size_t>(jx) * w + ix;
      const int sx = sigma[x];
      double acc = 0.0;
      {
        const double* row = table.row(0);
        for (int iy = ix + 1; iy < w; ++iy)
          acc += row[iy - ix] * sigma[static_cast<std::size_t>(jx) * w + iy];
      }
      for (int jy = jx + 1; jy < h; ++jy) {
        const double* row = table.row(jy - jx);
        const std::size_t base = static_cast<std::size_t>(jy) * w;
        for (int iy = 0; iy < w; ++iy) acc += row[iy > ix ? iy - ix : ix - iy] * sigma[base + iy];
      }
      pair += sx * acc;
      ext += sx * field[x];
    }
  }
  return -(pair + ext);
}

std::vector<double> local_fields(const CouplingTable& table, const SpinConfiguration& sigma,
                                 const BoundaryFieldTable& field) {
  const BoxGeometry& box = table.geometry();
  if (!(sigma.geometry() == box) || !(field.geometry == box))
    throw ValidationError("configuration geometry does not match the box");
  const int w = box.width();
  const int h = box.height();
  std::vector<double> out(box.size());
  for (int jx = 0; jx < h; ++jx) {
    for (int ix = 0; ix < w; ++ix) {
      double acc = 0.0;
      for (int jy = 0; jy < h; ++jy) {
        const double* row = table.row(jy - jx);
        const std::size_t base = static_cast<std::size_t>(jy) * w;
        for (int iy = 0; iy < w; ++iy) acc += row[iy > ix ? iy - ix : ix - iy] * sigma[base + iy];
      }
      const std::size_t x = static_cast<std::size_t>(jx) * w + ix;
      out[x] = acc + field[x];  // row(0)[0] == 0 drops the self term
    }
  }
  return out;
}

}  // namespace lrising
