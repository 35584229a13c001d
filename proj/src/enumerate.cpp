#include "lrising/enumerate.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "lrising/exactsum.hpp"

namespace lrising::enumerate {

SpinConfiguration ExactGibbs::configuration(std::uint32_t state) const {
  SpinConfiguration sigma(geometry);
  for (std::size_t k = 0; k < geometry.size(); ++k) sigma.set(k, spin_of(state, k));
  return sigma;
}

std::uint32_t state_of(const SpinConfiguration& sigma) {
  if (sigma.size() > kMaxSites) throw ValidationError("configuration too large to encode");
  std::uint32_t s = 0;
  for (std::size_t k = 0; k < sigma.size(); ++k)
    if (sigma[k] > 0) s |= 1u << k;
  return s;
}

ExactGibbs build_exact(const CouplingModel& model, const BoxGeometry& box,
                       const BoundaryCondition& bc, double beta, double epsilon) {
  if (box.size() > kMaxSites)
    throw ValidationError("exact enumeration is limited to " + std::to_string(kMaxSites) +
                          " sites (box has " + std::to_string(box.size()) + ")");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be finite and >= 0");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");

  ExactGibbs g{box, beta, model, bc, exactsum::boundary_field(model, box, bc, epsilon), {}, {}, 0.0};
  const std::size_t n = box.size();
  const std::size_t states = std::size_t{1} << n;
  const CouplingTable table(model, box);

  // Gray-code walk from the all-minus state, updating local fields on each
  // flip.  Energies are resynchronized from scratch periodically so rounding
  // cannot accumulate over 2^20 steps.
  SpinConfiguration sigma(box, -1);
  std::vector<double> h = local_fields(table, sigma, g.field);
  double e = total_energy(table, sigma, g.field);
  g.energies.assign(states, 0.0);
  g.energies[0] = e;
  std::uint32_t gray = 0;
  for (std::size_t t = 1; t < states; ++t) {
    const auto k = static_cast<std::size_t>(std::countr_zero(t));
    const int s_old = sigma[k];
    e += 2.0 * s_old * h[k];
    sigma.flip(k);
    const Site x = box.site(k);
    for (std::size_t y = 0; y < n; ++y) {
      if (y == k) continue;
      const Site sy = box.site(y);
      h[y] -= 2.0 * s_old * table.at(sy.i - x.i, sy.j - x.j);
    }
    gray ^= 1u << k;
    if ((t & 0xFFFu) == 0) e = total_energy(table, sigma, g.field);
    g.energies[gray] = e;
  }

  double e_min = std::numeric_limits<double>::infinity();
  for (double v : g.energies) e_min = std::min(e_min, v);
  g.weights.resize(states);
  double z = 0.0;
  for (std::size_t s = 0; s < states; ++s) {
    g.weights[s] = std::exp(-beta * (g.energies[s] - e_min));
    z += g.weights[s];
  }
  for (double& w : g.weights) w /= z;
  g.log_partition = -beta * e_min + std::log(z);
  return g;
}

double exact_expectation(const ExactGibbs& g,
                         const std::function<double(const SpinConfiguration&)>& f) {
  double acc = 0.0;
  SpinConfiguration sigma(g.geometry, -1);
  std::uint32_t prev = 0;
  for (std::uint32_t s = 0; s < g.num_states(); ++s) {
    // update only the bits that changed
    for (std::uint32_t diff = s ^ prev; diff; diff &= diff - 1)
      sigma.flip(static_cast<std::size_t>(std::countr_zero(diff)));
    prev = s;
    acc += g.weights[s] * f(sigma);
  }
  return acc;
}

std::vector<double> exact_magnetization(const ExactGibbs& g) {
  const std::size_t n = g.num_sites();
  std::vector<double> m(n, 0.0);
  for (std::uint32_t s = 0; s < g.num_states(); ++s)
    for (std::size_t k = 0; k < n; ++k) m[k] += g.weights[s] * spin_of(s, k);
  return m;
}

double exact_correlation(const ExactGibbs& g, std::span<const std::size_t> sites) {
  std::uint32_t mask = 0;
  for (auto k : sites) {
    if (k >= g.num_sites()) throw ValidationError("site index outside the box");
    mask ^= 1u << k;  // sigma_k^2 = 1
  }
  double acc = 0.0;
  for (std::uint32_t s = 0; s < g.num_states(); ++s) {
    // product over A of spins = (-1)^{number of minus spins in A}
    const int minus = std::popcount(mask & ~s);
    acc += (minus & 1) ? -g.weights[s] : g.weights[s];
  }
  return acc;
}

std::vector<double> resample_site(const ExactGibbs& g, std::size_t k) {
  if (k >= g.num_sites()) throw ValidationError("site index outside the box");
  const BoxGeometry& box = g.geometry;
  const Site x = box.site(k);
  std::vector<double> out(g.num_states(), 0.0);
  for (std::uint32_t s = 0; s < g.num_states(); ++s) {
    double field = g.field[k];
    for (std::size_t y = 0; y < g.num_sites(); ++y) {
      if (y == k) continue;
      const Site sy = box.site(y);
      field += g.model(sy.i - x.i, sy.j - x.j) * spin_of(s, y);
    }
    // P(sigma_k = +1 | rest) = 1 / (1 + e^{-2 beta h})
    const double p_plus = 1.0 / (1.0 + std::exp(-2.0 * g.beta * field));
    const double p = spin_of(s, k) > 0 ? p_plus : 1.0 - p_plus;
    out[s] = p * (g.weights[s] + g.weights[s ^ (1u << k)]);
  }
  return out;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("distributions have different supports");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

}  // namespace lrising::enumerate
