#include "lrising/mc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lrising/exactsum.hpp"

namespace lrising::mc {

std::string to_string(Sampler s) { return s == Sampler::Metropolis ? "metropolis" : "cluster"; }

Sampler sampler_from_string(const std::string& s) {
  if (s == "metropolis") return Sampler::Metropolis;
  if (s == "cluster") return Sampler::Cluster;
  throw ValidationError("unknown sampler '" + s + "' (expected metropolis or cluster)");
}

void RunPlan::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be finite and >= 0");
  if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
  if (thinning_sweeps < 1) throw ValidationError("thinning_sweeps must be >= 1");
  if (!(field_epsilon > 0.0)) throw ValidationError("field_epsilon must be > 0");
  if (sampler == Sampler::Cluster && !bc.is_uniform())
    throw ValidationError("the cluster sampler requires plus or minus boundary conditions");
}

ChainTables::ChainTables(const CouplingModel& model, const BoxGeometry& box,
                         const BoundaryCondition& bc, double beta, double field_epsilon)
    : couplings_(model, box),
      field_(exactsum::boundary_field(model, box, bc, field_epsilon)),
      beta_(beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be finite and >= 0");
  double acc = 0.0;
  for (int dj = 0; dj < box.height(); ++dj) {
    for (int di = (dj == 0 ? 1 : -(box.width() - 1)); di < box.width(); ++di) {
      const double j = couplings_.at(di, dj);
      if (j <= 0.0) continue;
      acc += 2.0 * beta * j;
      bond_disp_.push_back({di, dj});
      bond_cum_.push_back(acc);
    }
  }
  const int w = box.width();
  bond_prob_.assign(static_cast<std::size_t>(box.height()) * (2 * w - 1), 0.0);
  for (int dj = 0; dj < box.height(); ++dj)
    for (int di = -(w - 1); di < w; ++di)
      if (dj > 0 || di > 0)
        bond_prob_[static_cast<std::size_t>(dj) * (2 * w - 1) + di + w - 1] =
            -std::expm1(-2.0 * beta * std::max(0.0, couplings_.at(di, dj)));
  // rough cost model: a Poisson event costs ~5 uniform draws, a pair ~1
  direct_bonds_ = 0.5 * static_cast<double>(box.size()) < 5.0 * acc;
  for (const auto& f : field_.field) ghost_prob_.push_back(-std::expm1(-2.0 * beta * std::abs(f.value)));
}

ChainState make_state(const ChainTables& tables, SpinConfiguration initial, std::uint64_t seed) {
  if (!(initial.geometry() == tables.geometry()))
    throw ValidationError("initial configuration does not match the box");
  auto h = local_fields(tables.couplings(), initial, tables.field());
  const double e = total_energy(tables.couplings(), initial, tables.field());
  return ChainState{std::move(initial), e, Philox4x32(seed), 0, std::move(h)};
}

double recompute_energy(const ChainState& state, const ChainTables& tables) {
  return total_energy(tables.couplings(), state.sigma, tables.field());
}

namespace {

// h_y += 2 s_new J_xy for every y (the x term is J = 0).
void propagate_flip(ChainState& st, const CouplingTable& table, int ix, int jx, int s_new) {
  const BoxGeometry& box = table.geometry();
  const int w = box.width();
  const int h = box.height();
  const double c = 2.0 * s_new;
  double* field = st.local_field.data();
  for (int jy = 0; jy < h; ++jy) {
    const double* row = table.row(jy - jx);
    double* out = field + static_cast<std::size_t>(jy) * w;
    for (int iy = 0; iy < ix; ++iy) out[iy] += c * row[ix - iy];
    for (int iy = ix; iy < w; ++iy) out[iy] += c * row[iy - ix];
  }
}

struct DisjointSets {
  std::vector<std::uint32_t> parent;
  void reset(std::size_t n) {
    parent.resize(n);
    std::iota(parent.begin(), parent.end(), 0u);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // keep the larger index (the ghost is last) as root
    if (a > b) std::swap(a, b);
    parent[a] = b;
  }
};

double exponential(Philox4x32& rng) { return -std::log1p(-rng.uniform()); }

}  // namespace

void metropolis_sweep(ChainState& st, const ChainTables& tables) {
  const BoxGeometry& box = tables.geometry();
  const int w = box.width();
  const double beta = tables.beta();
  const std::size_t n = box.size();
  BitReservoir bits(st.rng);
  for (std::size_t x = 0; x < n; ++x) {
    const int s = st.sigma[x];
    const double de = 2.0 * s * st.local_field[x];
    // proposal picks the other value with prob 1/2, then Metropolis acceptance
    if (bits.bernoulli_below_half([&] { return de <= 0.0 ? 0.5 : 0.5 * std::exp(-beta * de); })) {
      st.sigma.flip(x);
      st.energy += de;
      propagate_flip(st, tables.couplings(), static_cast<int>(x % w), static_cast<int>(x / w), -s);
    }
  }
  ++st.sweep_count;
}

void cluster_update(ChainState& st, const ChainTables& tables) {
  if (!tables.field().bc.is_uniform())
    throw ValidationError("the cluster sampler requires plus or minus boundary conditions");
  const BoxGeometry& box = tables.geometry();
  const int w = box.width();
  const int hgt = box.height();
  const std::size_t n = box.size();
  const auto ghost = static_cast<std::uint32_t>(n);
  thread_local DisjointSets sets;
  thread_local std::vector<std::uint8_t> decision;
  sets.reset(n + 1);

  const auto& disp = tables.bond_displacements();
  const auto& cum = tables.bond_cumulative();
  const double total_rate = cum.empty() ? 0.0 : cum.back();
  BitReservoir bits(st.rng);

  for (std::size_t x = 0; x < n; ++x) {
    const int ix = static_cast<int>(x % w);
    const int jx = static_cast<int>(x / w);
    const int sx = st.sigma[x];
    // Events of a Poisson process of total rate sum_v 2 beta J_v; a bond
    // (x, x+v) is active iff at least one event lands on v.
    if (tables.direct_bonds()) {
      const std::int8_t* spins = st.sigma.spins().data();
      for (int jy = jx; jy < hgt; ++jy) {
        const double* prob = &tables.bond_probability(-ix, jy - jx);
        const int i0 = jy == jx ? ix + 1 : 0;
        const std::size_t base = static_cast<std::size_t>(jy) * w;
        for (int iy = i0; iy < w; ++iy) {
          if (spins[base + iy] != sx) continue;
          if (bits.bernoulli(prob[iy]))
            sets.unite(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(base + iy));
        }
      }
    } else if (total_rate > 0.0) {
      double t = exponential(st.rng);
      while (t < total_rate) {
        const double r = st.rng.uniform() * total_rate;
        auto it = std::upper_bound(cum.begin(), cum.end(), r);
        if (it == cum.end()) --it;
        const auto& v = disp[static_cast<std::size_t>(it - cum.begin())];
        const int iy = ix + v.di;
        const int jy = jx + v.dj;
        if (iy >= 0 && iy < w && jy < hgt) {
          const std::size_t y = static_cast<std::size_t>(jy) * w + iy;
          if (st.sigma[y] == sx)
            sets.unite(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y));
        }
        t += exponential(st.rng);
      }
    }
    // bond to the ghost spin, which sits at sign(f_x) with coupling |f_x|
    if (sx * tables.field()[x] > 0.0 && bits.bernoulli(tables.ghost_probability()[x]))
      sets.unite(static_cast<std::uint32_t>(x), ghost);
  }

  // 0 = undecided, 1 = keep, 2 = flip
  decision.assign(n + 1, 0);
  const std::uint32_t ghost_root = sets.find(ghost);
  decision[ghost_root] = 1;
  std::size_t flipped = 0;
  for (std::size_t x = 0; x < n; ++x) {
    const std::uint32_t r = sets.find(static_cast<std::uint32_t>(x));
    if (decision[r] == 0) decision[r] = bits.take(1) ? 2 : 1;
    if (decision[r] == 2) ++flipped;
  }

  // O(flips N) field update when cheaper than a full O(N^2) recompute
  if (flipped * 4 < n) {
    for (std::size_t x = 0; x < n; ++x)
      if (decision[sets.find(static_cast<std::uint32_t>(x))] == 2) {
        st.sigma.flip(x);
        propagate_flip(st, tables.couplings(), static_cast<int>(x % w), static_cast<int>(x / w), st.sigma[x]);
      }
  } else {
    for (std::size_t x = 0; x < n; ++x)
      if (decision[sets.find(static_cast<std::uint32_t>(x))] == 2) st.sigma.flip(x);
    st.local_field = local_fields(tables.couplings(), st.sigma, tables.field());
  }
  double e = 0.0;
  for (std::size_t x = 0; x < n; ++x) e += st.sigma[x] * (st.local_field[x] + tables.field()[x]);
  st.energy = -0.5 * e;
  ++st.sweep_count;
}

ChainResult run_chain(const RunPlan& plan, const ChainTables& tables,
                      std::span<const Observable> observables, const SampleVisitor& visit,
                      bool keep_samples) {
  plan.validate();
  if (!(tables.geometry() == plan.box) || !(tables.field().bc == plan.bc) ||
      !(tables.field().model == plan.model) || tables.beta() != plan.beta)
    throw ValidationError("chain tables do not match the run plan");

  ChainResult result{{}, make_state(tables, boundary_ground_state(plan.box, plan.bc), plan.seed),
                     std::string(Philox4x32::kName), "boundary_ground_state"};
  ChainState& st = result.final_state;
  auto step = [&] {
    if (plan.sampler == Sampler::Metropolis)
      metropolis_sweep(st, tables);
    else
      cluster_update(st, tables);
  };

  for (std::uint64_t s = 0; s < plan.burn_in_sweeps; ++s) step();
  if (keep_samples) result.samples.reserve(plan.n_samples);
  SampleRecord rec;
  rec.values.resize(observables.size());
  for (std::uint64_t k = 0; k < plan.n_samples; ++k) {
    for (std::uint64_t s = 0; s < plan.thinning_sweeps; ++s) step();
    rec.sweep = st.sweep_count;
    rec.energy = st.energy;
    for (std::size_t o = 0; o < observables.size(); ++o) rec.values[o] = observables[o].fn(st.sigma);
    if (visit) visit(rec, st.sigma);
    if (keep_samples) result.samples.push_back(rec);
  }

  const double exact = recompute_energy(st, tables);
  if (std::abs(exact - st.energy) > kEnergyCheckTolerance * std::max(1.0, std::abs(exact)))
    throw std::runtime_error("energy bookkeeping drifted: running " + std::to_string(st.energy) +
                             ", recomputed " + std::to_string(exact));
  return result;
}

ChainResult run_chain(const RunPlan& plan, std::span<const Observable> observables,
                      const SampleVisitor& visit, bool keep_samples) {
  plan.validate();
  const ChainTables tables(plan);
  return run_chain(plan, tables, observables, visit, keep_samples);
}

}  // namespace lrising::mc
