#pragma once

// Markov chain samplers for the finite-volume Gibbs measure
// mu(sigma) ~ exp(-beta E(sigma | omega)).
//
//  - metropolis_sweep: one proposal per site in row-major order.  The proposal
//    draws a fresh uniform spin value, so the move is a flip with probability
//    1/2 times the Metropolis acceptance min(1, e^{-beta dE}).  At beta = 0
//    each sweep therefore resamples every site uniformly.
//  - cluster_update: Swendsen-Wang with a ghost spin carrying the boundary
//    field; long-range bonds are activated with the Poisson-process trick so
//    one update costs O(N * sum_v 2 beta J_v) rather than O(N^2).  Boxes where
//    the pair count is below the expected event count visit pairs directly.
//    Uniform boundary conditions only.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lrising/kernel.hpp"
#include "lrising/rng.hpp"

namespace lrising::mc {

enum class Sampler { Metropolis, Cluster };
std::string to_string(Sampler s);
Sampler sampler_from_string(const std::string& s);

struct RunPlan {
  CouplingModel model;
  BoxGeometry box;
  BoundaryCondition bc;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t burn_in_sweeps = 0;
  std::uint64_t n_samples = 1;
  std::uint64_t thinning_sweeps = 1;
  double field_epsilon = 1e-10;
  Sampler sampler = Sampler::Metropolis;

  void validate() const;
};

/// Read-only tables for one (model, box, bc, beta); shareable across chains.
class ChainTables {
 public:
  ChainTables(const CouplingModel& model, const BoxGeometry& box, const BoundaryCondition& bc,
              double beta, double field_epsilon);
  explicit ChainTables(const RunPlan& plan)
      : ChainTables(plan.model, plan.box, plan.bc, plan.beta, plan.field_epsilon) {}

  const CouplingTable& couplings() const { return couplings_; }
  const BoundaryFieldTable& field() const { return field_; }
  const BoxGeometry& geometry() const { return couplings_.geometry(); }
  double beta() const { return beta_; }

  // Half-space displacements with positive coupling and the cumulative bond
  // rates 2 beta J over them (used by the cluster sampler).
  struct Displacement {
    int di;
    int dj;
  };
  const std::vector<Displacement>& bond_displacements() const { return bond_disp_; }
  const std::vector<double>& bond_cumulative() const { return bond_cum_; }
  // 1 - e^{-2 beta J} for half-space displacements, index dj (2w - 1) + di + w - 1.
  const double& bond_probability(int di, int dj) const {
    return bond_prob_[static_cast<std::size_t>(dj) * (2 * geometry().width() - 1) + di + geometry().width() - 1];
  }
  // Small boxes: visit pairs directly instead of running the Poisson process.
  bool direct_bonds() const { return direct_bonds_; }
  // 1 - e^{-2 beta |f_x|} per site
  const std::vector<double>& ghost_probability() const { return ghost_prob_; }

 private:
  CouplingTable couplings_;
  BoundaryFieldTable field_;
  double beta_;
  std::vector<Displacement> bond_disp_;
  std::vector<double> bond_cum_;
  std::vector<double> bond_prob_;
  bool direct_bonds_ = false;
  std::vector<double> ghost_prob_;
};

struct ChainState {
  SpinConfiguration sigma;
  double energy;                    // running total
  Philox4x32 rng;
  std::uint64_t sweep_count = 0;
  std::vector<double> local_field;  // h_x = sum_y J_xy s_y + f_x
};

ChainState make_state(const ChainTables& tables, SpinConfiguration initial, std::uint64_t seed);

/// total_energy recomputed from scratch.
double recompute_energy(const ChainState& state, const ChainTables& tables);

void metropolis_sweep(ChainState& state, const ChainTables& tables);

/// Throws ValidationError under Dobrushin boundary conditions.
void cluster_update(ChainState& state, const ChainTables& tables);

struct Observable {
  std::string name;
  std::function<double(const SpinConfiguration&)> fn;
};

struct SampleRecord {
  std::uint64_t sweep = 0;
  double energy = 0.0;
  std::vector<double> values;  // one per observable, same order
};

struct ChainResult {
  std::vector<SampleRecord> samples;
  ChainState final_state;
  std::string generator;
  std::string initial_configuration;
};

using SampleVisitor = std::function<void(const SampleRecord&, const SpinConfiguration&)>;

/// Burn-in, then n_samples records each separated by thinning_sweeps updates.
/// Starts from boundary_ground_state(box, bc).  When keep_samples is false the
/// records are only passed to `visit`.  Throws std::runtime_error if the
/// running energy drifts from the recomputed one by more than 1e-6 relative.
ChainResult run_chain(const RunPlan& plan, const ChainTables& tables,
                      std::span<const Observable> observables, const SampleVisitor& visit = {},
                      bool keep_samples = true);
ChainResult run_chain(const RunPlan& plan, std::span<const Observable> observables,
                      const SampleVisitor& visit = {}, bool keep_samples = true);

/// Relative tolerance of the energy bookkeeping check.
inline constexpr double kEnergyCheckTolerance = 1e-6;

}  // namespace lrising::mc
