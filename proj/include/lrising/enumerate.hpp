#pragma once

// Exact finite-volume Gibbs distributions by exhaustive enumeration.
//
// State s in [0, 2^N) encodes a configuration with bit k set iff the spin at
// box index k (row-major from (i_min, j_min)) is +1.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lrising/kernel.hpp"

namespace lrising::enumerate {

inline constexpr std::size_t kMaxSites = 20;

struct ExactGibbs {
  BoxGeometry geometry;
  double beta;
  CouplingModel model;
  BoundaryCondition bc;
  BoundaryFieldTable field;
  std::vector<double> energies;  // total_energy per state
  std::vector<double> weights;   // normalized Boltzmann weights
  double log_partition = 0.0;    // log Z

  std::size_t num_sites() const { return geometry.size(); }
  std::size_t num_states() const { return weights.size(); }
  SpinConfiguration configuration(std::uint32_t state) const;
};

inline int spin_of(std::uint32_t state, std::size_t k) { return (state >> k) & 1u ? +1 : -1; }
std::uint32_t state_of(const SpinConfiguration& sigma);

/// Throws ValidationError for boxes above kMaxSites, beta < 0 or epsilon <= 0.
ExactGibbs build_exact(const CouplingModel& model, const BoxGeometry& box,
                       const BoundaryCondition& bc, double beta, double epsilon);

double exact_expectation(const ExactGibbs& g, const std::function<double(const SpinConfiguration&)>& f);

/// <sigma_x> for every site.
std::vector<double> exact_magnetization(const ExactGibbs& g);

/// <prod_{k in A} sigma_k> for a set of box indices.
double exact_correlation(const ExactGibbs& g, std::span<const std::size_t> sites);

/// Weight vector after resampling site k from its conditional law given the
/// rest.  The conditional is computed from the local field directly, not from
/// the stored weights.
std::vector<double> resample_site(const ExactGibbs& g, std::size_t k);

double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace lrising::enumerate
