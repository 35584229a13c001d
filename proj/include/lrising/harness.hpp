#pragma once

// Experiment orchestration: TOML experiment specs, run scheduling over
// (geometry, beta, seed) triples, atomic persistence and manifest-driven
// resume.
//
// Output layout under <root>/<name>/:
//   manifest.json
//   <geometry label>/<beta>/<seed>/samples.jsonl
//   <geometry label>/<beta>/<seed>/summary.json
//   <geometry label>/<beta>/<seed>/profile.csv      (when [mc].profile = true)

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrising/kernel.hpp"
#include "lrising/mc.hpp"
#include "lrising/observables.hpp"

namespace lrising::harness {

/// Name of the environment variable holding the default output root.
inline constexpr const char* kOutputRootEnv = "LRISING_OUT";

/// LRISING_OUT if set and non-empty, else "out".
std::filesystem::path default_output_root();

struct ModelSpec {
  std::string kind = "isotropic";  // isotropic | aniso_nn | biaxial | dyson_chain
  double alpha = 3.0;              // isotropic, dyson_chain
  double alpha1 = 1.5;             // aniso_nn, biaxial
  double alpha2 = 3.0;             // biaxial
  CouplingModel build() const;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct GeometrySpec {
  std::string shape = "centered";  // centered | interface_symmetric | row_centered
  std::vector<int> L;
  std::vector<int> M;  // empty: M = L
  int center = 0;      // interface height (interface_symmetric) or centre row (row_centered)
  std::vector<BoxGeometry> boxes() const;
  friend bool operator==(const GeometrySpec&, const GeometrySpec&) = default;
};

struct BcSpec {
  std::string kind = "plus";  // plus | minus | dobrushin
  int height = 0;
  BoundaryCondition build() const;
  friend bool operator==(const BcSpec&, const BcSpec&) = default;
};

struct McSpec {
  std::string sampler = "metropolis";
  std::vector<double> betas;
  std::vector<std::uint64_t> seeds;
  std::uint64_t burn_in_sweeps = 0;
  std::uint64_t n_samples = 1;
  std::uint64_t thinning_sweeps = 1;
  double field_epsilon = 1e-10;
  std::vector<std::string> observables{"magnetization"};  // magnetization | mid_height
  bool profile = false;
  friend bool operator==(const McSpec&, const McSpec&) = default;
};

struct OutputSpec {
  std::string root;  // empty: default_output_root()
  int workers = 0;   // 0: hardware concurrency
  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct ExperimentSpec {
  std::string name;
  ModelSpec model;
  GeometrySpec geometry;
  BcSpec bc;
  McSpec mc;
  OutputSpec output;

  /// Field-precise ValidationError on failure, e.g. "mc.betas[1]: ...".
  void validate() const;
  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

ExperimentSpec parse_spec(const std::string& toml_text, const std::string& source = "<string>");
ExperimentSpec load_spec(const std::filesystem::path& path);
std::string to_toml(const ExperimentSpec& spec);

/// SHA-256 of the canonical TOML of everything that affects results (the
/// [output] section is excluded).
std::string config_hash(const ExperimentSpec& spec);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Writes via a temporary file in the same directory and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// Directory name used for a beta value (shortest round-trip decimal).
std::string beta_label(double beta);

struct RunKey {
  std::size_t geometry_index = 0;
  double beta = 0.0;
  std::uint64_t seed = 0;
};

struct RunOptions {
  std::optional<std::filesystem::path> root;  // overrides spec.output.root
  std::optional<std::size_t> max_new_runs;    // stop after this many new runs
  std::optional<int> workers;
};

struct ExperimentResult {
  std::filesystem::path experiment_dir;
  std::filesystem::path manifest_path;
  std::size_t total_runs = 0;
  std::size_t completed_runs = 0;  // after this call
  std::size_t new_runs = 0;        // executed by this call
  std::size_t skipped_runs = 0;    // already complete and verified
};

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

/// Experiment directory for a spec and optional root override.
std::filesystem::path experiment_dir(const ExperimentSpec& spec,
                                     const std::optional<std::filesystem::path>& root = {});

/// Reads a completed experiment back as one height series per geometry (in
/// spec order) for the given beta, concatenating seeds in spec order.
std::vector<observables::SizeSeries> size_table(const ExperimentSpec& spec, double beta,
                                                const std::string& observable = "mid_height",
                                                const std::optional<std::filesystem::path>& root = {});

/// Observable objects for the names in [mc].observables.
std::vector<mc::Observable> make_observables(const ExperimentSpec& spec);

}  // namespace lrising::harness
