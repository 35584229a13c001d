#include "lrising/cli.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>

#include "lrising/enumerate.hpp"
#include "lrising/exactsum.hpp"
#include "lrising/harness.hpp"
#include "lrising/mc.hpp"
#include "lrising/observables.hpp"
#include "lrising/version.hpp"

namespace lrising::cli {

namespace {

struct ModelOpts {
  std::string kind = "isotropic";
  double alpha = 3.0;
  double alpha1 = 1.5;
  double alpha2 = 3.0;
  CouplingModel build() const {
    return harness::ModelSpec{kind, alpha, alpha1, alpha2}.build();
  }
};

struct BoxOpts {
  std::string shape = "centered";
  int L = 1;
  int M = -1;  // -1: same as L
  int center = 0;
  BoxGeometry build() const {
    harness::GeometrySpec g{shape, {L}, {M < 0 ? L : M}, center};
    return g.boxes().front();
  }
};

struct BcOpts {
  std::string kind = "plus";
  int h = 0;
  BoundaryCondition build() const { return harness::BcSpec{kind, h}.build(); }
};

void add_model(CLI::App* app, ModelOpts& m) {
  app->add_option("--model", m.kind, "isotropic | aniso_nn | biaxial | dyson_chain")
      ->capture_default_str();
  app->add_option("--alpha", m.alpha, "decay exponent (isotropic, dyson_chain)")->capture_default_str();
  app->add_option("--alpha1", m.alpha1, "row exponent (aniso_nn, biaxial)")->capture_default_str();
  app->add_option("--alpha2", m.alpha2, "column exponent (biaxial)")->capture_default_str();
}

void add_box(CLI::App* app, BoxOpts& b) {
  app->add_option("--shape", b.shape, "centered | interface_symmetric | row_centered")
      ->capture_default_str();
  app->add_option("--L", b.L, "horizontal half-size (columns -L..L)")->capture_default_str();
  app->add_option("--M", b.M, "vertical half-size (default: L)");
  app->add_option("--center", b.center, "interface height or centre row for the offset shapes")
      ->capture_default_str();
}

void add_bc(CLI::App* app, BcOpts& b) {
  app->add_option("--bc", b.kind, "plus | minus | dobrushin")->capture_default_str();
  app->add_option("--height", b.h, "Dobrushin height (+ on rows j >= h)")->capture_default_str();
}

std::ostream& full(std::ostream& os) {
  os << std::setprecision(17);
  return os;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Long-range Ising interface toolkit: certified lattice sums, exact enumeration, "
               "Monte Carlo experiments", "lrising"};
  app.set_version_flag("--version", std::string(kCodeVersion));
  app.require_subcommand(1);

  bool plot = false;
  auto plot_flag = [&](CLI::App* a) {
    a->add_flag("--emit-plot-data", plot, "print whitespace-separated columns for gnuplot");
  };

  // ---- exact-sum ----
  auto* exact = app.add_subcommand("exact-sum", "deterministic lattice sums with certified tails");
  exact->require_subcommand(1);

  double se_alpha = 2.5, se_tol = 1e-8;
  bool se_json = false;
  auto* step = exact->add_subcommand("step-energy", "half-line flip energy (undoubled diagonal series)");
  step->add_option("--alpha", se_alpha, "decay exponent, > 2")->required();
  step->add_option("--tol", se_tol, "tail tolerance")->capture_default_str();
  step->add_flag("--json", se_json, "print a JSON record");
  plot_flag(step);

  double sb_alpha = 3.5, sb_tol = 1e-9;
  std::vector<int> sb_L;
  bool sb_json = false;
  auto* shift = exact->add_subcommand("shift-bound", "D(L), energy cost of shifting a Dobrushin interface");
  shift->add_option("--alpha", sb_alpha, "isotropic decay exponent, > 2")->required();
  shift->add_option("--L", sb_L, "box half-sizes, comma separated")->required()->delimiter(',');
  shift->add_option("--tol", sb_tol, "tail tolerance")->capture_default_str();
  shift->add_flag("--json", sb_json, "print JSON records");
  plot_flag(shift);

  double re_alpha = 2.5, re_tol = 1e-8;
  std::vector<int> re_L;
  std::string re_ell = "L";
  bool re_json = false;
  auto* rel = exact->add_subcommand("rel-entropy-bound", "B(L, ell, alpha) relative-entropy bound");
  rel->add_option("--alpha", re_alpha, "isotropic decay exponent, > 2")->required();
  rel->add_option("--L", re_L, "box half-sizes, comma separated")->required()->delimiter(',');
  rel->add_option("--ell", re_ell, "near-field width: an integer >= 1, or L")->capture_default_str();
  rel->add_option("--tol", re_tol, "tail tolerance")->capture_default_str();
  rel->add_flag("--json", re_json, "print JSON records");
  plot_flag(rel);

  ModelOpts bf_model;
  BoxOpts bf_box;
  BcOpts bf_bc;
  double bf_eps = 1e-10;
  auto* bfield = exact->add_subcommand("boundary-field", "per-site field of the exterior spins");
  add_model(bfield, bf_model);
  add_box(bfield, bf_box);
  add_bc(bfield, bf_bc);
  bfield->add_option("--epsilon", bf_eps, "per-site tolerance")->capture_default_str();
  plot_flag(bfield);

  // ---- enumerate ----
  ModelOpts en_model;
  BoxOpts en_box;
  BcOpts en_bc;
  double en_beta = 1.0, en_eps = 1e-12;
  bool en_json = false;
  auto* en = app.add_subcommand("enumerate", "exact Gibbs distribution of a box with at most 20 sites");
  add_model(en, en_model);
  add_box(en, en_box);
  add_bc(en, en_bc);
  en->add_option("--beta", en_beta, "inverse temperature")->capture_default_str();
  en->add_option("--epsilon", en_eps, "boundary-field tolerance")->capture_default_str();
  en->add_flag("--json", en_json, "print a JSON summary");
  plot_flag(en);

  // ---- simulate ----
  std::string sim_config, sim_out;
  long long sim_max_new = -1;
  int sim_workers = 0;
  auto* sim = app.add_subcommand("simulate", "run an experiment described by a TOML file");
  sim->add_option("--config", sim_config, "experiment TOML")->required();
  sim->add_option("--out", sim_out, std::string("output root (default: $") + harness::kOutputRootEnv +
                                        " or ./out)");
  sim->add_option("--max-new-runs", sim_max_new, "stop after this many new runs");
  sim->add_option("--workers", sim_workers, "worker threads (0: hardware concurrency)");

  // ---- profile ----
  ModelOpts pr_model;
  BoxOpts pr_box;
  BcOpts pr_bc;
  double pr_beta = 1.0, pr_eps = 1e-10;
  std::uint64_t pr_seed = 1, pr_burn = 1000, pr_samples = 1000, pr_thin = 10, pr_batch = 0;
  std::string pr_sampler = "metropolis";
  bool pr_exact = false;
  auto* prof = app.add_subcommand("profile", "magnetization profile (CSV) and mirror residuals");
  add_model(prof, pr_model);
  add_box(prof, pr_box);
  add_bc(prof, pr_bc);
  prof->add_option("--beta", pr_beta, "inverse temperature")->capture_default_str();
  prof->add_option("--epsilon", pr_eps, "boundary-field tolerance")->capture_default_str();
  prof->add_option("--seed", pr_seed)->capture_default_str();
  prof->add_option("--burn-in", pr_burn)->capture_default_str();
  prof->add_option("--samples", pr_samples)->capture_default_str();
  prof->add_option("--thin", pr_thin)->capture_default_str();
  prof->add_option("--batch", pr_batch, "batch size for batch-means errors (0: naive)")->capture_default_str();
  prof->add_option("--sampler", pr_sampler, "metropolis | cluster")->capture_default_str();
  prof->add_flag("--exact", pr_exact, "use exact enumeration instead of Monte Carlo");
  plot_flag(prof);

  // ---- fluctuations ----
  std::string fl_config, fl_out, fl_obs = "mid_height";
  double fl_beta = std::nan("");
  int fl_resamples = observables::kBootstrapResamples;
  std::size_t fl_block = 1;
  std::uint64_t fl_seed = 1;
  auto* fl = app.add_subcommand("fluctuations", "interface height variance versus size from a finished experiment");
  fl->add_option("--config", fl_config, "experiment TOML (already simulated)")->required();
  fl->add_option("--out", fl_out, "output root override");
  fl->add_option("--beta", fl_beta, "which beta of the experiment (default: first)");
  fl->add_option("--observable", fl_obs)->capture_default_str();
  fl->add_option("--resamples", fl_resamples)->capture_default_str();
  fl->add_option("--block-length", fl_block, "moving-block bootstrap block length")->capture_default_str();
  fl->add_option("--seed", fl_seed, "bootstrap seed")->capture_default_str();
  plot_flag(fl);

  // ---- van-beijeren ----
  ModelOpts vb_model;
  vb_model.kind = "aniso_nn";
  int vb_L = 1, vb_M = 1, vb_chain = -1;
  double vb_beta = 1.0, vb_eps = 1e-10;
  std::string vb_mode = "exact";
  bool vb_explore = false;
  observables::McSettings vb_mc;
  auto* vb = app.add_subcommand("van-beijeren", "interface-row magnetization versus the 1D chain with + b.c.");
  add_model(vb, vb_model);
  vb->add_option("--L", vb_L, "2D box columns -L..L")->capture_default_str();
  vb->add_option("--M", vb_M, "2D box rows 1-M..1+M")->capture_default_str();
  vb->add_option("--chain-L", vb_chain, "chain sites -Lc..Lc (default: L)");
  vb->add_option("--beta", vb_beta)->capture_default_str();
  vb->add_option("--epsilon", vb_eps)->capture_default_str();
  vb->add_option("--mode", vb_mode, "exact | mc")->capture_default_str();
  vb->add_flag("--exploratory", vb_explore, "allow alpha1 outside (1, 2)");
  vb->add_option("--seed", vb_mc.seed)->capture_default_str();
  vb->add_option("--burn-in", vb_mc.burn_in_sweeps)->capture_default_str();
  vb->add_option("--samples", vb_mc.n_samples)->capture_default_str();
  vb->add_option("--thin", vb_mc.thinning_sweeps)->capture_default_str();
  vb->add_option("--batch", vb_mc.batch_size, "batch size for batch-means errors (0: naive)")->capture_default_str();
  plot_flag(vb);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    full(out);
    if (*step) {
      const auto v = exactsum::step_energy(se_alpha, se_tol);
      if (se_json) {
        auto rec = exactsum::certified_record("step_energy", {{"alpha", se_alpha}, {"tol", se_tol}}, v);
        rec["doubled_value"] = exactsum::kStepEnergyPrefactor * v.value;
        out << rec.dump(2) << "\n";
      } else if (plot) {
        out << "# alpha value tail_bound\n" << se_alpha << " " << v.value << " " << v.tail_bound << "\n";
      } else {
        out << "step_energy(alpha=" << se_alpha << ") = " << v.value << "\n"
            << "tail_bound = " << v.tail_bound << "\n"
            << "truncation_radius = " << v.truncation_radius << "\n"
            << "doubled (x" << exactsum::kStepEnergyPrefactor << ") = " << exactsum::kStepEnergyPrefactor * v.value
            << "\n";
      }
    } else if (*shift) {
      const auto model = CouplingModel::isotropic(sb_alpha);
      out << (plot ? "# L D tail_bound\n" : "L D(L) tail_bound truncation_radius\n");
      nlohmann::json recs = nlohmann::json::array();
      for (int L : sb_L) {
        const auto v = exactsum::shift_energy_bound(model, L, sb_tol);
        if (sb_json)
          recs.push_back(exactsum::certified_record("shift_energy_bound", {{"alpha", sb_alpha}, {"L", L}}, v));
        else if (plot)
          out << L << " " << v.value << " " << v.tail_bound << "\n";
        else
          out << L << " " << v.value << " " << v.tail_bound << " " << v.truncation_radius << "\n";
      }
      if (sb_json) out << recs.dump(2) << "\n";
    } else if (*rel) {
      const auto model = CouplingModel::isotropic(re_alpha);
      nlohmann::json recs = nlohmann::json::array();
      if (!re_json) out << (plot ? "# L ell B tail_bound\n" : "L ell B tail_bound\n");
      for (int L : re_L) {
        int ell = 0;
        if (re_ell == "L") {
          ell = L;
        } else {
          try {
            std::size_t pos = 0;
            ell = std::stoi(re_ell, &pos);
            if (pos != re_ell.size()) throw std::invalid_argument("trailing");
          } catch (const std::exception&) {
            throw ValidationError("--ell must be an integer or L");
          }
        }
        const auto v = exactsum::relative_entropy_bound(model, L, ell, exactsum::ProfileWeight::unit(), re_tol);
        if (re_json)
          recs.push_back(exactsum::certified_record("relative_entropy_bound",
                                                    {{"alpha", re_alpha}, {"L", L}, {"ell", ell}}, v));
        else
          out << L << " " << ell << " " << v.value << " " << v.tail_bound << "\n";
      }
      if (re_json) out << recs.dump(2) << "\n";
    } else if (*bfield) {
      const auto t = exactsum::boundary_field(bf_model.build(), bf_box.build(), bf_bc.build(), bf_eps);
      out << (plot ? "# i j field tail_bound\n" : "i j field tail_bound\n");
      for (std::size_t k = 0; k < t.geometry.size(); ++k) {
        const Site s = t.geometry.site(k);
        out << s.i << " " << s.j << " " << t.field[k].value << " " << t.field[k].tail_bound << "\n";
      }
    } else if (*en) {
      const auto g = enumerate::build_exact(en_model.build(), en_box.build(), en_bc.build(), en_beta, en_eps);
      const auto m = enumerate::exact_magnetization(g);
      if (en_json) {
        nlohmann::json j{{"schema_version", kSchemaVersion},
                         {"model", g.model.describe()},
                         {"geometry", g.geometry.label()},
                         {"bc", g.bc.describe()},
                         {"beta", g.beta},
                         {"log_partition", g.log_partition},
                         {"magnetization", m}};
        out << j.dump(2) << "\n";
      } else {
        if (!plot)
          out << "# " << g.model.describe() << " " << g.geometry.label() << " " << g.bc.describe()
              << " beta=" << g.beta << " log Z=" << g.log_partition << "\n";
        out << "# i j <sigma>\n";
        for (std::size_t k = 0; k < m.size(); ++k) {
          const Site s = g.geometry.site(k);
          out << s.i << " " << s.j << " " << m[k] << "\n";
        }
      }
    } else if (*sim) {
      const auto spec = harness::load_spec(sim_config);
      harness::RunOptions opt;
      if (!sim_out.empty()) opt.root = sim_out;
      if (sim_max_new >= 0) opt.max_new_runs = static_cast<std::size_t>(sim_max_new);
      if (sim_workers > 0) opt.workers = sim_workers;
      const auto r = harness::run_experiment(spec, opt);
      out << "experiment " << spec.name << ": " << r.completed_runs << "/" << r.total_runs
          << " runs complete (" << r.new_runs << " new, " << r.skipped_runs << " already done)\n"
          << "manifest: " << r.manifest_path.string() << "\n";
    } else if (*prof) {
      const auto model = pr_model.build();
      const auto box = pr_box.build();
      const auto bc = pr_bc.build();
      auto measure = [&] {
        if (pr_exact) return observables::exact_profile(enumerate::build_exact(model, box, bc, pr_beta, pr_eps));
        mc::RunPlan plan{model, box, bc, pr_beta, pr_seed, pr_burn, pr_samples, pr_thin, pr_eps,
                         mc::sampler_from_string(pr_sampler)};
        observables::ProfileAccumulator acc(box, pr_batch);
        mc::run_chain(plan, {}, [&](const mc::SampleRecord&, const SpinConfiguration& c) { acc.add(c); }, false);
        return acc.finish();
      };
      const auto p = measure();
      if (plot) {
        out << "# i j mean std_error\n";
        for (std::size_t k = 0; k < box.size(); ++k) {
          const Site s = box.site(k);
          out << s.i << " " << s.j << " " << p.mean[k] << " " << p.std_error[k] << "\n";
        }
      } else {
        out << observables::profile_csv(p);
      }
      if (!bc.is_uniform() && box.j_min() + box.j_max() == 2 * bc.height() - 1) {
        const auto a = observables::antisymmetry_residual(p, bc.height());
        out << "# antisymmetry max_abs_residual=" << a.max_abs_residual << " max_ratio=" << a.max_ratio << "\n";
      }
    } else if (*fl) {
      const auto spec = harness::load_spec(fl_config);
      const double beta = std::isnan(fl_beta) ? spec.mc.betas.front() : fl_beta;
      std::optional<std::filesystem::path> root;
      if (!fl_out.empty()) root = fl_out;
      const auto table = harness::size_table(spec, beta, fl_obs, root);
      const auto rep = observables::interface_fluctuations(table, fl_seed, fl_resamples, fl_block);
      out << "# size n_samples variance bootstrap_error ci_low ci_high\n";
      for (const auto& f : rep.sizes)
        out << f.size << " " << f.n_samples << " " << f.variance << " " << f.bootstrap_error << " " << f.ci_low
            << " " << f.ci_high << "\n";
      if (rep.slope)
        out << "# log-log slope = " << *rep.slope << "\n";
      else
        out << "# degenerate (zero variance): slope undefined\n";
      out << "# strictly increasing with separated intervals: "
          << (rep.strictly_increasing_separated() ? "yes" : "no") << "\n";
    } else if (*vb) {
      observables::VanBeijerenSetup setup{vb_model.build(), vb_L, vb_M, vb_chain < 0 ? vb_L : vb_chain,
                                          vb_beta, vb_eps, !vb_explore};
      observables::VanBeijerenReport r;
      if (vb_mode == "exact")
        r = observables::van_beijeren_exact(setup);
      else if (vb_mode == "mc")
        r = observables::van_beijeren_mc(setup, vb_mc);
      else
        throw ValidationError("--mode must be exact or mc");
      if (vb_explore) err << "warning: exploratory mode, alpha1 outside (1, 2) gives no guarantee\n";
      out << "# i lhs lhs_error rhs rhs_error margin margin_error\n";
      for (std::size_t k = 0; k < r.columns.size(); ++k)
        out << r.columns[k] << " " << r.lhs[k] << " " << r.lhs_error[k] << " " << r.rhs[k] << " " << r.rhs_error[k]
            << " " << r.margin[k] << " " << r.margin_error[k] << "\n";
      out << "# min_margin = " << r.min_margin << "\n";
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const exactsum::DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace lrising::cli
