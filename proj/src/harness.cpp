#include "lrising/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <toml.hpp>

#include "lrising/rng.hpp"
#include "lrising/version.hpp"

namespace fs = std::filesystem;

namespace lrising::harness {

fs::path default_output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  if (env != nullptr && *env != '\0') return fs::path(env);
  return fs::path("out");
}

// --- spec pieces -------------------------------------------------------------

CouplingModel ModelSpec::build() const {
  if (kind == "isotropic") return CouplingModel::isotropic(alpha);
  if (kind == "aniso_nn") return CouplingModel::aniso_nn(alpha1);
  if (kind == "biaxial") return CouplingModel::biaxial(alpha1, alpha2);
  if (kind == "dyson_chain") return CouplingModel::dyson_chain(alpha);
  throw ValidationError("model.kind: unknown model '" + kind + "'");
}

std::vector<BoxGeometry> GeometrySpec::boxes() const {
  std::vector<BoxGeometry> out;
  for (std::size_t k = 0; k < L.size(); ++k) {
    const int m = M.empty() ? L[k] : M[k];
    if (shape == "centered")
      out.push_back(BoxGeometry::centered(L[k], m));
    else if (shape == "interface_symmetric")
      out.push_back(BoxGeometry::interface_symmetric(L[k], m, center));
    else if (shape == "row_centered")
      out.push_back(BoxGeometry::row_centered(L[k], m, center));
    else
      throw ValidationError("geometry.shape: unknown shape '" + shape + "'");
  }
  return out;
}

BoundaryCondition BcSpec::build() const {
  if (kind == "plus") return BoundaryCondition::plus();
  if (kind == "minus") return BoundaryCondition::minus();
  if (kind == "dobrushin") return BoundaryCondition::dobrushin(height);
  throw ValidationError("bc.kind: unknown boundary condition '" + kind + "'");
}

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ValidationError(field + ": " + what);
}

void rethrow_as(const std::string& field, const auto& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    if (msg.rfind(field, 0) == 0) throw;
    field_error(field, msg);
  }
}

}  // namespace

void ExperimentSpec::validate() const {
  if (name.empty()) field_error("name", "must be a non-empty string");
  if (name.find_first_of("/\\") != std::string::npos || name == "." || name == "..")
    field_error("name", "must be usable as a directory name");
  rethrow_as("model", [&] { (void)model.build(); });
  if (geometry.L.empty()) field_error("geometry.L", "needs at least one size");
  for (std::size_t k = 0; k < geometry.L.size(); ++k)
    if (geometry.L[k] < 0) field_error("geometry.L[" + std::to_string(k) + "]", "must be >= 0");
  if (!geometry.M.empty() && geometry.M.size() != geometry.L.size())
    field_error("geometry.M", "must be empty or have the same length as geometry.L");
  rethrow_as("geometry", [&] { (void)geometry.boxes(); });
  {
    std::set<std::string> labels;
    for (const auto& b : geometry.boxes())
      if (!labels.insert(b.label()).second) field_error("geometry", "duplicate box " + b.label());
  }
  rethrow_as("bc", [&] { (void)bc.build(); });
  rethrow_as("mc.sampler", [&] { (void)mc::sampler_from_string(mc.sampler); });
  if (mc.sampler == "cluster" && bc.kind == "dobrushin")
    field_error("mc.sampler", "the cluster sampler requires plus or minus boundary conditions");
  if (mc.betas.empty()) field_error("mc.betas", "needs at least one value");
  for (std::size_t k = 0; k < mc.betas.size(); ++k)
    if (!(mc.betas[k] >= 0.0) || !std::isfinite(mc.betas[k]))
      field_error("mc.betas[" + std::to_string(k) + "]", "must be finite and >= 0");
  if (std::set<double>(mc.betas.begin(), mc.betas.end()).size() != mc.betas.size())
    field_error("mc.betas", "values must be distinct");
  if (mc.seeds.empty()) field_error("mc.seeds", "needs at least one seed");
  if (std::set<std::uint64_t>(mc.seeds.begin(), mc.seeds.end()).size() != mc.seeds.size())
    field_error("mc.seeds", "values must be distinct");
  if (mc.n_samples < 1) field_error("mc.n_samples", "must be >= 1");
  if (mc.thinning_sweeps < 1) field_error("mc.thinning_sweeps", "must be >= 1");
  if (!(mc.field_epsilon > 0.0)) field_error("mc.field_epsilon", "must be > 0");
  for (std::size_t k = 0; k < mc.observables.size(); ++k) {
    const auto& o = mc.observables[k];
    if (o != "magnetization" && o != "mid_height")
      field_error("mc.observables[" + std::to_string(k) + "]", "unknown observable '" + o + "'");
    if (o == "mid_height")
      for (const auto& b : geometry.boxes())
        if (b.i_min() > 0 || b.i_max() < 0)
          field_error("mc.observables[" + std::to_string(k) + "]", "box " + b.label() + " has no column 0");
  }
  if (output.workers < 0) field_error("output.workers", "must be >= 0");
}

// --- TOML --------------------------------------------------------------------

namespace {

using Keys = std::set<std::string>;

void reject_unknown(const toml::table& t, const std::string& where, const Keys& allowed) {
  for (const auto& [k, v] : t) {
    (void)v;
    const std::string key(k.str());
    if (!allowed.contains(key))
      field_error(where.empty() ? key : where + "." + key, "unknown key");
  }
}

const toml::table* section(const toml::table& root, const std::string& name, bool required) {
  const toml::node* n = root.get(name);
  if (n == nullptr) {
    if (required) field_error(name, "missing section");
    return nullptr;
  }
  if (!n->is_table()) field_error(name, "must be a table");
  return n->as_table();
}

std::optional<std::string> get_string(const toml::table* t, const std::string& where, const std::string& key) {
  if (t == nullptr) return std::nullopt;
  const toml::node* n = t->get(key);
  if (n == nullptr) return std::nullopt;
  if (auto v = n->value_exact<std::string>()) return *v;
  field_error(where + "." + key, "must be a string");
}

std::optional<double> get_double(const toml::table* t, const std::string& where, const std::string& key) {
  if (t == nullptr) return std::nullopt;
  const toml::node* n = t->get(key);
  if (n == nullptr) return std::nullopt;
  if (n->is_floating_point() || n->is_integer()) return n->value<double>();
  field_error(where + "." + key, "must be a number");
}

std::optional<std::int64_t> get_int(const toml::table* t, const std::string& where, const std::string& key) {
  if (t == nullptr) return std::nullopt;
  const toml::node* n = t->get(key);
  if (n == nullptr) return std::nullopt;
  if (auto v = n->value_exact<std::int64_t>()) return *v;
  field_error(where + "." + key, "must be an integer");
}

std::optional<bool> get_bool(const toml::table* t, const std::string& where, const std::string& key) {
  if (t == nullptr) return std::nullopt;
  const toml::node* n = t->get(key);
  if (n == nullptr) return std::nullopt;
  if (auto v = n->value_exact<bool>()) return *v;
  field_error(where + "." + key, "must be a boolean");
}

template <class T, class Get>
std::optional<std::vector<T>> get_array(const toml::table* t, const std::string& where,
                                        const std::string& key, Get get_elem) {
  if (t == nullptr) return std::nullopt;
  const toml::node* n = t->get(key);
  if (n == nullptr) return std::nullopt;
  std::vector<T> out;
  const std::string field = where + "." + key;
  if (const toml::array* a = n->as_array()) {
    for (std::size_t k = 0; k < a->size(); ++k)
      out.push_back(get_elem(*a->get(k), field + "[" + std::to_string(k) + "]"));
  } else {
    // a scalar is accepted as a one-element list
    out.push_back(get_elem(*n, field));
  }
  return out;
}

double elem_double(const toml::node& n, const std::string& field) {
  if (n.is_floating_point() || n.is_integer()) return *n.value<double>();
  field_error(field, "must be a number");
}

std::int64_t elem_int(const toml::node& n, const std::string& field) {
  if (auto v = n.value_exact<std::int64_t>()) return *v;
  field_error(field, "must be an integer");
}

std::string elem_string(const toml::node& n, const std::string& field) {
  if (auto v = n.value_exact<std::string>()) return *v;
  field_error(field, "must be a string");
}

std::uint64_t nonneg(std::int64_t v, const std::string& field) {
  if (v < 0) field_error(field, "must be >= 0");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

ExperimentSpec parse_spec(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
       << e.description();
    throw ValidationError(os.str());
  }
  reject_unknown(root, "", {"name", "model", "geometry", "bc", "mc", "output"});

  ExperimentSpec s;
  {
    const toml::node* n = root.get("name");
    if (n == nullptr) field_error("name", "missing");
    if (auto v = n->value_exact<std::string>())
      s.name = *v;
    else
      field_error("name", "must be a string");
  }

  const toml::table* model = section(root, "model", true);
  reject_unknown(*model, "model", {"kind", "alpha", "alpha1", "alpha2"});
  if (auto v = get_string(model, "model", "kind")) s.model.kind = *v;
  else field_error("model.kind", "missing");
  if (auto v = get_double(model, "model", "alpha")) s.model.alpha = *v;
  if (auto v = get_double(model, "model", "alpha1")) s.model.alpha1 = *v;
  if (auto v = get_double(model, "model", "alpha2")) s.model.alpha2 = *v;

  const toml::table* geo = section(root, "geometry", true);
  reject_unknown(*geo, "geometry", {"shape", "L", "M", "center"});
  if (auto v = get_string(geo, "geometry", "shape")) s.geometry.shape = *v;
  auto as_ints = [](std::vector<std::int64_t> v, const std::string& field) {
    std::vector<int> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (v[k] < -(1 << 20) || v[k] > (1 << 20)) field_error(field + "[" + std::to_string(k) + "]", "out of range");
      out.push_back(static_cast<int>(v[k]));
    }
    return out;
  };
  if (auto v = get_array<std::int64_t>(geo, "geometry", "L", elem_int)) s.geometry.L = as_ints(*v, "geometry.L");
  else field_error("geometry.L", "missing");
  if (auto v = get_array<std::int64_t>(geo, "geometry", "M", elem_int)) s.geometry.M = as_ints(*v, "geometry.M");
  if (auto v = get_int(geo, "geometry", "center")) s.geometry.center = static_cast<int>(*v);

  const toml::table* bc = section(root, "bc", true);
  reject_unknown(*bc, "bc", {"kind", "height"});
  if (auto v = get_string(bc, "bc", "kind")) s.bc.kind = *v;
  else field_error("bc.kind", "missing");
  if (auto v = get_int(bc, "bc", "height")) s.bc.height = static_cast<int>(*v);

  const toml::table* mct = section(root, "mc", true);
  reject_unknown(*mct, "mc", {"sampler", "betas", "seeds", "burn_in_sweeps", "n_samples",
                              "thinning_sweeps", "field_epsilon", "observables", "profile"});
  if (auto v = get_string(mct, "mc", "sampler")) s.mc.sampler = *v;
  if (auto v = get_array<double>(mct, "mc", "betas", elem_double)) s.mc.betas = *v;
  else field_error("mc.betas", "missing");
  if (auto v = get_array<std::int64_t>(mct, "mc", "seeds", elem_int)) {
    for (std::size_t k = 0; k < v->size(); ++k)
      s.mc.seeds.push_back(nonneg((*v)[k], "mc.seeds[" + std::to_string(k) + "]"));
  } else {
    field_error("mc.seeds", "missing");
  }
  if (auto v = get_int(mct, "mc", "burn_in_sweeps")) s.mc.burn_in_sweeps = nonneg(*v, "mc.burn_in_sweeps");
  if (auto v = get_int(mct, "mc", "n_samples")) s.mc.n_samples = nonneg(*v, "mc.n_samples");
  if (auto v = get_int(mct, "mc", "thinning_sweeps")) s.mc.thinning_sweeps = nonneg(*v, "mc.thinning_sweeps");
  if (auto v = get_double(mct, "mc", "field_epsilon")) s.mc.field_epsilon = *v;
  if (auto v = get_array<std::string>(mct, "mc", "observables", elem_string)) s.mc.observables = *v;
  if (auto v = get_bool(mct, "mc", "profile")) s.mc.profile = *v;

  if (const toml::table* out = section(root, "output", false)) {
    reject_unknown(*out, "output", {"root", "workers"});
    if (auto v = get_string(out, "output", "root")) s.output.root = *v;
    if (auto v = get_int(out, "output", "workers")) {
      if (*v < 0 || *v > 1024) field_error("output.workers", "must be in 0..1024");
      s.output.workers = static_cast<int>(*v);
    }
  }

  s.validate();
  return s;
}

ExperimentSpec load_spec(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_spec(os.str(), path.string());
}

namespace {

toml::table spec_table(const ExperimentSpec& s, bool with_output) {
  auto ints = [](const std::vector<int>& v) {
    toml::array a;
    for (int x : v) a.push_back(static_cast<std::int64_t>(x));
    return a;
  };
  toml::table model{{"kind", s.model.kind}};
  if (s.model.kind == "isotropic" || s.model.kind == "dyson_chain") model.insert("alpha", s.model.alpha);
  if (s.model.kind == "aniso_nn" || s.model.kind == "biaxial") model.insert("alpha1", s.model.alpha1);
  if (s.model.kind == "biaxial") model.insert("alpha2", s.model.alpha2);

  toml::table geo{{"shape", s.geometry.shape}, {"L", ints(s.geometry.L)}, {"center", s.geometry.center}};
  if (!s.geometry.M.empty()) geo.insert("M", ints(s.geometry.M));

  toml::table bc{{"kind", s.bc.kind}};
  if (s.bc.kind == "dobrushin") bc.insert("height", s.bc.height);

  toml::array betas, seeds, obs;
  for (double b : s.mc.betas) betas.push_back(b);
  for (auto x : s.mc.seeds) seeds.push_back(static_cast<std::int64_t>(x));
  for (const auto& o : s.mc.observables) obs.push_back(o);
  toml::table mct{{"sampler", s.mc.sampler},
                  {"betas", betas},
                  {"seeds", seeds},
                  {"burn_in_sweeps", static_cast<std::int64_t>(s.mc.burn_in_sweeps)},
                  {"n_samples", static_cast<std::int64_t>(s.mc.n_samples)},
                  {"thinning_sweeps", static_cast<std::int64_t>(s.mc.thinning_sweeps)},
                  {"field_epsilon", s.mc.field_epsilon},
                  {"observables", obs},
                  {"profile", s.mc.profile}};

  toml::table root{{"name", s.name}, {"model", model}, {"geometry", geo}, {"bc", bc}, {"mc", mct}};
  if (with_output) {
    toml::table out{{"workers", s.output.workers}};
    if (!s.output.root.empty()) out.insert("root", s.output.root);
    root.insert("output", out);
  }
  return root;
}

std::string render(const toml::table& t) {
  std::ostringstream os;
  os << toml::toml_formatter(t, toml::format_flags::none) << "\n";
  return os.str();
}

}  // namespace

std::string to_toml(const ExperimentSpec& spec) { return render(spec_table(spec, true)); }

std::string config_hash(const ExperimentSpec& spec) { return sha256_hex(render(spec_table(spec, false))); }

// --- hashing and files ----------------------------------------------------------

namespace {

std::string hex(const unsigned char* p, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string s(2 * n, '0');
  for (unsigned k = 0; k < n; ++k) {
    s[2 * k] = digits[p[k] >> 4];
    s[2 * k + 1] = digits[p[k] & 15];
  }
  return s;
}

struct Sha256 {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  Sha256() {
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("SHA-256 initialisation failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  void update(const char* p, std::size_t n) {
    if (EVP_DigestUpdate(ctx, p, n) != 1) throw std::runtime_error("SHA-256 update failed");
  }
  std::string finish() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (EVP_DigestFinal_ex(ctx, md, &len) != 1) throw std::runtime_error("SHA-256 finalisation failed");
    return hex(md, len);
  }
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.finish();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.finish();
}

void write_atomic(const fs::path& path, const std::string& contents) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string beta_label(double beta) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, beta);
  if (ec != std::errc()) throw std::runtime_error("cannot format beta");
  return "beta" + std::string(buf, end);
}

// --- running --------------------------------------------------------------------

fs::path experiment_dir(const ExperimentSpec& spec, const std::optional<fs::path>& root) {
  fs::path r = root ? *root : (spec.output.root.empty() ? default_output_root() : fs::path(spec.output.root));
  return r / spec.name;
}

std::vector<mc::Observable> make_observables(const ExperimentSpec& spec) {
  std::vector<mc::Observable> out;
  const int ref = spec.bc.kind == "dobrushin" ? spec.bc.height : 0;
  for (const auto& name : spec.mc.observables) {
    if (name == "magnetization") {
      out.push_back(observables::magnetization_observable());
    } else if (name == "mid_height") {
      auto o = observables::column_height_observable(0, ref);
      o.name = "mid_height";
      out.push_back(std::move(o));
    } else {
      throw ValidationError("mc.observables: unknown observable '" + name + "'");
    }
  }
  return out;
}

namespace {

struct Task {
  std::size_t g;
  double beta;
  std::uint64_t seed;
  std::string rel;  // <geometry>/<beta>/<seed>
};

struct RunFiles {
  std::map<std::string, std::string> hashes;  // file name -> sha256
};

struct MeanAcc {
  double sum = 0.0, sum2 = 0.0;
  std::uint64_t n = 0;
  void add(double x) {
    sum += x;
    sum2 += x * x;
    ++n;
  }
  nlohmann::json json() const {
    const double dn = static_cast<double>(n);
    const double mean = sum / dn;
    const double var = n > 1 ? std::max(0.0, (sum2 - dn * mean * mean) / (dn - 1.0)) : 0.0;
    return {{"mean", mean}, {"std_error", n > 1 ? std::sqrt(var / dn) : 0.0}};
  }
};

RunFiles execute_run(const ExperimentSpec& spec, const std::vector<BoxGeometry>& boxes,
                     const Task& t, const fs::path& dir, const std::string& chash) {
  const BoxGeometry& box = boxes[t.g];
  const mc::RunPlan plan{spec.model.build(), box, spec.bc.build(), t.beta, t.seed,
                         spec.mc.burn_in_sweeps, spec.mc.n_samples, spec.mc.thinning_sweeps,
                         spec.mc.field_epsilon, mc::sampler_from_string(spec.mc.sampler)};
  const auto obs = make_observables(spec);
  fs::create_directories(dir);

  const fs::path samples = dir / "samples.jsonl";
  const fs::path samples_tmp = samples.string() + ".tmp";
  std::ofstream out(samples_tmp, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + samples_tmp.string());

  std::vector<MeanAcc> acc(obs.size());
  MeanAcc energy;
  std::optional<observables::ProfileAccumulator> profile;
  if (spec.mc.profile) profile.emplace(box);

  const auto result = mc::run_chain(
      plan, obs,
      [&](const mc::SampleRecord& r, const SpinConfiguration& sigma) {
        nlohmann::ordered_json line;
        line["schema_version"] = kSchemaVersion;
        line["sweep"] = r.sweep;
        line["energy"] = r.energy;
        for (std::size_t o = 0; o < obs.size(); ++o) {
          line[obs[o].name] = r.values[o];
          acc[o].add(r.values[o]);
        }
        energy.add(r.energy);
        if (profile) profile->add(sigma);
        out << line.dump() << '\n';
      },
      false);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + samples_tmp.string());
  out.close();
  fs::rename(samples_tmp, samples);

  nlohmann::ordered_json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["experiment"] = spec.name;
  summary["config_hash"] = chash;
  summary["code_version"] = kCodeVersion;
  summary["generator"] = result.generator;
  summary["initial_configuration"] = result.initial_configuration;
  summary["model"] = plan.model.describe();
  summary["geometry"] = box.label();
  summary["size"] = spec.geometry.L[t.g];
  summary["bc"] = plan.bc.describe();
  summary["sampler"] = spec.mc.sampler;
  summary["beta"] = t.beta;
  summary["seed"] = t.seed;
  summary["burn_in_sweeps"] = plan.burn_in_sweeps;
  summary["thinning_sweeps"] = plan.thinning_sweeps;
  summary["n_samples"] = plan.n_samples;
  summary["final_sweep"] = result.final_state.sweep_count;
  summary["energy"] = energy.json();
  nlohmann::ordered_json o_json;
  for (std::size_t o = 0; o < obs.size(); ++o) o_json[obs[o].name] = acc[o].json();
  summary["observables"] = o_json;

  RunFiles files;
  if (profile) {
    const auto p = profile->finish();
    write_atomic(dir / "profile.csv", observables::profile_csv(p));
    files.hashes["profile.csv"] = sha256_file(dir / "profile.csv");
  }
  write_atomic(dir / "summary.json", summary.dump(2) + "\n");
  files.hashes["samples.jsonl"] = sha256_file(samples);
  files.hashes["summary.json"] = sha256_file(dir / "summary.json");
  return files;
}

bool verify_entry(const fs::path& exp_dir, const nlohmann::json& entry) {
  if (!entry.is_object() || !entry.contains("files") || !entry["files"].is_object()) return false;
  const fs::path dir = exp_dir / entry.value("path", std::string());
  for (const auto& [name, hash] : entry["files"].items()) {
    const fs::path f = dir / name;
    std::error_code ec;
    if (!fs::is_regular_file(f, ec)) return false;
    if (sha256_file(f) != hash.get<std::string>()) return false;
  }
  return true;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  const auto boxes = spec.geometry.boxes();
  const fs::path exp_dir = experiment_dir(spec, options.root);
  const fs::path manifest_path = exp_dir / "manifest.json";
  const std::string chash = config_hash(spec);

  try {
    fs::create_directories(exp_dir);
  } catch (const fs::filesystem_error& e) {
    throw std::runtime_error("output directory not writable: " + exp_dir.string() + " (" + e.what() + ")");
  }

  nlohmann::json manifest;
  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    try {
      manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("corrupt manifest " + manifest_path.string() + ": " + e.what());
    }
    if (manifest.value("config_hash", std::string()) != chash)
      throw ValidationError("output directory " + exp_dir.string() +
                            " holds a different experiment (config hash mismatch)");
  }
  manifest["schema_version"] = kSchemaVersion;
  manifest["experiment"] = spec.name;
  manifest["config_hash"] = chash;
  manifest["code_version"] = kCodeVersion;
  manifest["generator"] = std::string(Philox4x32::kName);
  manifest["config"] = to_toml(ExperimentSpec{spec.name, spec.model, spec.geometry, spec.bc, spec.mc, {}});
  if (!manifest.contains("runs") || !manifest["runs"].is_object()) manifest["runs"] = nlohmann::json::object();

  std::vector<Task> pending;
  ExperimentResult res{exp_dir, manifest_path, 0, 0, 0, 0};
  for (std::size_t g = 0; g < boxes.size(); ++g)
    for (double beta : spec.mc.betas)
      for (auto seed : spec.mc.seeds) {
        ++res.total_runs;
        const std::string rel =
            boxes[g].label() + "/" + beta_label(beta) + "/seed" + std::to_string(seed);
        if (manifest["runs"].contains(rel) && verify_entry(exp_dir, manifest["runs"][rel])) {
          ++res.skipped_runs;
          continue;
        }
        manifest["runs"].erase(rel);
        pending.push_back({g, beta, seed, rel});
      }
  if (options.max_new_runs && pending.size() > *options.max_new_runs) pending.resize(*options.max_new_runs);
  write_atomic(manifest_path, manifest.dump(2) + "\n");

  int workers = options.workers.value_or(spec.output.workers);
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, static_cast<int>(std::max<std::size_t>(1, pending.size())));

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      const std::size_t k = next.fetch_add(1);
      if (k >= pending.size()) return;
      const Task& t = pending[k];
      try {
        const RunFiles files = execute_run(spec, boxes, t, exp_dir / t.rel, chash);
        std::lock_guard lock(mu);
        nlohmann::json entry{{"path", t.rel},
                             {"geometry", boxes[t.g].label()},
                             {"size", spec.geometry.L[t.g]},
                             {"beta", t.beta},
                             {"seed", t.seed},
                             {"files", files.hashes}};
        manifest["runs"][t.rel] = entry;
        write_atomic(manifest_path, manifest.dump(2) + "\n");
        ++res.new_runs;
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  res.completed_runs = res.skipped_runs + res.new_runs;
  return res;
}

std::vector<observables::SizeSeries> size_table(const ExperimentSpec& spec, double beta,
                                                const std::string& observable,
                                                const std::optional<fs::path>& root) {
  const auto boxes = spec.geometry.boxes();
  const fs::path exp_dir = experiment_dir(spec, root);
  std::vector<observables::SizeSeries> out;
  for (std::size_t g = 0; g < boxes.size(); ++g) {
    observables::SizeSeries s;
    s.size = spec.geometry.L[g];
    for (auto seed : spec.mc.seeds) {
      const fs::path f = exp_dir / boxes[g].label() / beta_label(beta) / ("seed" + std::to_string(seed)) /
                         "samples.jsonl";
      std::ifstream in(f);
      if (!in) throw ValidationError("missing run output " + f.string() + " (run the experiment first)");
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        if (!j.contains(observable))
          throw ValidationError("observable '" + observable + "' not recorded in " + f.string());
        s.heights.push_back(j[observable].get<double>());
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace lrising::harness
