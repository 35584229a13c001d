#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lrising/harness.hpp"

using namespace lrising;
using namespace lrising::harness;
namespace fs = std::filesystem;

namespace {

const char* kSpec = R"(name = "tiny"

[model]
kind = "isotropic"
alpha = 3.0

[geometry]
shape = "interface_symmetric"
L = [1, 2, 3]
M = [1, 1, 2]

[bc]
kind = "dobrushin"
height = 0

[mc]
betas = [0.3, 0.6]
seeds = [1, 2]
burn_in_sweeps = 5
n_samples = 20
thinning_sweeps = 2
observables = ["magnetization", "mid_height"]
profile = true
)";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("lrising_test_" + std::to_string(std::rand()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& toml) {
  try {
    (void)parse_spec(toml);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("experiment config parsing round-trips") {
  const auto s = parse_spec(kSpec);
  CHECK(s.name == "tiny");
  CHECK(s.geometry.L == std::vector<int>{1, 2, 3});
  CHECK(s.mc.betas == std::vector<double>{0.3, 0.6});
  CHECK(s.mc.profile);
  CHECK(s.geometry.boxes().size() == 3u);
  CHECK(s.geometry.boxes()[2] == BoxGeometry::interface_symmetric(3, 2, 0));
  const auto again = parse_spec(to_toml(s));
  CHECK(again == s);
  CHECK(config_hash(again) == config_hash(s));

  // output section does not change the hash; physics does
  auto t = s;
  t.output.root = "/elsewhere";
  t.output.workers = 3;
  CHECK(config_hash(t) == config_hash(s));
  t.mc.n_samples = 21;
  CHECK(config_hash(t) != config_hash(s));

  // scalars act as one-element lists
  const auto one = parse_spec(replace(kSpec, "betas = [0.3, 0.6]", "betas = 0.5"));
  CHECK(one.mc.betas == std::vector<double>{0.5});
}

TEST_CASE("field-precise validation errors") {
  CHECK(error_of(replace(kSpec, "betas = [0.3, 0.6]", "betas = [0.3, -0.6]")).rfind("mc.betas[1]", 0) == 0);
  CHECK(error_of(replace(kSpec, "alpha = 3.0", "alpha = 1.5")).rfind("model", 0) == 0);
  CHECK(error_of(replace(kSpec, "alpha = 3.0", "alpha = \"x\"")).rfind("model.alpha", 0) == 0);
  CHECK(error_of(replace(kSpec, "kind = \"isotropic\"", "kind = \"ising\"")).rfind("model.kind", 0) == 0);
  CHECK(error_of(replace(kSpec, "seeds = [1, 2]", "seeds = [1, 1]")).rfind("mc.seeds", 0) == 0);
  CHECK(error_of(replace(kSpec, "seeds = [1, 2]", "seeds = [1, -2]")).rfind("mc.seeds[1]", 0) == 0);
  CHECK(error_of(replace(kSpec, "n_samples = 20", "n_samples = 0")).rfind("mc.n_samples", 0) == 0);
  CHECK(error_of(replace(kSpec, "profile = true", "profile = true\ncolour = 1")).rfind("mc.colour", 0) == 0);
  CHECK(error_of(replace(kSpec, "M = [1, 1, 2]", "M = [1, 1]")).rfind("geometry.M", 0) == 0);
  CHECK(error_of(replace(kSpec, "L = [1, 2, 3]", "L = [1, -2, 3]")).rfind("geometry.L[1]", 0) == 0);
  CHECK(error_of(replace(kSpec, "kind = \"dobrushin\"", "kind = \"wall\"")).rfind("bc.kind", 0) == 0);
  CHECK(error_of(replace(kSpec, "[mc]", "[mc]\nsampler = \"cluster\"")).rfind("mc.sampler", 0) == 0);
  CHECK(error_of(replace(kSpec, "\"mid_height\"", "\"energy\"")).rfind("mc.observables[1]", 0) == 0);
  CHECK(error_of(replace(kSpec, "name = \"tiny\"", "name = \"a/b\"")).rfind("name", 0) == 0);
  CHECK(error_of(replace(kSpec, "name = \"tiny\"", "")).rfind("name", 0) == 0);
  CHECK(error_of("name = [").find("<string>:1") == 0);
  CHECK_THROWS_AS(load_spec("/nonexistent/x.toml"), ValidationError);
}

TEST_CASE("utility functions") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(beta_label(0.5) == "beta0.5");
  CHECK(beta_label(1.0) == "beta1");
  TempDir tmp;
  write_atomic(tmp.path / "f.txt", "hello");
  CHECK(slurp(tmp.path / "f.txt") == "hello");
  CHECK(sha256_file(tmp.path / "f.txt") == sha256_hex("hello"));
  write_atomic(tmp.path / "f.txt", "bye");
  CHECK(slurp(tmp.path / "f.txt") == "bye");
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(tmp.path)) n += e.is_regular_file();
  CHECK(n == 1u);  // no temporaries left behind
}

TEST_CASE("running, resuming and verifying an experiment") {
  TempDir tmp;
  auto spec = parse_spec(kSpec);
  RunOptions opt;
  opt.root = tmp.path;
  opt.workers = 2;

  opt.max_new_runs = 5;
  auto r = run_experiment(spec, opt);
  CHECK(r.total_runs == 12u);
  CHECK(r.new_runs == 5u);
  CHECK(r.completed_runs == 5u);
  CHECK(r.experiment_dir == tmp.path / "tiny");
  CHECK_THROWS_AS(size_table(spec, 0.6, "mid_height", tmp.path), ValidationError);

  opt.max_new_runs.reset();
  r = run_experiment(spec, opt);
  CHECK(r.skipped_runs == 5u);
  CHECK(r.new_runs == 7u);
  const std::string manifest = slurp(r.manifest_path);
  const auto mj = nlohmann::json::parse(manifest);
  CHECK(mj["runs"].size() == 12u);
  CHECK(mj["config_hash"] == config_hash(spec));
  CHECK(mj["generator"] == "philox4x32-10");
  CHECK(mj["schema_version"] == 1);

  // rerun is a no-op
  r = run_experiment(spec, opt);
  CHECK(r.new_runs == 0u);
  CHECK(r.skipped_runs == 12u);
  CHECK(slurp(r.manifest_path) == manifest);

  const fs::path run_dir = r.experiment_dir / BoxGeometry::interface_symmetric(2, 1, 0).label() / "beta0.3" / "seed2";
  const std::string samples = slurp(run_dir / "samples.jsonl");
  CHECK(fs::exists(run_dir / "summary.json"));
  CHECK(slurp(run_dir / "profile.csv").rfind("# schema_version=1", 0) == 0);
  std::istringstream lines(samples);
  std::string first;
  std::getline(lines, first);
  const auto rec = nlohmann::json::parse(first);
  CHECK(rec["schema_version"] == 1);
  CHECK(rec.contains("energy"));
  CHECK(rec.contains("mid_height"));
  CHECK(rec.contains("magnetization"));

  // the same config elsewhere, single worker: byte-identical samples
  TempDir other;
  RunOptions o2;
  o2.root = other.path;
  o2.workers = 1;
  const auto r2 = run_experiment(spec, o2);
  CHECK(slurp(r2.experiment_dir / fs::relative(run_dir, r.experiment_dir) / "samples.jsonl") == samples);

  // tampering triggers a rerun of that entry only, restoring the bytes
  {
    std::ofstream f(run_dir / "samples.jsonl", std::ios::app);
    f << "garbage\n";
  }
  r = run_experiment(spec, opt);
  CHECK(r.new_runs == 1u);
  CHECK(slurp(run_dir / "samples.jsonl") == samples);

  const auto table = size_table(spec, 0.3, "mid_height", tmp.path);
  REQUIRE(table.size() == 3u);
  CHECK(table[1].size == 2);
  CHECK(table[1].heights.size() == 40u);
  CHECK_THROWS_AS(size_table(spec, 0.3, "energy_density", tmp.path), ValidationError);

  // a different config in the same directory is refused
  auto changed = spec;
  changed.mc.n_samples = 30;
  CHECK_THROWS_AS(run_experiment(changed, opt), ValidationError);
}

TEST_CASE("output root resolution and failures") {
  auto spec = parse_spec(kSpec);
  ::setenv(kOutputRootEnv, "/tmp/lrising_env_root", 1);
  CHECK(default_output_root() == fs::path("/tmp/lrising_env_root"));
  CHECK(experiment_dir(spec) == fs::path("/tmp/lrising_env_root") / "tiny");
  spec.output.root = "/tmp/explicit";
  CHECK(experiment_dir(spec) == fs::path("/tmp/explicit") / "tiny");
  CHECK(experiment_dir(spec, fs::path("/tmp/opt")) == fs::path("/tmp/opt") / "tiny");
  ::setenv(kOutputRootEnv, "", 1);
  CHECK(default_output_root() == fs::path("out"));
  ::unsetenv(kOutputRootEnv);

  TempDir tmp;
  write_atomic(tmp.path / "file", "x");
  RunOptions opt;
  opt.root = tmp.path / "file";  // a regular file cannot hold the experiment
  CHECK_THROWS_AS(run_experiment(spec, opt), std::runtime_error);
}

TEST_CASE("observables from the experiment config") {
  const auto spec = parse_spec(kSpec);
  const auto obs = make_observables(spec);
  REQUIRE(obs.size() == 2u);
  CHECK(obs[0].name == "magnetization");
  CHECK(obs[1].name == "mid_height");
  SpinConfiguration s(BoxGeometry::interface_symmetric(1, 2, 0), +1);
  CHECK(obs[1].fn(s) == -2.0);  // all plus: interface pushed to the bottom
}
