// pdhg_sdp: solve single SDP instances, run benchmark sweeps, and check the
// PDHG / Douglas-Rachford correspondence.
//
//   pdhg_sdp solve --problem mc --policy tf --seed 1 --out trace.csv
//   pdhg_sdp bench --config bench.json --out-dir results/
//   pdhg_sdp verify --n 5 --m 3 --iters 100 --schedule geometric
//   pdhg_sdp grid-search --out eta.csv
//   pdhg_sdp instance --problem rg --seed 3 --out rg3.dat-s

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tfpdhg/bench.hpp"
#include "tfpdhg/drs_oracle.hpp"
#include "tfpdhg/policies.hpp"
#include "tfpdhg/problems.hpp"
#include "tfpdhg/sdpa_io.hpp"
#include "tfpdhg/trace_io.hpp"

using namespace tfpdhg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCap = 2;
constexpr int kExitCheckFailed = 3;

struct ProblemArgs {
  std::string problem = "rg";
  std::uint64_t seed = 1;
  std::optional<std::size_t> n;
  std::optional<std::size_t> m;
  std::optional<std::size_t> edges;
  std::optional<std::size_t> anchors;
  std::optional<std::size_t> sensors;
  std::optional<double> radius;
  std::optional<std::size_t> degree;
  bool negate = false;

  void add_to(CLI::App* app) {
    app->add_option("--problem", problem, "rg | mc | snl | file:<path>");
    app->add_option("--seed", seed, "instance seed");
    app->add_option("--n", n, "matrix size (rg, mc)");
    app->add_option("--m", m, "constraint count (rg)");
    app->add_option("--edges", edges, "edge count (mc)");
    app->add_option("--anchors", anchors, "anchor count (snl)");
    app->add_option("--sensors", sensors, "sensor count (snl)");
    app->add_option("--radius", radius, "radio range (snl)");
    app->add_option("--degree", degree, "neighbour cap per sensor (snl)");
    app->add_flag("--negate", negate, "maximize <L, X> instead (mc)");
  }

  SdpProblem make() const {
    if (problem.starts_with("file:")) return read_instance(problem.substr(5));
    FamilySizes sz;
    const Family f = parse_family(problem);
    if (n) sz.rg_n = sz.mc_n = *n;
    if (m) sz.rg_m = *m;
    if (edges) sz.mc_edges = *edges;
    sz.mc_negate = negate;
    if (anchors) sz.snl.m_anchors = *anchors;
    if (sensors) sz.snl.n_sensors = *sensors;
    if (radius) sz.snl.radius = *radius;
    if (degree) sz.snl.degree = *degree;
    return make_instance(f, seed, sz);
  }
};

ProjectionConfig parse_projection(const std::string& s) {
  ProjectionConfig cfg;
  if (s == "full") return cfg;
  if (s.starts_with("rank:")) {
    cfg.mode = ProjectionMode::truncated;
    try {
      cfg.r = std::stoul(s.substr(5));
    } catch (const std::exception&) {
      throw Error("--proj: bad rank in '" + s + "'");
    }
    return cfg;
  }
  throw Error("--proj must be 'full' or 'rank:<r>'");
}

struct PolicyArgs {
  std::string policy = "tf";
  std::optional<double> eps0, eta, delta, s, mu, eps_tf;

  void add_to(CLI::App* app) {
    app->add_option("--policy", policy, "fixed | bpdr | alv | ls | tf")
        ->check(CLI::IsMember({"fixed", "bpdr", "alv", "ls", "tf"}));
    app->add_option("--eps0", eps0, "initial balancing factor (bpdr, alv)");
    app->add_option("--eta", eta, "balancing decay (bpdr, alv)");
    app->add_option("--delta", delta, "residual ratio weight (bpdr)");
    app->add_option("--s", s, "dual/primal stepsize ratio (ls)");
    app->add_option("--mu", mu, "backtracking factor (ls)");
    app->add_option("--eps-tf", eps_tf, "spectral bound epsilon (tf)");
  }

  PolicySpec spec() const {
    if (policy == "fixed") return FixedParams{};
    if (policy == "bpdr") {
      BpdrParams p;
      if (eps0) p.eps0 = *eps0;
      if (eta) p.eta = *eta;
      if (delta) p.delta = *delta;
      return p;
    }
    if (policy == "alv") {
      AlvParams p;
      if (eps0) p.eps0 = *eps0;
      if (eta) p.eta = *eta;
      return p;
    }
    if (policy == "ls") {
      LsParams p;
      if (s) p.s = *s;
      if (mu) p.mu = *mu;
      return p;
    }
    TfParams p;
    p.eps = eps_tf;
    return p;
  }
};

int cmd_solve(const ProblemArgs& pa, const PolicyArgs& pol, std::size_t max_iters, double tol, const std::string& proj,
              const std::string& out, bool no_wall) {
  const SdpProblem problem = pa.make();
  SolveConfig cfg;
  cfg.max_iters = max_iters;
  cfg.tol = tol;
  cfg.proj = parse_projection(proj);
  RunTrace trace;
  int code = kExitOk;
  try {
    trace = solve_with(problem, pol.spec(), cfg);
    code = trace.converged() ? kExitOk : kExitCap;
  } catch (const SolveError& e) {
    trace = e.trace();
    code = kExitError;
  }
  if (out.empty() || out == "-") write_trace_csv(trace, std::cout, !no_wall);
  else write_trace_csv(trace, out, !no_wall);

  const double last = trace.rows.empty() ? 0.0 : trace.rows.back().combined;
  std::fprintf(stderr, "%s: %s after %zu iterations, p^2+d^2 = %.3e, objective = %.6g\n", trace.policy.c_str(),
               to_string(trace.status), trace.iterations(), last,
               trace.rows.empty() ? 0.0 : trace.rows.back().objective);
  if (code == kExitError) std::fprintf(stderr, "error: %s\n", trace.message.c_str());
  return code;
}

int cmd_verify(std::size_t n, std::size_t m, std::size_t iters, double tol, const std::string& schedule,
               bool break_product, std::uint64_t seed, const std::string& out) {
  const SdpProblem problem = gen_random(seed, n, m);
  EquivalenceOptions opt;
  if (break_product) opt.beta_scale = 1.5;
  const auto sched = schedule == "geometric" ? std::function<double(std::size_t)>(geometric_schedule)
                                             : std::function<double(std::size_t)>(constant_schedule);
  const EquivalenceReport rep = check_equivalence(problem, sched, iters, tol, opt);
  const LiftedOperator lifted = build_T(problem.map, rep.R);
  const LiftCertificate cert = certify_lift(problem.map, lifted);

  nlohmann::json j;
  j["instance"] = {{"generator", "rg"}, {"seed", seed}, {"n", n}, {"m", m}};
  j["schedule"] = schedule;
  j["break_product"] = break_product;
  j["tol"] = tol;
  j["equivalence"] = to_json(rep);
  j["lift_certificate"] = to_json(cert);
  const bool pass = rep.pass && cert.pass;
  j["pass"] = pass;

  const std::string text = j.dump(2);
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw Error("cannot open '" + out + "' for writing");
    f << text << '\n';
  }
  std::cout << text << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir, std::optional<std::size_t> seeds,
              std::optional<std::size_t> jobs, bool no_wall) {
  BenchConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Error("cannot open config '" + config_path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error("config '" + config_path + "': " + e.what());
    }
    cfg = bench_config_from_json(j);
  }
  if (seeds) cfg.seeds = *seeds;
  if (jobs) cfg.jobs = *jobs;
  const BenchResult r = run_bench(cfg);
  write_bench_outputs(r, out_dir, !no_wall);
  write_percent_table(r, std::cout);
  std::size_t errors = 0;
  for (const auto& run : r.runs)
    if (run.status == RunStatus::error) ++errors;
  if (errors) std::fprintf(stderr, "%zu runs ended in error (recorded in their cells)\n", errors);
  return kExitOk;
}

int cmd_grid(const std::string& out, std::optional<std::size_t> per_family, std::size_t max_iters, std::size_t jobs) {
  GridSearchConfig cfg;
  cfg.max_iters = max_iters;
  cfg.jobs = jobs;
  if (per_family) cfg.rg_seeds = cfg.mc_seeds = cfg.snl_seeds = *per_family;
  const auto rows = run_grid_search(cfg);
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw Error("cannot open '" + out + "' for writing");
  }
  std::ostream& os = out.empty() ? std::cout : file;
  os << "policy,eta,fastest_fraction\n";
  for (const auto& r : rows) os << r.policy << ',' << r.eta << ',' << r.fastest_fraction << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-order SDP solver: adaptive PDHG with pluggable stepsize policies"};
  app.require_subcommand(1);

  ProblemArgs solve_problem;
  PolicyArgs solve_policy;
  std::size_t max_iters = 10000;
  double tol = kDefaultTol;
  std::string proj = "full";
  std::string solve_out;
  bool no_wall = false;
  auto* solve = app.add_subcommand("solve", "solve one instance and write its residual trace");
  solve_problem.add_to(solve);
  solve_policy.add_to(solve);
  solve->add_option("--max-iters", max_iters, "iteration cap");
  solve->add_option("--tol", tol, "stop when p^2 + d^2 < tol");
  solve->add_option("--proj", proj, "full | rank:<r>");
  solve->add_option("--out", solve_out, "trace CSV path (default stdout)");
  solve->add_flag("--no-wall", no_wall, "write 0 in the wall_ms column");

  std::string config_path, out_dir = "bench_out";
  std::optional<std::size_t> bench_seeds, bench_jobs;
  auto* bench = app.add_subcommand("bench", "seed sweep over families and policies");
  bench->add_option("--config", config_path, "JSON config mirroring BenchConfig");
  bench->add_option("--out-dir", out_dir, "directory for table.csv and runs/");
  bench->add_option("--seeds", bench_seeds, "override seed count");
  bench->add_option("--jobs", bench_jobs, "worker threads");
  bench->add_flag("--no-wall", no_wall, "write 0 in the wall_ms column");

  std::size_t vn = 5, vm = 3, viters = 100;
  double vtol = 1e-8;
  std::string vschedule = "constant", vout = "verify.json";
  bool vbreak = false;
  std::uint64_t vseed = 1;
  auto* verify = app.add_subcommand("verify", "PDHG vs lifted Douglas-Rachford check");
  verify->add_option("--n", vn, "matrix size");
  verify->add_option("--m", vm, "constraint count");
  verify->add_option("--iters", viters, "iterations to compare");
  verify->add_option("--tol", vtol, "maximum allowed defect");
  verify->add_option("--schedule", vschedule, "constant | geometric")
      ->check(CLI::IsMember({"constant", "geometric"}));
  verify->add_flag("--break-product", vbreak, "scale beta so alpha*beta != R (must fail)");
  verify->add_option("--seed", vseed, "instance seed");
  verify->add_option("--out", vout, "JSON report path ('' to skip)");

  std::string gout;
  std::optional<std::size_t> gper;
  std::size_t giters = 30000, gjobs = 1;
  auto* grid = app.add_subcommand("grid-search", "eta grid search for bpdr and alv");
  grid->add_option("--out", gout, "CSV path (default stdout)");
  grid->add_option("--seeds-per-family", gper, "override the 33/34/33 split");
  grid->add_option("--max-iters", giters, "iteration cap per run");
  grid->add_option("--jobs", gjobs, "worker threads");

  ProblemArgs inst_problem;
  std::string inst_out;
  auto* inst = app.add_subcommand("instance", "write a generated instance in SDPA sparse format");
  inst_problem.add_to(inst);
  inst->add_option("--out", inst_out, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*solve) return cmd_solve(solve_problem, solve_policy, max_iters, tol, proj, solve_out, no_wall);
    if (*bench) return cmd_bench(config_path, out_dir, bench_seeds, bench_jobs, no_wall);
    if (*verify) return cmd_verify(vn, vm, viters, vtol, vschedule, vbreak, vseed, vout);
    if (*grid) return cmd_grid(gout, gper, giters, gjobs);
    if (*inst) {
      write_instance(inst_problem.make(), inst_out);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
