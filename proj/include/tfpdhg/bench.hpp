#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tfpdhg/error.hpp"
#include "tfpdhg/policies.hpp"
#include "tfpdhg/problems.hpp"
#include "tfpdhg/solver.hpp"
#include "tfpdhg/trace_io.hpp"

namespace tfpdhg {

enum class Family { rg, mc, snl };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::rg: return "rg";
    case Family::mc: return "mc";
    case Family::snl: return "snl";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "rg") return Family::rg;
  if (s == "mc") return Family::mc;
  if (s == "snl") return Family::snl;
  throw Error("unknown problem family '" + s + "'");
}

struct FamilySizes {
  std::size_t rg_n = 50;
  std::size_t rg_m = 50;
  std::size_t mc_n = 100;
  std::size_t mc_edges = 100;
  bool mc_negate = false;
  SnlParams snl;
};

inline SdpProblem make_instance(Family f, std::uint64_t seed, const FamilySizes& sz = {}) {
  switch (f) {
    case Family::rg: return gen_random(seed, sz.rg_n, sz.rg_m);
    case Family::mc: return gen_maxcut(seed, sz.mc_n, sz.mc_edges, sz.mc_negate);
    case Family::snl: return gen_snl(seed, sz.snl).first;
  }
  throw Error("unknown family");
}

inline std::vector<std::size_t> default_budgets(Family f) {
  switch (f) {
    case Family::rg: return {5000, 10000, 25000};
    case Family::mc: return {2500, 5000, 10000};
    case Family::snl: return {7500, 15000, 30000};
  }
  return {};
}

struct BenchConfig {
  std::vector<Family> families{Family::rg, Family::mc, Family::snl};
  std::size_t seeds = 100;
  std::uint64_t first_seed = 1;
  std::map<Family, std::vector<std::size_t>> budgets{{Family::rg, default_budgets(Family::rg)},
                                                     {Family::mc, default_budgets(Family::mc)},
                                                     {Family::snl, default_budgets(Family::snl)}};
  std::vector<std::string> policies{"fixed", "bpdr", "alv", "ls", "tf"};
  std::vector<double> ls_s_grid{0.1, 0.2, 1.0, 10.0};
  double tol = kDefaultTol;
  double eps0 = 0.5;
  double eta = 0.95;
  FamilySizes sizes;
  ProjectionConfig proj;
  std::size_t jobs = 1;

  void validate() const {
    if (seeds == 0) throw Error("bench: need at least one seed");
    for (Family f : families) {
      auto it = budgets.find(f);
      if (it == budgets.end() || it->second.empty()) throw Error("bench: no budgets for family " + to_string(f));
      for (std::size_t i = 1; i < it->second.size(); ++i)
        if (it->second[i] <= it->second[i - 1]) throw Error("bench: budgets must be strictly increasing");
    }
    for (const auto& p : policies)
      if (p != "fixed" && p != "bpdr" && p != "alv" && p != "ls" && p != "tf")
        throw Error("bench: unknown policy '" + p + "'");
    if (!(tol > 0.0)) throw Error("bench: tol must be positive");
  }
};

/// Policy names expanded into concrete specs; "ls" yields one entry per s.
inline std::vector<std::pair<std::string, PolicySpec>> expand_policies(const BenchConfig& cfg) {
  std::vector<std::pair<std::string, PolicySpec>> out;
  for (const auto& name : cfg.policies) {
    if (name == "fixed") out.emplace_back(name, FixedParams{});
    else if (name == "bpdr") {
      BpdrParams p;
      p.eps0 = cfg.eps0;
      p.eta = cfg.eta;
      out.emplace_back(name, p);
    } else if (name == "alv") {
      AlvParams p;
      p.eps0 = cfg.eps0;
      p.eta = cfg.eta;
      out.emplace_back(name, p);
    } else if (name == "ls") {
      for (double s : cfg.ls_s_grid) {
        LsParams p;
        p.s = s;
        out.emplace_back(policy_label(p), p);
      }
    } else if (name == "tf") out.emplace_back(name, TfParams{});
  }
  return out;
}

struct BenchRun {
  Family family = Family::rg;
  std::string policy;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::iteration_cap;
  std::size_t iterations = 0;
  std::string message;
  RunTrace trace;
};

struct BenchCell {
  Family family = Family::rg;
  std::string policy;
  std::size_t budget = 0;
  double solved_fraction = 0.0;
  std::size_t errors = 0;
};

struct BenchResult {
  std::vector<BenchCell> table;
  std::vector<BenchRun> runs;

  const BenchCell& cell(Family f, const std::string& policy, std::size_t budget) const {
    for (const auto& c : table)
      if (c.family == f && c.policy == policy && c.budget == budget) return c;
    throw Error("bench: no cell for " + to_string(f) + "/" + policy + "/" + std::to_string(budget));
  }
};

/// A run counts as solved within `budget` when it converged in fewer than
/// `budget` iterations.
inline bool solved_within(const BenchRun& r, std::size_t budget) {
  return r.status == RunStatus::converged && r.iterations < budget;
}

namespace detail {

// Runs task(i) for i in [0, count) on `jobs` threads; results are written by
// index so the outcome does not depend on scheduling.
template <class Task>
void parallel_for(std::size_t count, std::size_t jobs, Task&& task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

inline BenchResult run_bench(const BenchConfig& cfg, bool keep_traces = true) {
  cfg.validate();
  const auto specs = expand_policies(cfg);

  struct Job {
    Family family;
    std::size_t spec;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Family f : cfg.families)
    for (std::size_t s = 0; s < specs.size(); ++s)
      for (std::size_t i = 0; i < cfg.seeds; ++i) jobs.push_back({f, s, cfg.first_seed + i});

  BenchResult result;
  result.runs.resize(jobs.size());
  detail::parallel_for(jobs.size(), cfg.jobs, [&](std::size_t idx) {
    const Job& job = jobs[idx];
    BenchRun& run = result.runs[idx];
    run.family = job.family;
    run.policy = specs[job.spec].first;
    run.seed = job.seed;
    SolveConfig sc;
    sc.max_iters = cfg.budgets.at(job.family).back();
    sc.tol = cfg.tol;
    sc.proj = cfg.proj;
    try {
      const SdpProblem problem = make_instance(job.family, job.seed, cfg.sizes);
      if (sc.proj.mode == ProjectionMode::truncated) sc.proj.r = std::min(sc.proj.r, problem.n());
      run.trace = solve_with(problem, specs[job.spec].second, sc);
      run.status = run.trace.status;
    } catch (const SolveError& e) {
      run.trace = e.trace();
      run.status = RunStatus::error;
      run.message = e.what();
    } catch (const std::exception& e) {
      run.status = RunStatus::error;
      run.message = e.what();
    }
    run.iterations = run.trace.iterations();
    if (!keep_traces) {
      run.trace.rows.clear();
      run.trace.rows.shrink_to_fit();
    }
    run.trace.X = SymMat();
  });

  for (Family f : cfg.families) {
    for (const auto& [label, spec] : specs) {
      for (std::size_t budget : cfg.budgets.at(f)) {
        BenchCell cell{f, label, budget, 0.0, 0};
        std::size_t total = 0, solved = 0;
        for (const auto& r : result.runs) {
          if (r.family != f || r.policy != label) continue;
          ++total;
          if (solved_within(r, budget)) ++solved;
          if (r.status == RunStatus::error) ++cell.errors;
        }
        cell.solved_fraction = total ? static_cast<double>(solved) / static_cast<double>(total) : 0.0;
        result.table.push_back(cell);
      }
    }
  }
  return result;
}

inline void write_table_csv(const BenchResult& r, std::ostream& out) {
  out << "family,policy,budget,solved_fraction\n";
  for (const auto& c : r.table)
    out << to_string(c.family) << ',' << c.policy << ',' << c.budget << ',' << detail::csv_real(c.solved_fraction)
        << '\n';
}

/// Writes table.csv and runs/<family>_<policy>_<seed>.csv under `dir`.
inline void write_bench_outputs(const BenchResult& r, const std::filesystem::path& dir, bool include_wall = true) {
  std::filesystem::create_directories(dir / "runs");
  {
    std::ofstream out(dir / "table.csv");
    if (!out) throw Error("cannot write " + (dir / "table.csv").string());
    write_table_csv(r, out);
  }
  for (const auto& run : r.runs) {
    const auto path = dir / "runs" / (to_string(run.family) + "_" + run.policy + "_" + std::to_string(run.seed) + ".csv");
    write_trace_csv(run.trace, path.string(), include_wall);
  }
}

/// Human-readable percent table grouped by family, one column per policy.
inline void write_percent_table(const BenchResult& r, std::ostream& out) {
  std::map<Family, std::vector<std::string>> cols;
  std::map<Family, std::vector<std::size_t>> rows;
  for (const auto& c : r.table) {
    auto& pc = cols[c.family];
    if (std::find(pc.begin(), pc.end(), c.policy) == pc.end()) pc.push_back(c.policy);
    auto& br = rows[c.family];
    if (std::find(br.begin(), br.end(), c.budget) == br.end()) br.push_back(c.budget);
  }
  for (const auto& [f, pols] : cols) {
    out << to_string(f);
    for (const auto& p : pols) out << '\t' << p;
    out << '\n';
    for (std::size_t b : rows[f]) {
      out << '<' << b;
      for (const auto& p : pols) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.0f%%", 100.0 * r.cell(f, p, b).solved_fraction);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
}

// -----------------------------------------------------------------------------
// Config file (JSON mirroring BenchConfig)
// -----------------------------------------------------------------------------

inline BenchConfig bench_config_from_json(const nlohmann::json& j) {
  BenchConfig c;
  if (j.contains("families")) {
    c.families.clear();
    for (const auto& f : j.at("families")) c.families.push_back(parse_family(f.get<std::string>()));
  }
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::size_t>();
  if (j.contains("first_seed")) c.first_seed = j.at("first_seed").get<std::uint64_t>();
  if (j.contains("budgets"))
    for (const auto& [k, v] : j.at("budgets").items()) c.budgets[parse_family(k)] = v.get<std::vector<std::size_t>>();
  if (j.contains("policies")) c.policies = j.at("policies").get<std::vector<std::string>>();
  if (j.contains("ls_s_grid")) c.ls_s_grid = j.at("ls_s_grid").get<std::vector<double>>();
  if (j.contains("tol")) c.tol = j.at("tol").get<double>();
  if (j.contains("eps0")) c.eps0 = j.at("eps0").get<double>();
  if (j.contains("eta")) c.eta = j.at("eta").get<double>();
  if (j.contains("jobs")) c.jobs = j.at("jobs").get<std::size_t>();
  if (j.contains("sizes")) {
    const auto& s = j.at("sizes");
    c.sizes.rg_n = s.value("rg_n", c.sizes.rg_n);
    c.sizes.rg_m = s.value("rg_m", c.sizes.rg_m);
    c.sizes.mc_n = s.value("mc_n", c.sizes.mc_n);
    c.sizes.mc_edges = s.value("mc_edges", c.sizes.mc_edges);
    c.sizes.mc_negate = s.value("mc_negate", c.sizes.mc_negate);
    c.sizes.snl.m_anchors = s.value("snl_anchors", c.sizes.snl.m_anchors);
    c.sizes.snl.n_sensors = s.value("snl_sensors", c.sizes.snl.n_sensors);
    c.sizes.snl.radius = s.value("snl_radius", c.sizes.snl.radius);
    c.sizes.snl.degree = s.value("snl_degree", c.sizes.snl.degree);
    c.sizes.snl.p = s.value("snl_p", c.sizes.snl.p);
  }
  if (j.contains("proj")) {
    const std::string p = j.at("proj").get<std::string>();
    if (p == "full") {
      c.proj.mode = ProjectionMode::exact;
    } else if (p.starts_with("rank:")) {
      c.proj.mode = ProjectionMode::truncated;
      c.proj.r = std::stoul(p.substr(5));
    } else {
      throw Error("bench config: proj must be 'full' or 'rank:<r>'");
    }
  }
  c.validate();
  return c;
}

// -----------------------------------------------------------------------------
// eta grid search for the balancing policies
// -----------------------------------------------------------------------------

struct GridSearchConfig {
  std::vector<double> etas{0.9, 0.925, 0.95, 0.975, 0.99};
  std::size_t rg_seeds = 33;
  std::size_t mc_seeds = 34;
  std::size_t snl_seeds = 33;
  std::uint64_t first_seed = 1;
  std::size_t max_iters = 30000;
  double eps0 = 0.5;
  double tol = kDefaultTol;
  FamilySizes sizes;
  std::size_t jobs = 1;
};

struct GridSearchRow {
  std::string policy;
  double eta = 0.0;
  double fastest_fraction = 0.0;  // share of instances on which this eta was (jointly) fastest
};

inline std::vector<GridSearchRow> run_grid_search(const GridSearchConfig& cfg) {
  std::vector<std::pair<Family, std::uint64_t>> instances;
  for (std::size_t i = 0; i < cfg.rg_seeds; ++i) instances.emplace_back(Family::rg, cfg.first_seed + i);
  for (std::size_t i = 0; i < cfg.mc_seeds; ++i) instances.emplace_back(Family::mc, cfg.first_seed + i);
  for (std::size_t i = 0; i < cfg.snl_seeds; ++i) instances.emplace_back(Family::snl, cfg.first_seed + i);

  std::vector<GridSearchRow> rows;
  for (const std::string policy : {"bpdr", "alv"}) {
    const std::size_t ne = cfg.etas.size();
    // iterations[inst * ne + e]; 0 = did not converge
    std::vector<std::size_t> iterations(instances.size() * ne, 0);
    detail::parallel_for(iterations.size(), cfg.jobs, [&](std::size_t idx) {
      const auto [fam, seed] = instances[idx / ne];
      const double eta = cfg.etas[idx % ne];
      SolveConfig sc;
      sc.max_iters = cfg.max_iters;
      sc.tol = cfg.tol;
      try {
        const SdpProblem p = make_instance(fam, seed, cfg.sizes);
        PolicySpec spec;
        if (policy == "bpdr") {
          BpdrParams bp;
          bp.eps0 = cfg.eps0;
          bp.eta = eta;
          spec = bp;
        } else {
          AlvParams ap;
          ap.eps0 = cfg.eps0;
          ap.eta = eta;
          spec = ap;
        }
        const RunTrace t = solve_with(p, spec, sc);
        if (t.converged()) iterations[idx] = t.iterations();
      } catch (const std::exception&) {
      }
    });
    std::vector<std::size_t> wins(ne, 0);
    for (std::size_t inst = 0; inst < instances.size(); ++inst) {
      std::size_t best = 0;
      for (std::size_t e = 0; e < ne; ++e) {
        const std::size_t it = iterations[inst * ne + e];
        if (it && (best == 0 || it < best)) best = it;
      }
      if (best == 0) continue;
      for (std::size_t e = 0; e < ne; ++e)
        if (iterations[inst * ne + e] == best) ++wins[e];
    }
    for (std::size_t e = 0; e < ne; ++e)
      rows.push_back({policy, cfg.etas[e],
                      instances.empty() ? 0.0 : static_cast<double>(wins[e]) / static_cast<double>(instances.size())});
  }
  return rows;
}

}  // namespace tfpdhg
