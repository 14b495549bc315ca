#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "tfpdhg/drs_oracle.hpp"
#include "tfpdhg/error.hpp"
#include "tfpdhg/solver.hpp"

namespace tfpdhg {

inline constexpr const char* kTraceHeader = "iter,p_norm,d_norm,combined,objective,alpha,beta,theta,wall_ms";

namespace detail {
inline std::string csv_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// One row per iteration. With include_wall = false the wall_ms column is
/// written as 0 so identical runs produce byte-identical files.
inline void write_trace_csv(const RunTrace& trace, std::ostream& out, bool include_wall = true) {
  out << kTraceHeader << '\n';
  for (const TraceRow& r : trace.rows) {
    out << r.iter << ',' << detail::csv_real(r.p_norm) << ',' << detail::csv_real(r.d_norm) << ','
        << detail::csv_real(r.combined) << ',' << detail::csv_real(r.objective) << ',' << detail::csv_real(r.alpha)
        << ',' << detail::csv_real(r.beta) << ',' << detail::csv_real(r.theta) << ','
        << detail::csv_real(include_wall ? r.wall_ms : 0.0) << '\n';
  }
}

inline void write_trace_csv(const RunTrace& trace, const std::string& path, bool include_wall = true) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_trace_csv(trace, out, include_wall);
}

inline nlohmann::json to_json(const EquivalenceReport& r) {
  return nlohmann::json{{"max_x_defect", r.max_x_defect},
                        {"max_z_defect", r.max_z_defect},
                        {"iters", r.iters},
                        {"pass", r.pass},
                        {"R", r.R},
                        {"extrapolation", r.extrapolation}};
}

inline nlohmann::json to_json(const LiftCertificate& c) {
  return nlohmann::json{{"s_defect", c.s_defect},
                        {"s_norm", c.s_norm},
                        {"total_defect", c.total_defect},
                        {"pass", c.pass}};
}

}  // namespace tfpdhg
