#pragma once

// SDPA sparse (.dat-s) reader and writer for single-block instances.
//
// Layout written:
//   *<generator> seed=<seed>
//   m
//   1
//   n
//   b_1 ... b_m
//   matno blkno i j value      (matno 0 = C, 1..m = A_i; 1-based, i <= j)
//
// C is stored exactly as the objective of min <C, X>; no sign flip is applied.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tfpdhg/error.hpp"
#include "tfpdhg/problems.hpp"

namespace tfpdhg {

namespace detail {

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> sdpa_tokens(std::string line) {
  for (char& c : line)
    if (c == ',' || c == '{' || c == '}' || c == '(' || c == ')' || c == '\r' || c == '\t') c = ' ';
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline double parse_real(const std::string& tok, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || errno == ERANGE) throw ParseError(line, "invalid number '" + tok + "'");
  return v;
}

inline long long parse_int(const std::string& tok, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0' || errno == ERANGE) throw ParseError(line, "invalid integer '" + tok + "'");
  return v;
}

}  // namespace detail

inline void write_sdpa(const SdpProblem& p, std::ostream& out) {
  out << '*' << p.meta.generator << " seed=" << p.meta.seed << '\n';
  out << p.m() << '\n' << 1 << '\n' << p.n() << '\n';
  for (std::size_t i = 0; i < p.m(); ++i) out << (i ? " " : "") << detail::format_real(p.b[i]);
  out << '\n';
  auto emit = [&](std::size_t matno, const SymMat& a) {
    for (std::size_t i = 0; i < a.n(); ++i)
      for (std::size_t j = i; j < a.n(); ++j)
        if (a(i, j) != 0.0)
          out << matno << " 1 " << i + 1 << ' ' << j + 1 << ' ' << detail::format_real(a(i, j)) << '\n';
  };
  emit(0, p.C);
  for (std::size_t k = 0; k < p.m(); ++k) emit(k + 1, p.map[k]);
}

inline SdpProblem read_sdpa(std::istream& in) {
  ProblemMeta meta;
  meta.generator = "file";
  std::string raw;
  std::size_t line_no = 0;
  bool header_done = false;

  // Header tokens in order: m, nblocks, block sizes, then m values of b.
  long long m = -1, nblocks = -1, n = -1;
  Vector b;
  std::vector<SymMat> mats;
  SymMat c;

  auto init_storage = [&] {
    c = SymMat(static_cast<std::size_t>(n));
    mats.assign(static_cast<std::size_t>(m), SymMat(static_cast<std::size_t>(n)));
  };

  while (std::getline(in, raw)) {
    ++line_no;
    if (!header_done && m < 0 && (raw.starts_with('*') || raw.starts_with('"'))) {
      // "*<generator> seed=<seed>"
      std::istringstream cs(raw.substr(1));
      std::string gen, seed_tok;
      if (cs >> gen) meta.generator = gen;
      if (cs >> seed_tok && seed_tok.starts_with("seed=")) {
        meta.seed = static_cast<std::uint64_t>(detail::parse_int(seed_tok.substr(5), line_no));
      }
      continue;
    }
    // Header lines may carry annotations such as "2 =mdim".
    if (!header_done) raw = raw.substr(0, raw.find('='));
    auto toks = detail::sdpa_tokens(raw);
    if (toks.empty()) continue;

    if (!header_done) {
      std::size_t t = 0;
      while (t < toks.size()) {
        if (m < 0) {
          m = detail::parse_int(toks[t++], line_no);
          if (m < 1) throw ParseError(line_no, "constraint count must be positive");
        } else if (nblocks < 0) {
          nblocks = detail::parse_int(toks[t++], line_no);
          if (nblocks != 1) throw ParseError(line_no, "only single-block instances are supported");
        } else if (n < 0) {
          n = detail::parse_int(toks[t++], line_no);
          if (n < 1) throw ParseError(line_no, "block size must be a positive dense block");
          init_storage();
        } else {
          b.push_back(detail::parse_real(toks[t++], line_no));
          if (static_cast<long long>(b.size()) == m) {
            header_done = true;
            if (t != toks.size()) throw ParseError(line_no, "trailing tokens after objective vector");
            break;
          }
        }
      }
      continue;
    }

    if (toks.size() != 5) throw ParseError(line_no, "expected 'matno blkno i j value'");
    const long long matno = detail::parse_int(toks[0], line_no);
    const long long blk = detail::parse_int(toks[1], line_no);
    const long long i = detail::parse_int(toks[2], line_no);
    const long long j = detail::parse_int(toks[3], line_no);
    const double v = detail::parse_real(toks[4], line_no);
    if (matno < 0 || matno > m) throw ParseError(line_no, "matrix number out of range");
    if (blk != 1) throw ParseError(line_no, "block number out of range");
    if (i < 1 || i > n || j < 1 || j > n) throw ParseError(line_no, "entry index out of range");
    SymMat& target = matno == 0 ? c : mats[static_cast<std::size_t>(matno - 1)];
    target(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1)) = v;
  }
  if (!header_done) throw ParseError(0, "unexpected end of input in header");
  return SdpProblem(std::move(c), ConstraintMap(std::move(mats)), std::move(b), std::move(meta));
}

inline void write_instance(const SdpProblem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_sdpa(p, out);
  if (!out) throw Error("failed writing '" + path + "'");
}

inline SdpProblem read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return read_sdpa(in);
}

}  // namespace tfpdhg
