#pragma once

// File output: atomic writes, locus CSV (gain,branch,re,im) and a small SVG
// pole-zero / locus plot.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "millerpole/error.hpp"
#include "millerpole/rootlocus.hpp"
#include "millerpole/roots.hpp"

namespace millerpole::io {

/// Shortest form that reads back to the same double (17 significant digits).
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes via a sibling temporary file and rename, so readers never see a
/// partially written file.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("io", "cannot write " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("io", "cannot write " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Rows ordered by gain, then branch.
inline std::string locus_csv(const LocusTrajectory& t) {
  if (t.size() == 0 || t.branch_count() == 0) throw Error("io", "empty trajectory");
  std::string out = "gain,branch,re,im\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t b = 0; b < t.branch_count(); ++b) {
      const cplx r = t.branches[b][i];
      out += fmt17(t.gains[i]) + ',' + std::to_string(b) + ',' + fmt17(r.real()) + ',' + fmt17(r.imag()) + '\n';
    }
  }
  return out;
}

inline void export_locus(const LocusTrajectory& t, const std::filesystem::path& path) { write_atomic(path, locus_csv(t)); }

inline LocusTrajectory parse_locus_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "gain,branch,re,im") throw Error("io", "locus CSV header mismatch");
  LocusTrajectory t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string g, b, re, im;
    if (!std::getline(row, g, ',') || !std::getline(row, b, ',') || !std::getline(row, re, ',') ||
        !std::getline(row, im)) {
      throw Error("io", "malformed locus CSV row: " + line);
    }
    const double gain = std::strtod(g.c_str(), nullptr);
    const std::size_t branch = std::stoul(b);
    if (branch == 0) t.gains.push_back(gain);
    if (branch >= t.branches.size()) t.branches.resize(branch + 1);
    t.branches[branch].emplace_back(std::strtod(re.c_str(), nullptr), std::strtod(im.c_str(), nullptr));
  }
  for (const auto& br : t.branches) {
    if (br.size() != t.gains.size()) throw Error("io", "locus CSV has ragged branches");
  }
  return t;
}

namespace detail {

// Symmetric log: linear within +-c, logarithmic outside.
inline double symlog(double x, double c) { return std::copysign(std::log10(1.0 + std::abs(x) / c), x); }

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

/// Pole-zero plot with locus branches, both axes on a symmetric-log scale.
inline std::string locus_svg(const LocusTrajectory& t, const RootSet& poles, const RootSet& zeros) {
  const double W = 640, H = 480, M = 40;
  double smallest = std::numeric_limits<double>::infinity();
  auto consider = [&](cplx z) {
    for (double v : {z.real(), z.imag()}) {
      if (v != 0 && std::isfinite(v)) smallest = std::min(smallest, std::abs(v));
    }
  };
  for (const auto& br : t.branches) std::for_each(br.begin(), br.end(), consider);
  std::for_each(poles.begin(), poles.end(), consider);
  std::for_each(zeros.begin(), zeros.end(), consider);
  const double c = std::isfinite(smallest) ? smallest : 1.0;

  double xmax = 1, ymax = 1;
  auto extent = [&](cplx z) {
    xmax = std::max(xmax, std::abs(detail::symlog(z.real(), c)));
    ymax = std::max(ymax, std::abs(detail::symlog(z.imag(), c)));
  };
  for (const auto& br : t.branches) std::for_each(br.begin(), br.end(), extent);
  std::for_each(poles.begin(), poles.end(), extent);
  std::for_each(zeros.begin(), zeros.end(), extent);

  auto X = [&](double re) { return W / 2 + detail::symlog(re, c) / xmax * (W / 2 - M); };
  auto Y = [&](double im) { return H / 2 - detail::symlog(im, c) / ymax * (H / 2 - M); };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
  s += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  s += "<line x1=\"" + detail::num(M) + "\" y1=\"240.00\" x2=\"" + detail::num(W - M) +
       "\" y2=\"240.00\" stroke=\"black\"/>\n";
  s += "<line x1=\"320.00\" y1=\"" + detail::num(M) + "\" x2=\"320.00\" y2=\"" + detail::num(H - M) +
       "\" stroke=\"black\"/>\n";
  s += "<text x=\"" + detail::num(W - M) + "\" y=\"232.00\" font-size=\"12\" text-anchor=\"end\">Re (symlog)</text>\n";
  s += "<text x=\"326.00\" y=\"" + detail::num(M - 8) + "\" font-size=\"12\">Im (symlog)</text>\n";
  for (const auto& br : t.branches) {
    s += "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
    for (std::size_t i = 0; i < br.size(); ++i) {
      if (!std::isfinite(br[i].real()) || !std::isfinite(br[i].imag())) continue;
      s += detail::num(X(br[i].real())) + ',' + detail::num(Y(br[i].imag())) + (i + 1 < br.size() ? " " : "");
    }
    s += "\"/>\n";
  }
  for (const auto& p : poles) {
    const double x = X(p.real()), y = Y(p.imag());
    s += "<path d=\"M" + detail::num(x - 5) + ' ' + detail::num(y - 5) + " L" + detail::num(x + 5) + ' ' +
         detail::num(y + 5) + " M" + detail::num(x - 5) + ' ' + detail::num(y + 5) + " L" + detail::num(x + 5) + ' ' +
         detail::num(y - 5) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  for (const auto& z : zeros) {
    s += "<circle cx=\"" + detail::num(X(z.real())) + "\" cy=\"" + detail::num(Y(z.imag())) +
         "\" r=\"5\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace millerpole::io
