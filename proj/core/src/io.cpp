#include "dualres/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dualres/error.hpp"

namespace dualres {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last) throw FormatError("invalid number for " + what + ": '" + s + "'");
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("truncated file: " + path);
  return v;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

KeyValues parse_key_values(std::istream& in, const std::string& origin) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw FormatError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (!kv.emplace(key, value).second)
      throw FormatError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_key_values(in, path);
}

KernelParams theta_from(const KeyValues& kv, const std::string& origin) {
  auto need = [&](const char* k) {
    const auto it = kv.find(k);
    if (it == kv.end()) throw FormatError(origin + ": missing key '" + k + "'");
    return parse_double(it->second, k);
  };
  const double tau = need("tau_sq"), psi = need("psi"), nu = need("nu");
  try {
    return KernelParams(tau, psi, nu);
  } catch (const std::exception& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

KernelParams read_theta(const std::string& path) { return theta_from(read_key_values(path), path); }

void write_theta(const std::string& path, const KernelParams& p, const KeyValues& extra) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "tau_sq = " << format_double(p.tau_sq) << "\n"
      << "psi = " << format_double(p.psi) << "\n"
      << "nu = " << format_double(p.nu) << "\n";
  out << "fwhm_mm = " << format_double(fwhm(p)) << "\n";
  for (const auto& [k, v] : extra) out << k << " = " << v << "\n";
  if (!out) throw IoError("failed writing " + path);
}

void write_draws(const std::string& path, const PosteriorDraws& draws) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  put<std::uint64_t>(out, draws.n_draws());
  put<std::uint64_t>(out, draws.n_voxels);
  out.write(reinterpret_cast<const char*>(draws.mu.data()),
            static_cast<std::streamsize>(draws.n_draws() * draws.n_voxels * sizeof(double)));
  if (!out) throw IoError("failed writing " + path);
}

DrawMatrix read_draws(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  DrawMatrix m;
  m.n_draws = get<std::uint64_t>(in, path);
  m.n_voxels = get<std::uint64_t>(in, path);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::uint64_t>(in.tellg()) - 16;
  if (m.n_voxels == 0 || bytes != m.n_draws * m.n_voxels * sizeof(double))
    throw FormatError("draw file size does not match its header: " + path);
  in.seekg(16);
  m.values.resize(m.n_draws * m.n_voxels);
  if (!in.read(reinterpret_cast<char*>(m.values.data()), static_cast<std::streamsize>(bytes)))
    throw FormatError("truncated file: " + path);
  return m;
}

PosteriorDraws to_posterior_draws(DrawMatrix m) {
  PosteriorDraws d;
  d.n_voxels = m.n_voxels;
  d.mu = std::move(m.values);
  return d;
}

void write_telemetry_csv(const std::string& path, const std::vector<PosteriorDraws>& chains) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "iteration,chain,warmup,eps,accept,accepted,energy,sigma_h_sq,sigma_s_sq,restriction_ok\n";
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (const auto& r : chains[c].telemetry) {
      out << r.iteration << ',' << c << ',' << (r.warmup ? 1 : 0) << ',' << format_double(r.eps)
          << ',' << format_double(r.accept_prob) << ',' << (r.accepted ? 1 : 0) << ','
          << format_double(r.energy) << ',' << format_double(r.sigma_h_sq) << ','
          << format_double(r.sigma_s_sq) << ',' << (r.restriction_ok ? 1 : 0) << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace dualres
