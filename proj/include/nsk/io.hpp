#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "nsk/evolution.hpp"
#include "nsk/verification.hpp"

namespace nsk {

// ---------------------------------------------------------------- field snapshots

/// 64-byte header: magic "NSKFLD01", int32 n[3], float64 L[3], char tag[16], uint32 reserved (0).
/// Data follows as little-endian float64 in x-fastest order.
inline constexpr char kSnapshotMagic[8] = {'N', 'S', 'K', 'F', 'L', 'D', '0', '1'};
inline constexpr std::size_t kSnapshotHeader = 64;

struct Snapshot {
  std::array<int, 3> n{};
  std::array<double, 3> length{};
  std::string tag;
  std::vector<double> data;
};

namespace detail {
template <class T>
void put_le(std::vector<char>& buf, T v) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  buf.insert(buf.end(), bytes.begin(), bytes.end());
}
template <class T>
T get_le(const char* p) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}
}  // namespace detail

inline void write_snapshot(const std::filesystem::path& path, const ScalarField& f, const std::string& tag) {
  require(tag.size() <= 16, ErrorCode::InvalidArgument, "snapshot tag longer than 16 bytes");
  const auto& g = *f.grid();
  std::vector<char> buf(kSnapshotMagic, kSnapshotMagic + 8);
  for (int a = 0; a < 3; ++a) detail::put_le<std::int32_t>(buf, g.n(a));
  for (int a = 0; a < 3; ++a) detail::put_le<double>(buf, g.length(a));
  std::array<char, 16> t{};
  std::memcpy(t.data(), tag.data(), tag.size());
  buf.insert(buf.end(), t.begin(), t.end());
  detail::put_le<std::uint32_t>(buf, 0);
  buf.reserve(kSnapshotHeader + 8 * g.size());
  for (std::size_t i = 0; i < g.size(); ++i) detail::put_le<double>(buf, f[i]);
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  os.write(buf.data(), std::streamsize(buf.size()));
  if (!os) fail(ErrorCode::IoError, "write failed: " + path.string());
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < kSnapshotHeader || std::memcmp(buf.data(), kSnapshotMagic, 8) != 0)
    fail(ErrorCode::IoError, path.string() + " is not a field snapshot");
  Snapshot s;
  const char* p = buf.data() + 8;
  std::size_t count = 1;
  for (int a = 0; a < 3; ++a, p += 4) {
    s.n[a] = detail::get_le<std::int32_t>(p);
    if (s.n[a] < 1) fail(ErrorCode::IoError, path.string() + " has a bad grid size");
    count *= std::size_t(s.n[a]);
  }
  for (int a = 0; a < 3; ++a, p += 8) s.length[a] = detail::get_le<double>(p);
  s.tag.assign(p, strnlen(p, 16));
  if (buf.size() != kSnapshotHeader + 8 * count) fail(ErrorCode::IoError, path.string() + " has the wrong length");
  s.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) s.data[i] = detail::get_le<double>(buf.data() + kSnapshotHeader + 8 * i);
  return s;
}

/// Field on `g` from a snapshot taken on a grid of the same shape.
inline ScalarField snapshot_field(const Snapshot& s, const GridPtr& g) {
  for (int a = 0; a < 3; ++a)
    require(s.n[a] == g->n(a) && s.length[a] == g->length(a), ErrorCode::IoError, "snapshot grid does not match");
  ScalarField f(g);
  for (std::size_t i = 0; i < g->size(); ++i) f[i] = s.data[i];
  return f;
}

// ---------------------------------------------------------------- text outputs

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  os << text;
  if (!os) fail(ErrorCode::IoError, "write failed: " + path.string());
}

/// Pretty-printed; nlohmann::json keeps object keys sorted, so the order is stable.
inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& r) {
  os << "iter,lambda_update,contraction_ratio,residual_mass,residual_momentum,residual_energy\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& h : r.history) {
    line.str("");
    line << h.iter << ',' << h.lambda_update << ',' << h.contraction_ratio << ',' << h.residual_mass << ',' << h.residual_momentum
         << ',' << h.residual_energy << '\n';
    os << line.str();
  }
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) fail(ErrorCode::IoError, "SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

// ---------------------------------------------------------------- reports as JSON

inline nlohmann::json to_json(const ResidualReport& r) {
  auto one = [](const EquationResidual& e) {
    return nlohmann::json{{"relative", e.relative}, {"absolute", e.absolute}, {"mean", e.mean}, {"scale", e.scale}};
  };
  return {{"mass", one(r.mass)}, {"momentum", one(r.momentum)}, {"energy", one(r.energy)}};
}

inline nlohmann::json to_json(const ForcingSmallness& s) {
  return {{"K0", s.K0}, {"K", s.K}, {"K1", s.K1}, {"K2", s.K2}, {"K3", s.K3}, {"budget", s.budget}, {"boundary_tail", s.boundary_tail}};
}

inline nlohmann::json to_json(const ConvergenceReport& r) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : r.history)
    hist.push_back({{"iter", h.iter},
                    {"lambda_update", h.lambda_update},
                    {"contraction_ratio", h.contraction_ratio},
                    {"residual_mass", h.residual_mass},
                    {"residual_momentum", h.residual_momentum},
                    {"residual_energy", h.residual_energy},
                    {"inner_iterations", h.inner_iterations}});
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"history", hist},
          {"residuals", to_json(r.residuals)},
          {"system_residual", r.system_residual},
          {"mean_defect", r.mean_defect},
          {"smallness", to_json(r.smallness)},
          {"budget_threshold", r.budget_threshold},
          {"within_budget", r.within_budget}};
}

inline nlohmann::json to_json(const NormReport& r) { return {{"value", r.value}, {"tail", r.tail}}; }

inline nlohmann::json to_json(const InequalityAudit& a) {
  return {{"id", a.id},
          {"samples", a.samples},
          {"lhs", a.lhs},
          {"rhs", a.rhs},
          {"max_ratio", a.max_ratio},
          {"min_ratio", a.min_ratio},
          {"fitted_constant", a.fitted_constant},
          {"scale_defect", a.scale_defect},
          {"scale_tol", a.scale_tol},
          {"eps", a.eps},
          {"boundary_tail", a.boundary_tail},
          {"pass", a.pass},
          {"note", a.note}};
}

inline nlohmann::json to_json(const EpsilonSweep& s) {
  nlohmann::json audits = nlohmann::json::array();
  for (const auto& a : s.audits) audits.push_back(to_json(a));
  return {{"audits", audits}, {"spread", s.spread}, {"spread_limit", s.spread_limit}, {"pass", s.pass}};
}

inline nlohmann::json to_json(const KernelDecayReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"kernel", e.kernel},
                       {"order", e.order},
                       {"constant", e.constant},
                       {"homogeneity_defect", e.homogeneity_defect},
                       {"doubled_constant", e.doubled_constant}});
  return {{"mu", r.mu}, {"entries", entries}, {"pass", r.pass}};
}

inline nlohmann::json to_json(const RegularizationReport& r) {
  return {{"eps", r.eps},
          {"gap", r.gap},
          {"successive", r.successive},
          {"limit_norm", r.limit_norm},
          {"relative_gap", r.relative_gap},
          {"tol", r.tol},
          {"monotone", r.monotone},
          {"pass", r.pass}};
}

inline nlohmann::json to_json(const DecayAudit& d) {
  return {{"estimate", to_json(d.estimate)},
          {"monotone", d.monotone},
          {"worst_increase", d.worst_increase},
          {"equivalence_ok", d.equivalence_ok},
          {"pass", d.pass}};
}

inline nlohmann::json to_json(const DecaySweep& s) {
  return {{"constants", s.constants}, {"variation", s.variation}, {"limit", s.limit}, {"pass", s.pass}};
}

}  // namespace nsk
