#pragma once

// Discrete velocity sets on the unit sphere and the velocity moments used by
// the low-rank substeps.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "apdlr/error.hpp"
#include "apdlr/mesh.hpp"

#ifndef APDLR_DEFAULT_DATA_DIR
#define APDLR_DEFAULT_DATA_DIR "data"
#endif

namespace apdlr {

inline constexpr double four_pi = 4.0 * std::numbers::pi;

struct Vec3 {
  double x, y, z;
};

/// Quadrature nodes (xi, eta, gamma) on S^2 with weights summing to 4*pi.
struct VelocitySet {
  Vector xi, eta, gamma, w;

  Index size() const { return w.size(); }
  Vec3 node(Index i) const { return {xi[i], eta[i], gamma[i]}; }

  /// <f>_v for a function sampled at the nodes.
  double integrate(const Vector& f) const { return w.dot(f); }

  template <class Fn>
  Vector sample(Fn&& fn) const {
    Vector out(size());
    for (Index i = 0; i < size(); ++i) out[i] = fn(node(i));
    return out;
  }
};

/// Data directory holding lebedev/ and the problem data files.
/// APDLR_DATA_DIR in the environment overrides the compiled-in default.
inline std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("APDLR_DATA_DIR"); env && *env) return env;
  return APDLR_DEFAULT_DATA_DIR;
}

inline std::vector<int> available_velocity_sets(const std::filesystem::path& data_dir) {
  std::vector<int> sizes;
  const auto dir = data_dir / "lebedev";
  if (!std::filesystem::is_directory(dir)) return sizes;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("lebedev_", 0) != 0 || entry.path().extension() != ".txt") continue;
    try {
      sizes.push_back(std::stoi(name.substr(8)));
    } catch (const std::exception&) {
    }
  }
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

/// Parses a node table: one "x y z w" line per node, '#' comments, unit weight sum.
inline VelocitySet parse_velocity_table(std::istream& in, const std::string& origin) {
  std::vector<double> x, y, z, w;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double v[4];
    std::string extra;
    if (!(ls >> v[0] >> v[1] >> v[2] >> v[3]) || (ls >> extra))
      throw DataError(origin + ":" + std::to_string(lineno) + ": expected 'x y z w'");
    for (double c : v)
      if (!std::isfinite(c)) throw DataError(origin + ":" + std::to_string(lineno) + ": non-finite value");
    if (!(v[3] > 0.0)) throw DataError(origin + ":" + std::to_string(lineno) + ": weight must be positive");
    const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (std::abs(norm - 1.0) > 1e-12)
      throw DataError(origin + ":" + std::to_string(lineno) + ": node is not on the unit sphere");
    x.push_back(v[0]);
    y.push_back(v[1]);
    z.push_back(v[2]);
    w.push_back(v[3]);
  }
  if (w.empty()) throw DataError(origin + ": empty node table");

  VelocitySet set;
  const Index n = Index(w.size());
  set.xi = Eigen::Map<Vector>(x.data(), n);
  set.eta = Eigen::Map<Vector>(y.data(), n);
  set.gamma = Eigen::Map<Vector>(z.data(), n);
  set.w = Eigen::Map<Vector>(w.data(), n);
  const double total = pairwise_sum(set.w);
  if (std::abs(total - 1.0) > 1e-12) throw DataError(origin + ": weights do not sum to one");
  set.w *= four_pi;
  return set;
}

/// Loads the shipped Lebedev rule with `n` nodes.
inline VelocitySet load_velocity_set(int n, const std::filesystem::path& data_dir = default_data_dir()) {
  const auto path = data_dir / "lebedev" / ("lebedev_" + std::to_string(n) + ".txt");
  std::ifstream in(path);
  if (!in) {
    std::string msg = "unknown velocity set size " + std::to_string(n) + "; available:";
    const auto sizes = available_velocity_sets(data_dir);
    if (sizes.empty()) msg += " none (no tables under " + (data_dir / "lebedev").string() + ")";
    for (int s : sizes) msg += " " + std::to_string(s);
    throw ValidationError(msg);
  }
  VelocitySet set = parse_velocity_table(in, path.string());
  if (set.size() != n)
    throw DataError(path.string() + ": expected " + std::to_string(n) + " nodes, found " +
                    std::to_string(set.size()));
  return set;
}

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<Vector, Vector> gauss_legendre(int n) {
  if (n < 1) throw ValidationError("gauss_legendre: need at least one node");
  Vector x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-16) break;
    }
    x[i] = -t;
    x[n - 1 - i] = t;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
  return {x, w};
}

/// Product rule: Gauss-Legendre in cos(theta) times equispaced azimuth.
/// An even azimuth count keeps the set antipodally symmetric.
inline VelocitySet product_velocity_set(int n_polar, int n_azimuth) {
  if (n_polar < 1 || n_azimuth < 2 || n_azimuth % 2 != 0)
    throw ValidationError("product_velocity_set: need n_polar >= 1 and an even n_azimuth >= 2");
  const auto [mu, wmu] = gauss_legendre(n_polar);
  VelocitySet set;
  const Index n = Index(n_polar) * n_azimuth;
  set.xi.resize(n);
  set.eta.resize(n);
  set.gamma.resize(n);
  set.w.resize(n);
  const double dphi = 2.0 * std::numbers::pi / n_azimuth;
  Index i = 0;
  for (int p = 0; p < n_polar; ++p) {
    const double st = std::sqrt(1.0 - mu[p] * mu[p]);
    for (int q = 0; q < n_azimuth; ++q, ++i) {
      const double phi = (q + 0.5) * dphi;
      set.xi[i] = st * std::cos(phi);
      set.eta[i] = st * std::sin(phi);
      set.gamma[i] = mu[p];
      set.w[i] = wmu[p] * dphi;
    }
  }
  return set;
}

/// <V_j>_v and <v V_j>_v for the columns of V (one velocity function per column).
struct Moments {
  Vector mean;   // r
  Matrix flux;   // 3 x r: rows xi, eta, gamma
};

inline Moments moments(const VelocitySet& set, const Matrix& V) {
  if (V.rows() != set.size()) throw ValidationError("moments: basis rows do not match node count");
  Moments m;
  m.mean = V.transpose() * set.w;
  m.flux.resize(3, V.cols());
  m.flux.row(0) = (V.transpose() * set.w.cwiseProduct(set.xi)).transpose();
  m.flux.row(1) = (V.transpose() * set.w.cwiseProduct(set.eta)).transpose();
  m.flux.row(2) = (V.transpose() * set.w.cwiseProduct(set.gamma)).transpose();
  return m;
}

/// T_{jl} = <d V_j V_l>_v - (1/4pi) <V_j>_v <d V_l>_v for a velocity weight d.
inline Matrix projected_tensor(const VelocitySet& set, const Matrix& V, const Vector& d) {
  const Vector wd = set.w.cwiseProduct(d);
  const Vector mean = V.transpose() * set.w;
  const Vector flux = V.transpose() * wd;
  return V.transpose() * wd.asDiagonal() * V - (mean * flux.transpose()) / four_pi;
}

/// The four sign-split transport tensors of the K-step.
struct TransportTensors {
  Matrix xi_plus, xi_minus, eta_plus, eta_minus;
};

inline TransportTensors transport_tensors(const VelocitySet& set, const Matrix& V) {
  if (V.rows() != set.size()) throw ValidationError("transport_tensors: basis rows do not match node count");
  const Vector xp = set.xi.cwiseMax(0.0), xm = set.xi.cwiseMin(0.0);
  const Vector ep = set.eta.cwiseMax(0.0), em = set.eta.cwiseMin(0.0);
  return {projected_tensor(set, V, xp), projected_tensor(set, V, xm), projected_tensor(set, V, ep),
          projected_tensor(set, V, em)};
}

}  // namespace apdlr
