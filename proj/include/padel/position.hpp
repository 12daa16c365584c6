#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "padel/graph.hpp"
#include "padel/tape.hpp"
#include "padel/tensor.hpp"

namespace padel {

inline constexpr std::uint16_t kUnreachable = 0xFFFF;

// |V|×|V| hop-count matrix, row-major u16 with kUnreachable sentinel.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n)
      : n_(n), hops_(n * n, kUnreachable) {}

  std::size_t size() const { return n_; }
  std::uint16_t at(std::size_t i, std::size_t j) const {
    return hops_[i * n_ + j];
  }
  void set(std::size_t i, std::size_t j, std::uint16_t v) {
    hops_[i * n_ + j] = v;
  }
  std::uint16_t* row(std::size_t i) { return hops_.data() + i * n_; }
  const std::uint16_t* row(std::size_t i) const { return hops_.data() + i * n_; }
  const std::vector<std::uint16_t>& raw() const { return hops_; }
  std::vector<std::uint16_t>& raw() { return hops_; }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint16_t> hops_;
};

// Exact unweighted shortest-path hop counts; one BFS per source, sources
// processed in parallel (disjoint rows). num_threads 0 = hardware default.
DistanceMatrix all_pairs_distances(const BaseGraph& graph,
                                   unsigned num_threads = 0);

// Per-node max finite hop count; 0 for nodes that reach nothing but
// themselves.
std::vector<std::uint16_t> diameters(const DistanceMatrix& dist);

// |V|×|V| phase matrix. Values are computed in f64 and rounded to f32 so the
// in-memory matrix matches the disk cache bit for bit. Reachable entries are
// cos(pi/dia_i * hops) in [-1,1]; unreachable entries are exactly -1.5. A
// node with dia_i = 0 keeps its diagonal 1 and gets -1.5 elsewhere.
class PhaseMatrix {
 public:
  PhaseMatrix() = default;
  explicit PhaseMatrix(std::size_t n) : n_(n), vals_(n * n, 0.0f) {}

  std::size_t size() const { return n_; }
  float at(std::size_t i, std::size_t j) const { return vals_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, float v) { vals_[i * n_ + j] = v; }
  const std::vector<float>& raw() const { return vals_; }
  std::vector<float>& raw() { return vals_; }

 private:
  std::size_t n_ = 0;
  std::vector<float> vals_;
};

PhaseMatrix phase_encode(const DistanceMatrix& dist,
                         const std::vector<std::uint16_t>& dia);

struct PcaResult {
  Tensor scores;                    // n×d' principal-component scores
  Tensor components;                // n_features×d' eigenvectors (columns)
  std::vector<double> eigenvalues;  // kept d', nonincreasing
  double total_variance = 0.0;      // sum of all eigenvalues
  std::vector<double> column_mean;  // per-feature mean removed before projection

  std::vector<double> explained_variance_ratio() const;
};

// Column-centered projection onto the top-d' eigenvectors of the column
// covariance. Deterministic cyclic Jacobi eigensolver; sign fixed so each
// component's largest-|loading| entry is positive.
PcaResult pca_reduce(const PhaseMatrix& phase, std::size_t d_prime);

// Symmetric eigendecomposition helper (exposed for tests). Returns
// eigenvalues in nonincreasing order with matching eigenvector columns.
void symmetric_eigen(const Tensor& sym, std::vector<double>& eigenvalues,
                     Tensor& eigenvectors, std::size_t max_sweeps = 100);

// PCA-reduced coordinates plus the learned projection producing P.
struct PositionTable {
  Tensor reduced;     // n×d'
  Tensor projection;  // d'×d, learnable
};

PositionTable make_position_table(const Tensor& reduced, std::size_t d,
                                  Rng& rng);

// P = reduced · projection, on the tape. The projection leaf is registered
// with the given trainability; returns both so callers can read its grad.
struct ProjectedPosition {
  Tape::Var p;           // |V|×d
  Tape::Var projection;  // d'×d leaf
};
ProjectedPosition project(Tape& tape, const PositionTable& table,
                          bool train_projection);

// ---- preprocessing cache -------------------------------------------------
//
// Files live under <dir>/<edge-hash-hex>/:
//   distances.bin  u32 magic 'PDST', u32 version, u64 n, n*n u16
//   phase.bin      u32 magic 'PPHS', u32 version, u64 n, n*n f32
//   pca-<d'>.bin   u32 magic 'PPCA', u32 version, u64 n, u64 d',
//                  f64 total_variance, d' f64 eigenvalues, n*d' f64 scores
std::uint64_t hash_file(const std::filesystem::path& path);

struct PreprocessResult {
  DistanceMatrix distances;
  std::vector<std::uint16_t> dia;
  PhaseMatrix phase;
  bool cache_hit = false;
};

// Distances + phase, cached. Pass an empty dir to disable caching.
PreprocessResult compute_or_load_phase(const BaseGraph& graph,
                                       const std::filesystem::path& cache_dir,
                                       std::uint64_t content_key,
                                       unsigned num_threads = 0);

// PCA scores + eigenvalue header, cached alongside the phase files.
struct PcaCache {
  Tensor scores;
  std::vector<double> eigenvalues;
  double total_variance = 0.0;
  bool cache_hit = false;
};
PcaCache compute_or_load_pca(const PhaseMatrix& phase, std::size_t d_prime,
                             const std::filesystem::path& cache_dir,
                             std::uint64_t content_key);

void save_distances(const std::filesystem::path& path,
                    const DistanceMatrix& dist);
std::optional<DistanceMatrix> load_distances(
    const std::filesystem::path& path);
void save_phase(const std::filesystem::path& path, const PhaseMatrix& phase);
std::optional<PhaseMatrix> load_phase(const std::filesystem::path& path);

}  // namespace padel
