#include "padel/position.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace padel {

namespace {

void bfs_row(const BaseGraph& graph, std::uint32_t source,
             std::uint16_t* row, std::vector<std::uint32_t>& frontier,
             std::vector<std::uint32_t>& next) {
  const std::size_t n = graph.num_nodes;
  std::fill(row, row + n, kUnreachable);
  row[source] = 0;
  frontier.clear();
  frontier.push_back(source);
  std::uint16_t depth = 0;
  while (!frontier.empty()) {
    ++depth;
    next.clear();
    for (std::uint32_t u : frontier)
      for (std::uint32_t v : graph.neighbors(u))
        if (row[v] == kUnreachable) {
          row[v] = depth;
          next.push_back(v);
        }
    frontier.swap(next);
  }
}

}  // namespace

DistanceMatrix all_pairs_distances(const BaseGraph& graph,
                                   unsigned num_threads) {
  const std::size_t n = graph.num_nodes;
  DistanceMatrix dist(n);
  if (n == 0) return dist;
  if (n - 1 > kUnreachable - 1)
    throw std::invalid_argument("all_pairs_distances: graph too large for u16 hops");

  unsigned threads = num_threads ? num_threads
                                 : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

  auto work = [&](unsigned tid) {
    std::vector<std::uint32_t> frontier, next;
    frontier.reserve(n);
    next.reserve(n);
    for (std::size_t s = tid; s < n; s += threads)
      bfs_row(graph, static_cast<std::uint32_t>(s), dist.row(s), frontier,
              next);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  return dist;
}

std::vector<std::uint16_t> diameters(const DistanceMatrix& dist) {
  const std::size_t n = dist.size();
  std::vector<std::uint16_t> dia(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t* row = dist.row(i);
    std::uint16_t best = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (row[j] != kUnreachable && row[j] > best) best = row[j];
    dia[i] = best;
  }
  return dia;
}

PhaseMatrix phase_encode(const DistanceMatrix& dist,
                         const std::vector<std::uint16_t>& dia) {
  const std::size_t n = dist.size();
  if (dia.size() != n)
    throw std::invalid_argument("phase_encode: dia size mismatch");
  PhaseMatrix phase(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t* row = dist.row(i);
    float* out = phase.raw().data() + i * n;
    if (dia[i] == 0) {
      // Degenerate: node reaches nothing but itself.
      for (std::size_t j = 0; j < n; ++j) out[j] = -1.5f;
      out[i] = 1.0f;
      continue;
    }
    const double step = std::numbers::pi / static_cast<double>(dia[i]);
    for (std::size_t j = 0; j < n; ++j)
      out[j] = row[j] == kUnreachable
                   ? -1.5f
                   : static_cast<float>(
                         std::cos(step * static_cast<double>(row[j])));
  }
  return phase;
}

void symmetric_eigen(const Tensor& sym, std::vector<double>& eigenvalues,
                     Tensor& eigenvectors, std::size_t max_sweeps) {
  if (sym.rows != sym.cols)
    throw std::invalid_argument("symmetric_eigen: matrix not square");
  const std::size_t n = sym.rows;
  Tensor a = sym;
  Tensor v = Tensor::identity(n);

  // Cyclic Jacobi. Deterministic rotation order; converges quadratically.
  for (std::size_t sweep = 0;; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
    if (off < 1e-22 * static_cast<double>(n * n) || n < 2) break;
    if (sweep >= max_sweeps)
      throw std::runtime_error("symmetric_eigen: no convergence after " +
                               std::to_string(max_sweeps) + " sweeps");
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double app = a.at(p, p), aqq = a.at(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a.at(i, i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

  eigenvalues.resize(n);
  eigenvectors = Tensor(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    eigenvalues[c] = diag[order[c]];
    for (std::size_t r = 0; r < n; ++r)
      eigenvectors.at(r, c) = v.at(r, order[c]);
  }
}

PcaResult pca_reduce(const PhaseMatrix& phase, std::size_t d_prime) {
  const std::size_t n = phase.size();
  if (d_prime < 1 || d_prime > n)
    throw std::invalid_argument("pca_reduce: d' must be in [1, |V|]");

  PcaResult res;
  res.column_mean.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      res.column_mean[j] += static_cast<double>(phase.at(i, j));
  for (double& m : res.column_mean) m /= static_cast<double>(n);

  Tensor centered(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      centered.at(i, j) =
          static_cast<double>(phase.at(i, j)) - res.column_mean[j];

  // Column covariance, 1/(n-1) convention (scale does not affect directions).
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  Tensor cov(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += centered.at(i, a) * centered.at(i, b);
      cov.at(a, b) = cov.at(b, a) = s / denom;
    }

  std::vector<double> eigvals;
  Tensor eigvecs;
  symmetric_eigen(cov, eigvals, eigvecs);

  res.total_variance = 0.0;
  for (double e : eigvals) res.total_variance += std::max(e, 0.0);
  res.eigenvalues.assign(eigvals.begin(),
                         eigvals.begin() + static_cast<long>(d_prime));

  res.components = Tensor(n, d_prime);
  for (std::size_t c = 0; c < d_prime; ++c) {
    // Sign convention: the largest-|loading| entry is positive.
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double m = std::abs(eigvecs.at(r, c));
      if (m > best) {
        best = m;
        arg = r;
      }
    }
    const double flip = eigvecs.at(arg, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r)
      res.components.at(r, c) = flip * eigvecs.at(r, c);
  }

  res.scores = Tensor(n, d_prime);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d_prime; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        s += centered.at(i, j) * res.components.at(j, c);
      res.scores.at(i, c) = s;
    }
  return res;
}

std::vector<double> PcaResult::explained_variance_ratio() const {
  std::vector<double> out;
  out.reserve(eigenvalues.size());
  for (double e : eigenvalues)
    out.push_back(total_variance > 0.0 ? std::max(e, 0.0) / total_variance
                                       : 0.0);
  return out;
}

PositionTable make_position_table(const Tensor& reduced, std::size_t d,
                                  Rng& rng) {
  PositionTable table;
  table.reduced = reduced;
  table.projection = Tensor::xavier_uniform(reduced.cols, d, rng);
  return table;
}

ProjectedPosition project(Tape& tape, const PositionTable& table,
                          bool train_projection) {
  if (table.reduced.cols != table.projection.rows)
    throw std::invalid_argument("project: dim mismatch " +
                                table.reduced.shape_str() + " vs " +
                                table.projection.shape_str());
  ProjectedPosition out;
  out.projection = tape.leaf(table.projection, train_projection);
  out.p = tape.matmul(tape.constant(table.reduced), out.projection);
  return out;
}

// ---- cache ----------------------------------------------------------------

namespace {

constexpr std::uint32_t kDistMagic = 0x54534450;   // "PDST"
constexpr std::uint32_t kPhaseMagic = 0x53485050;  // "PPHS"
constexpr std::uint32_t kPcaMagic = 0x41435050;    // "PPCA"
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return static_cast<bool>(in);
}

}  // namespace

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("hash_file: cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

void save_distances(const std::filesystem::path& path,
                    const DistanceMatrix& dist) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_pod(out, kDistMagic);
  write_pod(out, kCacheVersion);
  write_pod(out, static_cast<std::uint64_t>(dist.size()));
  out.write(reinterpret_cast<const char*>(dist.raw().data()),
            static_cast<std::streamsize>(dist.raw().size() *
                                         sizeof(std::uint16_t)));
}

std::optional<DistanceMatrix> load_distances(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::uint32_t magic = 0, version = 0;
  std::uint64_t n = 0;
  if (!read_pod(in, magic) || magic != kDistMagic) return std::nullopt;
  if (!read_pod(in, version) || version != kCacheVersion) return std::nullopt;
  if (!read_pod(in, n)) return std::nullopt;
  DistanceMatrix dist(n);
  in.read(reinterpret_cast<char*>(dist.raw().data()),
          static_cast<std::streamsize>(dist.raw().size() *
                                       sizeof(std::uint16_t)));
  if (!in) return std::nullopt;
  return dist;
}

void save_phase(const std::filesystem::path& path, const PhaseMatrix& phase) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_pod(out, kPhaseMagic);
  write_pod(out, kCacheVersion);
  write_pod(out, static_cast<std::uint64_t>(phase.size()));
  out.write(reinterpret_cast<const char*>(phase.raw().data()),
            static_cast<std::streamsize>(phase.raw().size() * sizeof(float)));
}

std::optional<PhaseMatrix> load_phase(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::uint32_t magic = 0, version = 0;
  std::uint64_t n = 0;
  if (!read_pod(in, magic) || magic != kPhaseMagic) return std::nullopt;
  if (!read_pod(in, version) || version != kCacheVersion) return std::nullopt;
  if (!read_pod(in, n)) return std::nullopt;
  PhaseMatrix phase(n);
  in.read(reinterpret_cast<char*>(phase.raw().data()),
          static_cast<std::streamsize>(phase.raw().size() * sizeof(float)));
  if (!in) return std::nullopt;
  return phase;
}

PreprocessResult compute_or_load_phase(const BaseGraph& graph,
                                       const std::filesystem::path& cache_dir,
                                       std::uint64_t content_key,
                                       unsigned num_threads) {
  namespace fs = std::filesystem;
  fs::path dir;
  if (!cache_dir.empty()) {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(content_key));
    dir = cache_dir / hex;
  }

  PreprocessResult res;
  if (!dir.empty()) {
    auto dist = load_distances(dir / "distances.bin");
    auto phase = load_phase(dir / "phase.bin");
    if (dist && phase && dist->size() == graph.num_nodes &&
        phase->size() == graph.num_nodes) {
      res.distances = std::move(*dist);
      res.dia = diameters(res.distances);
      res.phase = std::move(*phase);
      res.cache_hit = true;
      return res;
    }
  }

  res.distances = all_pairs_distances(graph, num_threads);
  res.dia = diameters(res.distances);
  res.phase = phase_encode(res.distances, res.dia);
  res.cache_hit = false;

  if (!dir.empty()) {
    fs::create_directories(dir);
    save_distances(dir / "distances.bin", res.distances);
    save_phase(dir / "phase.bin", res.phase);
  }
  return res;
}

PcaCache compute_or_load_pca(const PhaseMatrix& phase, std::size_t d_prime,
                             const std::filesystem::path& cache_dir,
                             std::uint64_t content_key) {
  namespace fs = std::filesystem;
  fs::path file;
  if (!cache_dir.empty()) {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(content_key));
    file = cache_dir / hex / ("pca-" + std::to_string(d_prime) + ".bin");
  }

  PcaCache out;
  if (!file.empty()) {
    std::ifstream in(file, std::ios::binary);
    if (in) {
      std::uint32_t magic = 0, version = 0;
      std::uint64_t n = 0, dp = 0;
      if (read_pod(in, magic) && magic == kPcaMagic && read_pod(in, version) &&
          version == kCacheVersion && read_pod(in, n) && read_pod(in, dp) &&
          n == phase.size() && dp == d_prime) {
        if (read_pod(in, out.total_variance)) {
          out.eigenvalues.resize(dp);
          in.read(reinterpret_cast<char*>(out.eigenvalues.data()),
                  static_cast<std::streamsize>(dp * sizeof(double)));
          out.scores = Tensor(n, dp);
          in.read(reinterpret_cast<char*>(out.scores.data.data()),
                  static_cast<std::streamsize>(n * dp * sizeof(double)));
          if (in) {
            out.cache_hit = true;
            return out;
          }
        }
      }
    }
  }

  PcaResult pca = pca_reduce(phase, d_prime);
  out.scores = std::move(pca.scores);
  out.eigenvalues = std::move(pca.eigenvalues);
  out.total_variance = pca.total_variance;
  out.cache_hit = false;

  if (!file.empty()) {
    fs::create_directories(file.parent_path());
    std::ofstream o(file, std::ios::binary | std::ios::trunc);
    if (!o) throw std::runtime_error("cannot write " + file.string());
    write_pod(o, kPcaMagic);
    write_pod(o, kCacheVersion);
    write_pod(o, static_cast<std::uint64_t>(phase.size()));
    write_pod(o, static_cast<std::uint64_t>(d_prime));
    write_pod(o, out.total_variance);
    o.write(reinterpret_cast<const char*>(out.eigenvalues.data()),
            static_cast<std::streamsize>(d_prime * sizeof(double)));
    o.write(reinterpret_cast<const char*>(out.scores.data.data()),
            static_cast<std::streamsize>(out.scores.data.size() *
                                         sizeof(double)));
  }
  return out;
}

}  // namespace padel
