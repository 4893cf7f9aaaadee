#include "dlab/sample_path.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "dlab/errors.hpp"

namespace dlab {

SamplePath::SamplePath(TimeGrid grid, int dim) : grid_(grid) {
  if (dim < 1) throw std::invalid_argument("SamplePath: dim must be >= 1");
  values_ = Eigen::MatrixXd::Zero(grid.n_steps + 1, dim);
}

SamplePath::SamplePath(TimeGrid grid, Eigen::MatrixXd values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.rows() != grid.n_steps + 1) {
    throw std::invalid_argument("SamplePath: values must have n_steps+1 rows");
  }
  if (values_.cols() < 1) throw std::invalid_argument("SamplePath: dim must be >= 1");
}

std::int64_t SamplePath::clamp_step(std::int64_t step) const {
  return std::clamp<std::int64_t>(step, 0, grid_.n_steps);
}

Eigen::RowVectorXd SamplePath::state_extended(std::int64_t step) const {
  return values_.row(clamp_step(step));
}

Eigen::RowVectorXd SamplePath::value_at_time(double s) const {
  if (s <= grid_.t0) return values_.row(0);
  if (s >= grid_.T) return values_.row(grid_.n_steps);
  const auto k = static_cast<std::int64_t>(std::llround((s - grid_.t0) / grid_.dt));
  return values_.row(clamp_step(k));
}

void PathEnsemble::validate() const {
  if (paths.empty()) throw std::invalid_argument("PathEnsemble: requires M >= 1");
  const TimeGrid& g = paths.front().grid();
  const int d = paths.front().dim();
  for (const auto& p : paths) {
    if (!(p.grid() == g) || p.dim() != d) {
      throw std::invalid_argument("PathEnsemble: paths must share grid and dim");
    }
  }
}

PathEnsemble ensemble_sum(const PathEnsemble& a, const PathEnsemble& b,
                          const std::string& label) {
  if (a.size() != b.size() || !(a.grid() == b.grid()) || a.dim() != b.dim()) {
    throw std::invalid_argument("ensemble_sum: ensembles must match in size, grid and dim");
  }
  PathEnsemble out;
  out.seed = a.seed;
  out.label = label;
  out.paths.reserve(a.paths.size());
  for (std::size_t i = 0; i < a.paths.size(); ++i) {
    out.paths.emplace_back(a.grid(), a.paths[i].values() + b.paths[i].values());
  }
  return out;
}

void write_csv(const PathEnsemble& ensemble, const std::string& filename) {
  ensemble.validate();
  std::ofstream out(filename);
  if (!out) throw NumericalError("write_csv: cannot open " + filename);
  out << "path_id,step,s";
  for (int c = 0; c < ensemble.dim(); ++c) out << ",x_" << (c + 1);
  out << "\n";
  char buf[32];
  const TimeGrid& g = ensemble.grid();
  for (std::int64_t i = 0; i < ensemble.size(); ++i) {
    const auto& vals = ensemble.paths[i].values();
    for (std::int64_t k = 0; k <= g.n_steps; ++k) {
      out << i << ',' << k;
      std::snprintf(buf, sizeof(buf), ",%.17g", g.time_at(k));
      out << buf;
      for (int c = 0; c < ensemble.dim(); ++c) {
        std::snprintf(buf, sizeof(buf), ",%.17g", vals(k, c));
        out << buf;
      }
      out << "\n";
    }
  }
}

namespace {

constexpr char kMagic[4] = {'D', 'L', 'A', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void write_binary(const PathEnsemble& ensemble, const std::string& filename) {
  ensemble.validate();
  std::ofstream out(filename, std::ios::binary);
  if (!out) throw NumericalError("write_binary: cannot open " + filename);
  const TimeGrid& g = ensemble.grid();
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint64_t>(ensemble.size()));
  put(out, static_cast<std::uint64_t>(g.n_steps));
  put(out, static_cast<std::uint64_t>(ensemble.dim()));
  put(out, ensemble.seed);
  put(out, g.t0);
  put(out, g.T);
  const auto label_len = static_cast<std::uint32_t>(ensemble.label.size());
  put(out, label_len);
  out.write(ensemble.label.data(), label_len);
  for (const auto& p : ensemble.paths) {
    out.write(reinterpret_cast<const char*>(p.values().data()),
              static_cast<std::streamsize>(sizeof(double) * p.values().size()));
  }
}

PathEnsemble read_binary(const std::string& filename) {
  std::ifstream in(filename, std::ios::binary);
  if (!in) throw NumericalError("read_binary: cannot open " + filename);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::invalid_argument("read_binary: bad magic in " + filename);
  }
  std::uint32_t version = 0;
  get(in, version);
  if (version != kVersion) {
    throw std::invalid_argument("read_binary: unsupported version " + std::to_string(version));
  }
  std::uint64_t m = 0, n_steps = 0, dim = 0, seed = 0;
  get(in, m);
  get(in, n_steps);
  get(in, dim);
  get(in, seed);
  double t0 = 0, T = 0;
  get(in, t0);
  get(in, T);
  std::uint32_t label_len = 0;
  get(in, label_len);
  std::string label(label_len, '\0');
  in.read(label.data(), label_len);

  const TimeGrid grid = make_grid(t0, T, static_cast<std::int64_t>(n_steps));
  PathEnsemble out;
  out.seed = seed;
  out.label = label;
  out.paths.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    Eigen::MatrixXd vals(n_steps + 1, dim);
    in.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(sizeof(double) * vals.size()));
    out.paths.emplace_back(grid, std::move(vals));
  }
  if (!in) throw NumericalError("read_binary: truncated file " + filename);
  out.validate();
  return out;
}

}  // namespace dlab
