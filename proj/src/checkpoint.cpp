#include "boml/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "boml/errors.hpp"

namespace boml {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace {

constexpr char kMagic[9] = {'B', 'O', 'M', 'L', 'C', 'K', 'P', 'T', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_matrix(std::ostream& out, const DenseMatrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw FormatError("checkpoint truncated: " + path);
  return v;
}

double read_f64(std::istream& in, const std::string& path) {
  double v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw FormatError("checkpoint truncated: " + path);
  return v;
}

DenseMatrix read_matrix(std::istream& in, int rows, int cols, const std::string& path) {
  DenseMatrix m(rows, cols);
  if (!in.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(double))))
    throw FormatError("checkpoint truncated: " + path);
  return m;
}

}  // namespace

Checkpoint Checkpoint::from_params(const ParamSet& params, std::uint32_t step) {
  Checkpoint c;
  c.kind = CheckpointKind::kParams;
  c.step = step;
  c.mean = params;
  for (const auto& w : params.layers) c.shapes.emplace_back(w.rows(), w.cols());
  return c;
}

Checkpoint Checkpoint::from_bomla(const LaplacePosterior& post) {
  Checkpoint c;
  c.kind = CheckpointKind::kBomla;
  c.step = static_cast<std::uint32_t>(post.step);
  c.mean = post.mean;
  c.precision = post.precision;
  for (const auto& w : post.mean.layers) c.shapes.emplace_back(w.rows(), w.cols());
  return c;
}

Checkpoint Checkpoint::from_bomvi(const MeanFieldPosterior& phi, std::uint32_t step) {
  Checkpoint c;
  c.kind = CheckpointKind::kBomvi;
  c.step = step;
  c.mean = phi.mu;
  c.log_sigma = phi.log_sigma;
  for (const auto& w : phi.mu.layers) c.shapes.emplace_back(w.rows(), w.cols());
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestionError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<std::uint32_t>(ckpt.kind));
  write_u32(out, ckpt.step);
  write_u32(out, static_cast<std::uint32_t>(ckpt.shapes.size()));
  for (const auto& [r, c] : ckpt.shapes) {
    write_u32(out, static_cast<std::uint32_t>(r));
    write_u32(out, static_cast<std::uint32_t>(c));
  }
  for (const auto& w : ckpt.mean.layers) write_matrix(out, w);
  if (ckpt.kind == CheckpointKind::kBomla) {
    for (std::size_t l = 0; l < ckpt.shapes.size(); ++l) {
      const auto& layer = ckpt.precision.layers[l];
      write_f64(out, layer.prior_diag);
      write_u32(out, static_cast<std::uint32_t>(layer.pairs.size()));
      for (const auto& pair : layer.pairs) {
        write_f64(out, pair.weight);
        write_matrix(out, pair.left);
        write_matrix(out, pair.right);
      }
    }
  } else if (ckpt.kind == CheckpointKind::kBomvi) {
    for (const auto& w : ckpt.log_sigma.layers) write_matrix(out, w);
  }
  if (!out) throw IngestionError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open checkpoint: " + path);
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError("bad checkpoint magic/version in: " + path);

  Checkpoint c;
  const std::uint32_t kind = read_u32(in, path);
  if (kind < 1 || kind > 3) throw FormatError("unknown checkpoint kind in: " + path);
  c.kind = static_cast<CheckpointKind>(kind);
  c.step = read_u32(in, path);
  const std::uint32_t layers = read_u32(in, path);
  if (layers == 0 || layers > 1024) throw FormatError("implausible layer count in: " + path);
  for (std::uint32_t l = 0; l < layers; ++l) {
    const int r = static_cast<int>(read_u32(in, path));
    const int cc = static_cast<int>(read_u32(in, path));
    if (r <= 0 || cc <= 0 || static_cast<long>(r) * cc > (1L << 26))
      throw FormatError("implausible layer shape in: " + path);
    c.shapes.emplace_back(r, cc);
  }
  for (const auto& [r, cc] : c.shapes) c.mean.layers.push_back(read_matrix(in, r, cc, path));
  if (c.kind == CheckpointKind::kBomla) {
    for (const auto& [r, cc] : c.shapes) {
      LayerPrecision layer;
      layer.prior_diag = read_f64(in, path);
      const std::uint32_t pairs = read_u32(in, path);
      if (pairs > (1u << 16)) throw FormatError("implausible pair count in: " + path);
      for (std::uint32_t p = 0; p < pairs; ++p) {
        KroneckerPair pair;
        pair.weight = read_f64(in, path);
        pair.left = read_matrix(in, cc, cc, path);
        pair.right = read_matrix(in, r, r, path);
        layer.pairs.push_back(std::move(pair));
      }
      c.precision.layers.push_back(std::move(layer));
    }
  } else if (c.kind == CheckpointKind::kBomvi) {
    for (const auto& [r, cc] : c.shapes) c.log_sigma.layers.push_back(read_matrix(in, r, cc, path));
  }
  // Reject trailing garbage so truncation and corruption are symmetric.
  char extra;
  if (in.read(&extra, 1)) throw FormatError("trailing bytes in checkpoint: " + path);
  return c;
}

}  // namespace boml
