#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "boml/bomla.hpp"
#include "boml/bomvi.hpp"

namespace boml {

// Versioned little-endian posterior container:
//   magic "BOMLCKPT1", u32 kind, u32 step, layer shape table, then the
//   double-precision payload: the mean, followed by either the
//   Kronecker pair lists with weights and per-layer diagonal prior
//   (bomla) or the log-sigma vectors (bomvi). Loads reject a wrong
//   magic/version and never return a partial posterior.
enum class CheckpointKind : std::uint32_t {
  kParams = 1,
  kBomla = 2,
  kBomvi = 3,
};

struct Checkpoint {
  CheckpointKind kind = CheckpointKind::kParams;
  std::uint32_t step = 0;
  std::vector<std::pair<int, int>> shapes;
  ParamSet mean;
  KroneckerPrecision precision;  // kBomla only
  ParamSet log_sigma;            // kBomvi only

  static Checkpoint from_params(const ParamSet& params, std::uint32_t step);
  static Checkpoint from_bomla(const LaplacePosterior& post);
  static Checkpoint from_bomvi(const MeanFieldPosterior& phi, std::uint32_t step);
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace boml
