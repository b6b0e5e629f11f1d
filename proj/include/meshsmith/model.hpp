#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "meshsmith/autodiff.hpp"
#include "meshsmith/mesh.hpp"

namespace meshsmith {

/// Graph network that proposes a displacement for a star's free node:
///   X_h   = X W_l + b_l          (linear embedding of normalized coords)
///   X^_h  = GraphNorm(X_h)
///   X_g   = A~ relu(X^_h) W_g + X^_h   (residual graph convolution)
///   out   = FC -> InstanceNorm -> relu -> FC   on the free node's row
/// position = free_node + d * out. One parameter set serves every star
/// degree; zeroing the final FC layer makes the model the identity map.

/// Uniform similarity frame of a star: origin at the free node, scale d =
/// max bounding-box extent over center and ring. Normalized coordinates
/// (p - origin)/d lie in [-1, 1] with the free node at the origin.
struct NormalizationFrame {
  Vec2 origin;
  double scale = 1.0;
};

struct ModelParams {
  int hidden_dim = 32;
  std::uint64_t seed = 0;
  ad::Tensor W_l, b_l;                       // 2xH, 1xH
  ad::Tensor gn_gamma, gn_beta, gn_alpha;    // GraphNorm affine+shift, 1xH
  ad::Tensor W_g;                            // HxH
  ad::Tensor in_gamma, in_beta;              // InstanceNorm affine, 1xH
  ad::Tensor mlp_W1, mlp_b1;                 // HxH, 1xH
  ad::Tensor mlp_W2, mlp_b2;                 // Hx2, 1x2

  /// Fixed canonical order, shared by the optimizer state, checkpoint
  /// layout, and taped-parameter staging.
  std::vector<ad::Tensor*> tensors();
  std::vector<const ad::Tensor*> tensors() const;
  long parameter_count() const;
};

/// Glorot-uniform weights, zero biases, identity norms. H >= 2.
ModelParams init_params(int hidden_dim, std::uint64_t seed);

/// Throws ZeroExtent when all star points coincide.
NormalizationFrame star_frame(const StarPolygon& star);

/// (n+1)x2 feature matrix; row 0 is the free node (exactly zero), rows 1..n
/// the ring in order.
ad::Tensor star_features(const StarPolygon& star, const NormalizationFrame& frame);

/// Symmetrically normalized adjacency with self-loops over an undirected
/// edge list: entries 1/sqrt(d^_i d^_j) where d^ counts neighbors plus self.
ad::Tensor normalized_adjacency_from(const std::vector<std::array<int, 2>>& edges,
                                     int node_count);
/// Star connectivity: spokes center-ring plus the ring cycle; id 0 = center.
ad::Tensor normalized_adjacency(const StarPolygon& star);

/// GraphNorm: per column, x^ = gamma (x - alpha mu)/sigma + beta with
/// sigma = sqrt(mean((x - alpha mu)^2)) floored at 1e-6.
int graph_norm(ad::Tape& tape, int x, int gamma, int beta, int alpha);
/// Same normalization across the channels of a single 1xH row.
int instance_norm_row(ad::Tape& tape, int x, int gamma, int beta);

/// Parameters staged as tape leaves, in ModelParams::tensors() order.
struct TapedModel {
  ad::Tape* tape = nullptr;
  std::vector<int> param_ids;
};
TapedModel stage_params(ad::Tape& tape, const ModelParams& params);

/// Records the full forward pass; returns the id of the 1x2 normalized
/// displacement. `frame` receives the star's normalization frame.
int forward_taped(const TapedModel& model, const StarPolygon& star,
                  NormalizationFrame& frame);

/// Kernel-backed inference; same arithmetic as the taped path, returns the
/// proposed (denormalized) position.
Vec2 forward_position(const ModelParams& params, const StarPolygon& star);

/// JSON checkpoint, format tag "gmsnet-v1"; reals stored as 17-significant-
/// digit decimal strings so the round trip is bit-exact.
void save_checkpoint(const ModelParams& params, const std::string& path);
/// Throws VersionMismatch on a foreign format tag or, when expected_hidden
/// is given, a different hidden size; CorruptFile on anything malformed.
ModelParams load_checkpoint(const std::string& path, int expected_hidden = -1);

}  // namespace meshsmith
