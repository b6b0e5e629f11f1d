#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshsmith/delaunay.hpp"
#include "meshsmith/losses.hpp"
#include "meshsmith/model.hpp"
#include "meshsmith/smoothers.hpp"

namespace meshsmith {

struct TrainConfig {
  int epochs = 1000;  // the long low-rate tail is what stabilizes deployment
  int batch_size = 32;       // interior nodes sampled per mesh per epoch
  double initial_lr = 1e-2;
  int plateau_epochs = 10;   // epochs without val improvement before halving
  double lr_floor = 1e-5;
  int hidden_dim = 32;
  LossKind loss_kind = LossKind::Metric;
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;             // 1-based
  double train_loss = 0;
  double val_loss = 0;       // scored before the epoch's updates
  double lr = 0;             // rate in effect during the epoch
  long truncations = 0;      // training proposals clipped or zeroed
};

struct TrainingTrace {
  std::vector<EpochStats> epochs;
};

/// CSV with header epoch,train_loss,val_loss,lr,truncations; reals printed
/// with 17 significant digits.
std::string trace_to_csv(const TrainingTrace& trace);

struct TrainResult {
  ModelParams params;        // best validation snapshot
  TrainingTrace trace;
};

/// Label-free training: each epoch walks the train meshes in order, samples
/// batch_size interior nodes per mesh without replacement, runs the taped
/// forward pass, shift-truncates the proposed displacement (the surviving
/// 2^-k enters the tape as a constant factor), and takes one Adam step per
/// mesh on the batch-mean star loss. Validation nodes are sampled once up
/// front, so per-epoch losses are comparable; each epoch's val_loss scores
/// the raw proposals of the parameters entering the epoch, so epoch 1 reads
/// the untrained model and the curve spans the whole descent. The rate
/// halves after plateau_epochs stale epochs, floored at lr_floor. Meshes
/// are never modified. Deterministic given (dataset, config).
///
/// Throws EmptyDataset when the train or val split has no interior nodes.
TrainResult train_gmsnet(const Dataset& dataset, const TrainConfig& config);

/// Supervised baseline: one MLP per star degree, trained on optimizer-
/// produced target positions.

struct LabeledStar {
  StarPolygon star;
  Vec2 label;                // target position for the free node
};

/// Runs optimization_step on every interior node of every mesh; positions
/// are recorded, meshes are left untouched.
std::vector<LabeledStar> nn_generate_labels(const std::vector<Mesh>& meshes,
                                            const OptimConfig& opt = {});

struct NnTrainConfig {
  int min_degree = 3;
  int max_degree = 9;
  int hidden = 64;
  int epochs = 150;          // Adam steps per degree
  int batch_rows = 256;      // augmented rows per step
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct NnModel {
  int min_degree = 3;
  int max_degree = 9;
  int hidden = 64;
  std::uint64_t seed = 0;
  // 2n -> hidden -> hidden -> 2 with relu between; inputs are the
  // normalized ring coordinates, outputs normalized displacements.
  struct DegreeNet {
    int degree = 0;
    bool trained = false;
    ad::Tensor W1, b1, W2, b2, W3, b3;
  };
  std::vector<DegreeNet> nets;  // index degree - min_degree

  const DegreeNet* net_for(int degree) const;
  /// Degrees in range with no training samples (nn_step falls back to the
  /// ring mean for these).
  std::vector<int> missing_degrees() const;
};

/// Each sample is augmented with all n ring rotations mapping to the same
/// target. Degrees outside [min_degree, max_degree] are dropped; degrees
/// with no samples stay untrained. Deterministic given (labels, config).
NnModel train_nn_baseline(const std::vector<LabeledStar>& labels,
                          const NnTrainConfig& config = {});

/// Proposed position; ring-mean fallback when the degree has no net.
Vec2 nn_step(const NnModel& model, const StarPolygon& star);

/// JSON checkpoint, format tag "nnsmooth-v1", same bit-exact real encoding
/// as the graph-model checkpoint.
void save_nn_checkpoint(const NnModel& model, const std::string& path);
NnModel load_nn_checkpoint(const std::string& path);

}  // namespace meshsmith
