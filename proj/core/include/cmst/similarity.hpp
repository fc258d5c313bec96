#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cmst/datagen.hpp"
#include "cmst/nn.hpp"
#include "cmst/optimizer.hpp"
#include "cmst/rng.hpp"

namespace cmst {

enum class Modality { Image, Text };

const char* to_string(Modality m);

// Intra-modal similarity network: embeds one modality's features and
// measures similarity as squared Euclidean distance between embeddings.
// Note the distance semantics: larger values mean less similar.
struct SimilarityNet {
  MlpNetwork net;
  Modality modality = Modality::Image;
};

struct PairBatch {
  Matrix left;                     // b x d
  Matrix right;                    // b x d
  std::vector<double> same_class;  // u in {0,1}, 1 when labels match
};

struct Margin {
  double c = 1.0;
};

double intra_distance(const SimilarityNet& h, std::span<const double> x_i,
                      std::span<const double> x_j);

// Row-wise distances between two embedded batches of equal size.
std::vector<double> intra_distances(const SimilarityNet& h, const Matrix& left,
                                    const Matrix& right);

// Contrastive objective: matched pairs pay their distance, mismatched pairs
// pay the hinge max(C - s, 0). Mean reduction over the batch.
double contrastive_loss(const SimilarityNet& h, const PairBatch& batch,
                        Margin margin);

struct ContrastiveGradResult {
  double loss = 0.0;
  NetGradients grads;
};

ContrastiveGradResult contrastive_loss_grad(const SimilarityNet& h,
                                            const PairBatch& batch,
                                            Margin margin);

// Probed variant for gradient checks: appends ReLU pre-activations and the
// hinge arguments C - s of mismatched pairs to `kink_args`.
double contrastive_loss_probed(const SimilarityNet& h, const PairBatch& batch,
                               Margin margin, std::vector<double>& kink_args);

// Samples a pair batch from the dataset's train split with the requested
// fraction of same-class pairs (rounded). Positives never pair an item with
// itself unless its class is a singleton.
PairBatch sample_pairs(const MultimodalDataset& dataset, Modality modality,
                       std::size_t batch_size, double positive_fraction,
                       Rng& rng);

struct SiameseTrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double positive_fraction = 0.5;
  double margin = 1.0;
  std::vector<std::size_t> hidden_dims = {128, 128};
  std::size_t embed_dim = 32;
  OptimizerConfig optimizer;
};

SimilarityNet make_similarity_net(const MultimodalDataset& dataset,
                                  Modality modality,
                                  const SiameseTrainConfig& cfg,
                                  const Rng& rng);

// Trains one modality's similarity net on the train split; per-epoch mean
// losses are appended to `epoch_losses` when given.
SimilarityNet train_siamese(const MultimodalDataset& dataset, Modality modality,
                            const SiameseTrainConfig& cfg, Rng& rng,
                            std::vector<double>* epoch_losses = nullptr);

}  // namespace cmst
