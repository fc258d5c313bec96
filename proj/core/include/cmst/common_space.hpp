#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmst/datagen.hpp"
#include "cmst/nn.hpp"
#include "cmst/rng.hpp"

namespace cmst {

// Projection networks into the shared space: g_v maps image features,
// g_t maps text features, both to the same dimension d_s.
struct GeneratorPair {
  MlpNetwork g_v;
  MlpNetwork g_t;

  std::size_t common_dim() const { return g_v.output_dim(); }
};

// Classifier over common-space vectors; outputs logits, softmax semantics
// live in the loss.
struct LabelClassifier {
  MlpNetwork net;
};

// Predicts which modality a common-space vector came from. Exactly three
// dense layers, sigmoid scalar output. Convention: image = 1, text = 0.
struct ModalityDiscriminator {
  MlpNetwork net;

  void validate() const;
};

enum class TransferMode { Value, Difference, Product, None };
enum class CommonMetric { SquaredEuclidean, Euclidean };

const char* to_string(TransferMode m);
const char* to_string(CommonMetric m);
TransferMode transfer_mode_from_string(const std::string& s);
CommonMetric common_metric_from_string(const std::string& s);

enum class TransferDirection { ImageIntra, TextIntra };

// One similarity-transfer sample: the intra-modal distance between the
// reference and the anchor constrains a cross-modal distance at the anchor.
struct TransferTriple {
  std::size_t reference = 0;  // i
  std::size_t anchor = 0;     // j, i != j
  TransferDirection direction = TransferDirection::ImageIntra;
};

// The three similarity values a triple contributes to the transfer losses.
struct TransferTerms {
  double intra = 0.0;       // s(x_i, x_j) in the reference modality
  double cross_pair = 0.0;  // s of the anchor's own cross-modal pair
  double cross_ref = 0.0;   // s of the reference item to the anchor
};

std::pair<Matrix, Matrix> project(const GeneratorPair& gen,
                                  const Matrix& v_batch, const Matrix& t_batch);

// Squared Euclidean distance between two common-space vectors.
double cross_similarity(std::span<const double> a, std::span<const double> b);
double cross_distance(CommonMetric metric, std::span<const double> a,
                      std::span<const double> b);

// Value transferring: the anchor pair is pulled to the self-similarity
// constant and the reference cross distance to the intra distance.
double transfer_loss_value(std::span<const TransferTerms> terms, double c_self);
// Difference transferring: matches distance differences instead of raw
// values, so a constant shift of the cross-space terms cancels out.
double transfer_loss_difference(std::span<const TransferTerms> terms,
                                double c_self);
// Product transferring: the cross distance is matched to the product of the
// chain intra * cross_pair. No normalization; `clamp` only guards overflow.
double transfer_loss_product(std::span<const TransferTerms> terms,
                             double clamp = 1e3);

double transfer_loss(TransferMode mode, std::span<const TransferTerms> terms,
                     double c_self, double clamp = 1e3);

// Per-triple subgradient of the (unreduced) transfer term w.r.t. the three
// similarity values; zero at kinks and inside the product clamp.
struct TransferTermGrads {
  double d_intra = 0.0;
  double d_cross_pair = 0.0;
  double d_cross_ref = 0.0;
};

TransferTermGrads transfer_term_grad(TransferMode mode, const TransferTerms& t,
                                     double c_self, double clamp = 1e3);

// Appends the absolute-value (and product-clamp) kink arguments for
// gradient-check exclusion windows.
void append_transfer_kink_args(TransferMode mode,
                               std::span<const TransferTerms> terms,
                               double c_self, double clamp,
                               std::vector<double>& kink_args);

// Mean softmax cross-entropy of the classifier over a batch of common-space
// vectors with one-hot labels. Log-sum-exp stabilized.
double label_loss(const LabelClassifier& clf, const Matrix& s_batch,
                  const Matrix& labels);

struct LabelLossGrad {
  double loss = 0.0;
  NetGradients clf_grads;
  Matrix input_grad;  // gradient w.r.t. the common-space batch
};

LabelLossGrad label_loss_grad(const LabelClassifier& clf, const Matrix& s_batch,
                              const Matrix& labels);

double label_loss_probed(const LabelClassifier& clf, const Matrix& s_batch,
                         const Matrix& labels, std::vector<double>& kink_args);

struct AdversarialLosses {
  double l_v = 0.0;
  double l_t = 0.0;
};

// Binary cross-entropy of the discriminator on each modality's projections
// against its own label (image = 1, text = 0). Probabilities are clamped to
// [1e-12, 1 - 1e-12] before the log.
AdversarialLosses adversarial_losses(const ModalityDiscriminator& disc,
                                     const Matrix& s_v, const Matrix& s_t);

struct BceGradResult {
  double loss = 0.0;       // unweighted BCE
  NetGradients disc_grads;  // scaled by `weight`
  Matrix input_grad;        // scaled by `weight`
};

// BCE of the discriminator on `inputs` against the constant `target`,
// with gradients scaled by `weight` (use -1 for terms that enter an
// objective negatively).
BceGradResult bce_through_discriminator(const ModalityDiscriminator& disc,
                                        const Matrix& inputs, double target,
                                        double weight);

double bce_through_discriminator_probed(const ModalityDiscriminator& disc,
                                        const Matrix& inputs, double target,
                                        std::vector<double>& kink_args);

struct LossParts {
  double lab = 0.0;
  double sim = 0.0;
  double l_v = 0.0;
  double l_t = 0.0;
};

struct LossWeights {
  double lab = 1.0;
  double sim = 1.0;
  double adv = 1.0;
};

// L_G = lab + sim + L_V - L_T and L_D = -L_V + L_T, combined verbatim with
// unit weights by default.
double generator_objective(const LossParts& parts, const LossWeights& w = {});
double discriminator_objective(const LossParts& parts, const LossWeights& w = {});

// Uniform (i, j, direction) samples with i != j, alternating directions so
// any even batch is exactly balanced.
std::vector<TransferTriple> sample_transfer_triples(
    std::span<const std::size_t> pool, std::size_t batch_size, Rng& rng);
std::vector<TransferTriple> sample_transfer_triples(
    const MultimodalDataset& dataset, std::size_t batch_size, Rng& rng);

GeneratorPair make_generator_pair(std::size_t d_v, std::size_t d_t,
                                  std::span<const std::size_t> hidden_dims,
                                  std::size_t d_s, const Rng& rng);
LabelClassifier make_label_classifier(std::size_t d_s, std::size_t n_classes,
                                      const Rng& rng);
ModalityDiscriminator make_discriminator(std::size_t d_s,
                                         std::size_t hidden_dim, const Rng& rng);

}  // namespace cmst
