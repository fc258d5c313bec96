#include "cmst/common_space.hpp"

#include <algorithm>
#include <cmath>

#include "cmst/errors.hpp"

namespace cmst {

namespace {

constexpr double kProbClamp = 1e-12;

double sign_or_zero(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

double clamp_prob(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

void check_terms(std::span<const TransferTerms> terms) {
  if (terms.empty()) throw InputError("transfer loss: no triples");
}

// Stable per-row log-sum-exp and softmax shared by the label-loss paths.
struct SoftmaxRow {
  double lse = 0.0;
  std::vector<double> probs;
};

SoftmaxRow softmax_row(std::span<const double> logits) {
  SoftmaxRow r;
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  r.probs.resize(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    r.probs[j] = std::exp(logits[j] - zmax);
    denom += r.probs[j];
  }
  for (double& p : r.probs) p /= denom;
  r.lse = zmax + std::log(denom);
  return r;
}

std::size_t onehot_index(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

double cross_entropy_from_logits(const Matrix& logits, const Matrix& labels,
                                 Matrix* dlogits) {
  if (logits.rows() != labels.rows() || logits.cols() != labels.cols()) {
    throw ShapeError("label_loss: logits and labels shapes differ");
  }
  if (logits.rows() == 0) throw InputError("label_loss: empty batch");
  const double inv_m = 1.0 / static_cast<double>(logits.rows());
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const SoftmaxRow sm = softmax_row(logits.row(i));
    const std::size_t truth = onehot_index(labels.row(i));
    loss += sm.lse - logits(i, truth);
    if (dlogits) {
      for (std::size_t j = 0; j < logits.cols(); ++j) {
        (*dlogits)(i, j) =
            inv_m * (sm.probs[j] - (j == truth ? 1.0 : 0.0));
      }
    }
  }
  return loss * inv_m;
}

double bce_loss_and_upstream(const Matrix& probs, double target, double weight,
                             Matrix* upstream) {
  if (probs.cols() != 1) {
    throw ShapeError("discriminator output must be a single column");
  }
  if (probs.rows() == 0) throw InputError("adversarial loss: empty batch");
  const double inv_m = 1.0 / static_cast<double>(probs.rows());
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const double p = clamp_prob(probs(i, 0));
    loss -= inv_m * (target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
    if (upstream) {
      (*upstream)(i, 0) =
          weight * inv_m * (-target / p + (1.0 - target) / (1.0 - p));
    }
  }
  return loss;
}

}  // namespace

void ModalityDiscriminator::validate() const {
  if (net.layer_count() != 3) {
    throw ShapeError("ModalityDiscriminator: must have exactly 3 dense layers");
  }
  if (net.output_dim() != 1 ||
      net.layers().back().activation != Activation::Sigmoid) {
    throw ShapeError("ModalityDiscriminator: output must be a sigmoid scalar");
  }
}

const char* to_string(TransferMode m) {
  switch (m) {
    case TransferMode::Value:
      return "value";
    case TransferMode::Difference:
      return "difference";
    case TransferMode::Product:
      return "product";
    case TransferMode::None:
      return "none";
  }
  return "?";
}

const char* to_string(CommonMetric m) {
  return m == CommonMetric::SquaredEuclidean ? "sqeuclidean" : "euclidean";
}

TransferMode transfer_mode_from_string(const std::string& s) {
  if (s == "value") return TransferMode::Value;
  if (s == "difference") return TransferMode::Difference;
  if (s == "product") return TransferMode::Product;
  if (s == "none") return TransferMode::None;
  throw ConfigError("unknown transfer mode: " + s);
}

CommonMetric common_metric_from_string(const std::string& s) {
  if (s == "sqeuclidean") return CommonMetric::SquaredEuclidean;
  if (s == "euclidean") return CommonMetric::Euclidean;
  throw ConfigError("unknown common-space metric: " + s);
}

std::pair<Matrix, Matrix> project(const GeneratorPair& gen, const Matrix& v_batch,
                                  const Matrix& t_batch) {
  if (v_batch.cols() != gen.g_v.input_dim()) {
    throw ShapeError("project: image feature dim mismatch");
  }
  if (t_batch.cols() != gen.g_t.input_dim()) {
    throw ShapeError("project: text feature dim mismatch");
  }
  return {gen.g_v.forward_pure(v_batch), gen.g_t.forward_pure(t_batch)};
}

double cross_similarity(std::span<const double> a, std::span<const double> b) {
  return squared_distance(a, b);
}

double cross_distance(CommonMetric metric, std::span<const double> a,
                      std::span<const double> b) {
  const double sq = squared_distance(a, b);
  return metric == CommonMetric::SquaredEuclidean ? sq : std::sqrt(sq);
}

double transfer_loss_value(std::span<const TransferTerms> terms, double c_self) {
  check_terms(terms);
  double acc = 0.0;
  for (const TransferTerms& t : terms) {
    acc += std::abs(c_self - t.cross_pair) + std::abs(t.intra - t.cross_ref);
  }
  return acc / static_cast<double>(terms.size());
}

double transfer_loss_difference(std::span<const TransferTerms> terms,
                                double c_self) {
  check_terms(terms);
  double acc = 0.0;
  for (const TransferTerms& t : terms) {
    acc += std::abs((t.cross_pair - t.cross_ref) - (c_self - t.intra));
  }
  return acc / static_cast<double>(terms.size());
}

double transfer_loss_product(std::span<const TransferTerms> terms, double clamp) {
  check_terms(terms);
  double acc = 0.0;
  for (const TransferTerms& t : terms) {
    acc += std::min(std::abs(t.cross_ref - t.intra * t.cross_pair), clamp);
  }
  return acc / static_cast<double>(terms.size());
}

double transfer_loss(TransferMode mode, std::span<const TransferTerms> terms,
                     double c_self, double clamp) {
  switch (mode) {
    case TransferMode::Value:
      return transfer_loss_value(terms, c_self);
    case TransferMode::Difference:
      return transfer_loss_difference(terms, c_self);
    case TransferMode::Product:
      return transfer_loss_product(terms, clamp);
    case TransferMode::None:
      return 0.0;
  }
  return 0.0;
}

TransferTermGrads transfer_term_grad(TransferMode mode, const TransferTerms& t,
                                     double c_self, double clamp) {
  TransferTermGrads g;
  switch (mode) {
    case TransferMode::Value: {
      g.d_cross_pair = sign_or_zero(t.cross_pair - c_self);
      const double s = sign_or_zero(t.cross_ref - t.intra);
      g.d_cross_ref = s;
      g.d_intra = -s;
      break;
    }
    case TransferMode::Difference: {
      const double s =
          sign_or_zero((t.cross_pair - t.cross_ref) - (c_self - t.intra));
      g.d_cross_pair = s;
      g.d_cross_ref = -s;
      g.d_intra = s;
      break;
    }
    case TransferMode::Product: {
      const double arg = t.cross_ref - t.intra * t.cross_pair;
      if (std::abs(arg) >= clamp) break;  // clamped: flat
      const double s = sign_or_zero(arg);
      g.d_cross_ref = s;
      g.d_cross_pair = -s * t.intra;
      g.d_intra = -s * t.cross_pair;
      break;
    }
    case TransferMode::None:
      break;
  }
  return g;
}

void append_transfer_kink_args(TransferMode mode,
                               std::span<const TransferTerms> terms,
                               double c_self, double clamp,
                               std::vector<double>& kink_args) {
  for (const TransferTerms& t : terms) {
    switch (mode) {
      case TransferMode::Value:
        kink_args.push_back(c_self - t.cross_pair);
        kink_args.push_back(t.intra - t.cross_ref);
        break;
      case TransferMode::Difference:
        kink_args.push_back((t.cross_pair - t.cross_ref) - (c_self - t.intra));
        break;
      case TransferMode::Product: {
        const double arg = t.cross_ref - t.intra * t.cross_pair;
        kink_args.push_back(arg);
        kink_args.push_back(clamp - std::abs(arg));
        break;
      }
      case TransferMode::None:
        break;
    }
  }
}

double label_loss(const LabelClassifier& clf, const Matrix& s_batch,
                  const Matrix& labels) {
  const Matrix logits = clf.net.forward_pure(s_batch);
  return cross_entropy_from_logits(logits, labels, nullptr);
}

LabelLossGrad label_loss_grad(const LabelClassifier& clf, const Matrix& s_batch,
                              const Matrix& labels) {
  NetTrace trace;
  const Matrix logits = clf.net.forward(s_batch, trace);
  Matrix dlogits(logits.rows(), logits.cols());
  LabelLossGrad out;
  out.loss = cross_entropy_from_logits(logits, labels, &dlogits);
  BackwardResult back = clf.net.backward(trace, dlogits);
  out.clf_grads = std::move(back.grads);
  out.input_grad = std::move(back.input_grad);
  return out;
}

double label_loss_probed(const LabelClassifier& clf, const Matrix& s_batch,
                         const Matrix& labels, std::vector<double>& kink_args) {
  const Matrix logits = clf.net.forward_probed(s_batch, kink_args);
  return cross_entropy_from_logits(logits, labels, nullptr);
}

AdversarialLosses adversarial_losses(const ModalityDiscriminator& disc,
                                     const Matrix& s_v, const Matrix& s_t) {
  disc.validate();
  AdversarialLosses out;
  out.l_v = bce_loss_and_upstream(disc.net.forward_pure(s_v), 1.0, 1.0, nullptr);
  out.l_t = bce_loss_and_upstream(disc.net.forward_pure(s_t), 0.0, 1.0, nullptr);
  return out;
}

BceGradResult bce_through_discriminator(const ModalityDiscriminator& disc,
                                        const Matrix& inputs, double target,
                                        double weight) {
  NetTrace trace;
  const Matrix probs = disc.net.forward(inputs, trace);
  Matrix upstream(probs.rows(), 1);
  BceGradResult out;
  out.loss = bce_loss_and_upstream(probs, target, weight, &upstream);
  BackwardResult back = disc.net.backward(trace, upstream);
  out.disc_grads = std::move(back.grads);
  out.input_grad = std::move(back.input_grad);
  return out;
}

double bce_through_discriminator_probed(const ModalityDiscriminator& disc,
                                        const Matrix& inputs, double target,
                                        std::vector<double>& kink_args) {
  const Matrix probs = disc.net.forward_probed(inputs, kink_args);
  return bce_loss_and_upstream(probs, target, 1.0, nullptr);
}

double generator_objective(const LossParts& parts, const LossWeights& w) {
  return w.lab * parts.lab + w.sim * parts.sim + w.adv * (parts.l_v - parts.l_t);
}

double discriminator_objective(const LossParts& parts, const LossWeights& w) {
  return w.adv * (-parts.l_v + parts.l_t);
}

std::vector<TransferTriple> sample_transfer_triples(
    std::span<const std::size_t> pool, std::size_t batch_size, Rng& rng) {
  if (pool.size() < 2) {
    throw InputError("sample_transfer_triples: need at least 2 items");
  }
  std::vector<TransferTriple> triples;
  triples.reserve(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) {
    TransferTriple t;
    t.direction = (k % 2 == 0) ? TransferDirection::ImageIntra
                               : TransferDirection::TextIntra;
    const std::size_t aj = rng.uniform_int(0, pool.size() - 1);
    std::size_t ai = aj;
    do {
      ai = rng.uniform_int(0, pool.size() - 1);
    } while (ai == aj);
    t.anchor = pool[aj];
    t.reference = pool[ai];
    triples.push_back(t);
  }
  return triples;
}

std::vector<TransferTriple> sample_transfer_triples(
    const MultimodalDataset& dataset, std::size_t batch_size, Rng& rng) {
  if (!dataset.train_indices.empty()) {
    return sample_transfer_triples(
        std::span<const std::size_t>(dataset.train_indices), batch_size, rng);
  }
  std::vector<std::size_t> all(dataset.n());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return sample_transfer_triples(std::span<const std::size_t>(all), batch_size,
                                 rng);
}

GeneratorPair make_generator_pair(std::size_t d_v, std::size_t d_t,
                                  std::span<const std::size_t> hidden_dims,
                                  std::size_t d_s, const Rng& rng) {
  GeneratorPair gen;
  gen.g_v = MlpNetwork::make(d_v, hidden_dims, d_s, Activation::ReLU,
                             Activation::Identity);
  gen.g_t = MlpNetwork::make(d_t, hidden_dims, d_s, Activation::ReLU,
                             Activation::Identity);
  init_params(gen.g_v, rng.stream("gen_v"));
  init_params(gen.g_t, rng.stream("gen_t"));
  return gen;
}

LabelClassifier make_label_classifier(std::size_t d_s, std::size_t n_classes,
                                      const Rng& rng) {
  LabelClassifier clf;
  clf.net = MlpNetwork::make(d_s, {}, n_classes, Activation::ReLU,
                             Activation::Identity);
  init_params(clf.net, rng.stream("classifier"));
  return clf;
}

ModalityDiscriminator make_discriminator(std::size_t d_s, std::size_t hidden_dim,
                                         const Rng& rng) {
  ModalityDiscriminator disc;
  const std::size_t hidden[] = {hidden_dim, hidden_dim};
  disc.net = MlpNetwork::make(d_s, hidden, 1, Activation::ReLU,
                              Activation::Sigmoid);
  init_params(disc.net, rng.stream("discriminator"));
  disc.validate();
  return disc;
}

}  // namespace cmst
