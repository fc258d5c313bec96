#include "cmst/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "cmst/errors.hpp"

namespace cmst {

namespace {

const Matrix& modality_features(const MultimodalDataset& ds, Modality m) {
  return m == Modality::Image ? ds.V : ds.T;
}

struct PairLossTerms {
  double loss = 0.0;
  // d loss / d s_k for each pair, already mean-reduced.
  std::vector<double> weight;
  std::vector<double> distances;
};

PairLossTerms pair_loss_terms(std::span<const double> distances,
                              std::span<const double> same_class, double margin) {
  PairLossTerms t;
  const double inv_b = 1.0 / static_cast<double>(distances.size());
  t.weight.resize(distances.size(), 0.0);
  t.distances.assign(distances.begin(), distances.end());
  for (std::size_t k = 0; k < distances.size(); ++k) {
    const double s = distances[k];
    if (same_class[k] != 0.0) {
      t.loss += inv_b * s;
      t.weight[k] = inv_b;
    } else {
      const double hinge = margin - s;
      if (hinge > 0.0) {
        t.loss += inv_b * hinge;
        t.weight[k] = -inv_b;
      }
    }
  }
  return t;
}

std::vector<double> rowwise_sq_distances(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("rowwise distances: embedded batch shapes differ");
  }
  std::vector<double> out(a.rows());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    out[k] = squared_distance(a.row(k), b.row(k));
  }
  return out;
}

void check_batch(const SimilarityNet& h, const PairBatch& batch) {
  if (batch.left.rows() != batch.right.rows() ||
      batch.left.rows() != batch.same_class.size()) {
    throw ShapeError("PairBatch: left/right/u row counts differ");
  }
  if (batch.left.rows() == 0) throw InputError("PairBatch: empty batch");
  if (batch.left.cols() != h.net.input_dim() ||
      batch.right.cols() != h.net.input_dim()) {
    throw ShapeError("PairBatch: feature dim does not match similarity net");
  }
}

}  // namespace

const char* to_string(Modality m) {
  return m == Modality::Image ? "image" : "text";
}

double intra_distance(const SimilarityNet& h, std::span<const double> x_i,
                      std::span<const double> x_j) {
  if (x_i.size() != h.net.input_dim() || x_j.size() != h.net.input_dim()) {
    throw ShapeError("intra_distance: input dim mismatch");
  }
  Matrix batch(2, x_i.size());
  std::copy(x_i.begin(), x_i.end(), batch.row(0).begin());
  std::copy(x_j.begin(), x_j.end(), batch.row(1).begin());
  const Matrix emb = h.net.forward_pure(batch);
  return squared_distance(emb.row(0), emb.row(1));
}

std::vector<double> intra_distances(const SimilarityNet& h, const Matrix& left,
                                    const Matrix& right) {
  const Matrix el = h.net.forward_pure(left);
  const Matrix er = h.net.forward_pure(right);
  return rowwise_sq_distances(el, er);
}

double contrastive_loss(const SimilarityNet& h, const PairBatch& batch,
                        Margin margin) {
  check_batch(h, batch);
  const std::vector<double> s = intra_distances(h, batch.left, batch.right);
  return pair_loss_terms(s, batch.same_class, margin.c).loss;
}

ContrastiveGradResult contrastive_loss_grad(const SimilarityNet& h,
                                            const PairBatch& batch,
                                            Margin margin) {
  check_batch(h, batch);
  NetTrace trace_left, trace_right;
  const Matrix el = h.net.forward(batch.left, trace_left);
  const Matrix er = h.net.forward(batch.right, trace_right);
  const std::vector<double> s = rowwise_sq_distances(el, er);
  const PairLossTerms terms = pair_loss_terms(s, batch.same_class, margin.c);

  // d s_k / d el_k = 2 (el_k - er_k); the right side gets the negation.
  Matrix upstream_left(el.rows(), el.cols());
  Matrix upstream_right(el.rows(), el.cols());
  for (std::size_t k = 0; k < el.rows(); ++k) {
    for (std::size_t c = 0; c < el.cols(); ++c) {
      const double g = terms.weight[k] * 2.0 * (el(k, c) - er(k, c));
      upstream_left(k, c) = g;
      upstream_right(k, c) = -g;
    }
  }

  ContrastiveGradResult result;
  result.loss = terms.loss;
  result.grads = h.net.backward(trace_left, upstream_left).grads;
  result.grads += h.net.backward(trace_right, upstream_right).grads;
  return result;
}

double contrastive_loss_probed(const SimilarityNet& h, const PairBatch& batch,
                               Margin margin, std::vector<double>& kink_args) {
  check_batch(h, batch);
  const Matrix el = h.net.forward_probed(batch.left, kink_args);
  const Matrix er = h.net.forward_probed(batch.right, kink_args);
  const std::vector<double> s = rowwise_sq_distances(el, er);
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (batch.same_class[k] == 0.0) kink_args.push_back(margin.c - s[k]);
  }
  return pair_loss_terms(s, batch.same_class, margin.c).loss;
}

PairBatch sample_pairs(const MultimodalDataset& dataset, Modality modality,
                       std::size_t batch_size, double positive_fraction,
                       Rng& rng) {
  if (dataset.n() == 0 || dataset.train_indices.empty()) {
    throw InputError("sample_pairs: empty dataset or train split");
  }
  if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) {
    throw InputError("sample_pairs: positive_fraction must be in (0, 1)");
  }
  if (batch_size == 0) throw InputError("sample_pairs: batch_size must be > 0");

  // Group the train split by class.
  std::vector<std::vector<std::size_t>> by_class(dataset.n_classes());
  for (std::size_t idx : dataset.train_indices) {
    by_class[dataset.label_of(idx)].push_back(idx);
  }
  std::vector<std::size_t> nonempty;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (!by_class[c].empty()) nonempty.push_back(c);
  }
  if (nonempty.size() < 2) {
    throw InputError("sample_pairs: need at least 2 classes to form negatives");
  }

  const auto n_pos = static_cast<std::size_t>(
      std::llround(positive_fraction * static_cast<double>(batch_size)));
  const Matrix& feats = modality_features(dataset, modality);

  std::vector<std::size_t> lefts, rights;
  lefts.reserve(batch_size);
  rights.reserve(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) {
    if (k < n_pos) {
      const std::size_t cls = nonempty[rng.uniform_int(0, nonempty.size() - 1)];
      const auto& members = by_class[cls];
      const std::size_t a = members[rng.uniform_int(0, members.size() - 1)];
      std::size_t b = a;
      if (members.size() > 1) {
        do {
          b = members[rng.uniform_int(0, members.size() - 1)];
        } while (b == a);
      }
      lefts.push_back(a);
      rights.push_back(b);
    } else {
      const std::size_t ca = nonempty[rng.uniform_int(0, nonempty.size() - 1)];
      std::size_t cb = ca;
      do {
        cb = nonempty[rng.uniform_int(0, nonempty.size() - 1)];
      } while (cb == ca);
      const auto& ma = by_class[ca];
      const auto& mb = by_class[cb];
      lefts.push_back(ma[rng.uniform_int(0, ma.size() - 1)]);
      rights.push_back(mb[rng.uniform_int(0, mb.size() - 1)]);
    }
  }

  PairBatch batch;
  batch.left = gather_rows(feats, lefts);
  batch.right = gather_rows(feats, rights);
  batch.same_class.resize(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) {
    batch.same_class[k] =
        dataset.label_of(lefts[k]) == dataset.label_of(rights[k]) ? 1.0 : 0.0;
  }
  return batch;
}

SimilarityNet make_similarity_net(const MultimodalDataset& dataset,
                                  Modality modality,
                                  const SiameseTrainConfig& cfg,
                                  const Rng& rng) {
  const std::size_t in_dim =
      modality == Modality::Image ? dataset.d_v() : dataset.d_t();
  SimilarityNet h;
  h.modality = modality;
  h.net = MlpNetwork::make(in_dim, cfg.hidden_dims, cfg.embed_dim,
                           Activation::ReLU, Activation::Identity);
  init_params(h.net, rng.stream(std::string("siamese/") + to_string(modality)));
  return h;
}

SimilarityNet train_siamese(const MultimodalDataset& dataset, Modality modality,
                            const SiameseTrainConfig& cfg, Rng& rng,
                            std::vector<double>* epoch_losses) {
  if (cfg.epochs < 1) throw ConfigError("train_siamese: epochs must be >= 1");
  SimilarityNet h = make_similarity_net(dataset, modality, cfg, rng);
  OptimizerState opt(cfg.optimizer, h.net);
  const std::size_t steps =
      std::max<std::size_t>(1, dataset.train_indices.size() / cfg.batch_size);
  const Margin margin{cfg.margin};

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      PairBatch batch = sample_pairs(dataset, modality, cfg.batch_size,
                                     cfg.positive_fraction, rng);
      ContrastiveGradResult r = contrastive_loss_grad(h, batch, margin);
      if (!std::isfinite(r.loss)) {
        throw NumericError("train_siamese: non-finite loss at epoch " +
                           std::to_string(epoch));
      }
      opt.step(h.net, r.grads);
      loss_sum += r.loss;
    }
    if (epoch_losses) {
      epoch_losses->push_back(loss_sum / static_cast<double>(steps));
    }
  }
  return h;
}

}  // namespace cmst
