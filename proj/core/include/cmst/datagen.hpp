#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cmst/matrix.hpp"

namespace cmst {

// Synthetic paired-modality generator settings. Class prototypes live in a
// latent space; each modality observes the latent through its own fixed
// random map squashed by tanh, plus small feature noise.
struct SyntheticConfig {
  std::size_t n_classes = 10;
  std::size_t n_pairs = 1000;
  std::size_t d_v = 128;
  std::size_t d_t = 64;
  std::size_t latent_dim = 16;
  double class_sep = 3.0;      // minimum pairwise prototype distance
  double noise_sigma = 0.75;   // per-item latent spread
  double feature_noise = 0.05; // additive noise after the modality map
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError naming the offending field
};

// Paired image-like and text-like features with one-hot labels and
// train/test splits. Rows are items; pair i shares one label across
// both modalities.
struct MultimodalDataset {
  Matrix V;  // n x d_v
  Matrix T;  // n x d_t
  Matrix Y;  // n x c, one-hot rows
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;

  std::size_t n() const { return V.rows(); }
  std::size_t d_v() const { return V.cols(); }
  std::size_t d_t() const { return T.cols(); }
  std::size_t n_classes() const { return Y.cols(); }
  std::size_t label_of(std::size_t i) const;
};

MultimodalDataset generate_synthetic(const SyntheticConfig& cfg);

// Stratified-by-class disjoint train/test split, deterministic under seed.
void split_dataset(MultimodalDataset& dataset, double test_fraction,
                   std::uint64_t seed);

// Dataset directory format: meta.json plus V.f64 / T.f64 / Y.f64 binary
// payloads (magic CMSTMAT1, u32 rows, u32 cols, row-major f64, all
// little-endian). Round trips are bit-exact.
void save_dataset(const MultimodalDataset& dataset,
                  const std::filesystem::path& dir);
MultimodalDataset load_dataset(const std::filesystem::path& dir);

void save_matrix_file(const Matrix& m, const std::filesystem::path& path);
Matrix load_matrix_file(const std::filesystem::path& path);

}  // namespace cmst
