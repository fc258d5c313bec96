#include "cmst/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "cmst/binio.hpp"
#include "cmst/errors.hpp"
#include "cmst/rng.hpp"

namespace cmst {

namespace {

constexpr char kMatrixMagic[8] = {'C', 'M', 'S', 'T', 'M', 'A', 'T', '1'};
constexpr int kPrototypeRetries = 1000;

Matrix draw_prototypes(const SyntheticConfig& cfg, Rng rng) {
  // Prototype scale grows with the requested separation so that rejection
  // sampling stays feasible.
  const double scale = std::max(1.0, cfg.class_sep / 2.0);
  Matrix protos(cfg.n_classes, cfg.latent_dim);
  int retries = 0;
  for (std::size_t k = 0; k < cfg.n_classes;) {
    std::vector<double> cand = rng.normal_vector(cfg.latent_dim, 0.0, scale);
    bool ok = true;
    for (std::size_t p = 0; p < k && ok; ++p) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < cfg.latent_dim; ++j) {
        const double d = cand[j] - protos(p, j);
        d2 += d * d;
      }
      ok = d2 >= cfg.class_sep * cfg.class_sep;
    }
    if (ok) {
      std::copy(cand.begin(), cand.end(), protos.row(k).begin());
      ++k;
    } else if (++retries > kPrototypeRetries) {
      throw ConfigError(
          "generate_synthetic: could not place class prototypes at class_sep=" +
          std::to_string(cfg.class_sep) + " after " +
          std::to_string(kPrototypeRetries) + " retries");
    }
  }
  return protos;
}

Matrix random_map(std::size_t out_dim, std::size_t latent_dim, Rng rng) {
  Matrix a(out_dim, latent_dim);
  std::vector<double> values = rng.normal_vector(
      out_dim * latent_dim, 0.0, 1.0 / std::sqrt(static_cast<double>(latent_dim)));
  std::copy(values.begin(), values.end(), a.data());
  return a;
}

// v = tanh(A z) + noise, with a hard bound check on the noise tail.
Matrix observe_modality(const Matrix& latents, const Matrix& map,
                        double feature_noise, Rng rng) {
  Matrix features = matmul(latents, map, false, true);
  const double bound = 1.0 + 10.0 * feature_noise;
  for (std::size_t i = 0; i < features.size(); ++i) {
    double v = std::tanh(features.data()[i]);
    if (feature_noise > 0.0) v += rng.normal(0.0, feature_noise);
    if (std::abs(v) > bound) {
      throw NumericError("generate_synthetic: feature exceeded hard bound");
    }
    features.data()[i] = v;
  }
  return features;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (n_classes < 2) throw ConfigError("SyntheticConfig: n_classes must be >= 2");
  if (n_pairs < n_classes) {
    throw ConfigError("SyntheticConfig: n_pairs must be >= n_classes");
  }
  if (d_v < 1 || d_t < 1 || latent_dim < 1) {
    throw ConfigError("SyntheticConfig: dims d_v, d_t, latent_dim must be >= 1");
  }
  if (!(noise_sigma >= 0.0)) {
    throw ConfigError("SyntheticConfig: noise_sigma must be >= 0");
  }
  if (!(feature_noise >= 0.0)) {
    throw ConfigError("SyntheticConfig: feature_noise must be >= 0");
  }
  if (!(class_sep >= 0.0)) {
    throw ConfigError("SyntheticConfig: class_sep must be >= 0");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("SyntheticConfig: test_fraction must be in (0, 1)");
  }
}

std::size_t MultimodalDataset::label_of(std::size_t i) const {
  const auto r = Y.row(i);
  std::size_t best = 0;
  for (std::size_t c = 1; c < r.size(); ++c) {
    if (r[c] > r[best]) best = c;
  }
  return best;
}

MultimodalDataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);

  const Matrix protos = draw_prototypes(cfg, root.stream("prototypes"));
  const Matrix map_v = random_map(cfg.d_v, cfg.latent_dim, root.stream("map_v"));
  const Matrix map_t = random_map(cfg.d_t, cfg.latent_dim, root.stream("map_t"));

  // Item i belongs to class i % c: balanced to within one item.
  Matrix latents(cfg.n_pairs, cfg.latent_dim);
  Matrix labels(cfg.n_pairs, cfg.n_classes);
  Rng latent_rng = root.stream("latents");
  for (std::size_t i = 0; i < cfg.n_pairs; ++i) {
    const std::size_t cls = i % cfg.n_classes;
    labels(i, cls) = 1.0;
    std::vector<double> noise =
        latent_rng.normal_vector(cfg.latent_dim, 0.0, cfg.noise_sigma);
    for (std::size_t j = 0; j < cfg.latent_dim; ++j) {
      latents(i, j) = protos(cls, j) + noise[j];
    }
  }

  MultimodalDataset ds;
  ds.seed = cfg.seed;
  ds.V = observe_modality(latents, map_v, cfg.feature_noise,
                          root.stream("feature_noise_v"));
  ds.T = observe_modality(latents, map_t, cfg.feature_noise,
                          root.stream("feature_noise_t"));
  ds.Y = std::move(labels);
  split_dataset(ds, cfg.test_fraction, cfg.seed);
  return ds;
}

void split_dataset(MultimodalDataset& dataset, double test_fraction,
                   std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InputError("split_dataset: test_fraction must be in (0, 1)");
  }
  std::vector<std::vector<std::size_t>> by_class(dataset.n_classes());
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    by_class[dataset.label_of(i)].push_back(i);
  }

  Rng rng = Rng(seed).stream("split");
  std::vector<std::size_t> train, test;
  for (std::size_t cls = 0; cls < by_class.size(); ++cls) {
    auto& members = by_class[cls];
    if (members.size() < 2) {
      throw InputError("split_dataset: class " + std::to_string(cls) +
                       " has fewer than 2 members");
    }
    rng.shuffle(members);
    const auto m = static_cast<double>(members.size());
    std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * m));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    test.insert(test.end(), members.begin(), members.begin() + n_test);
    train.insert(train.end(), members.begin() + n_test, members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  dataset.train_indices = std::move(train);
  dataset.test_indices = std::move(test);
}

void save_matrix_file(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_matrix_file: cannot open " + path.string());
  os.write(kMatrixMagic, sizeof(kMatrixMagic));
  binio::put_u32(os, static_cast<std::uint32_t>(m.rows()));
  binio::put_u32(os, static_cast<std::uint32_t>(m.cols()));
  binio::put_f64_span(os, {m.data(), m.size()});
  if (!os) throw IoError("save_matrix_file: write failed for " + path.string());
}

Matrix load_matrix_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_matrix_file: cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic))) {
    throw ParseError(path.filename().string() + ": truncated header");
  }
  if (!std::equal(magic, magic + 8, kMatrixMagic)) {
    throw ParseError(path.filename().string() +
                     ": bad magic in header, expected CMSTMAT1");
  }
  const std::uint32_t rows = binio::get_u32(is, "matrix header");
  const std::uint32_t cols = binio::get_u32(is, "matrix header");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) {
      throw ParseError(path.filename().string() + ": truncated payload at entry " +
                       std::to_string(i));
    }
    std::uint64_t bits = 0;
    for (int j = 0; j < 8; ++j) bits |= static_cast<std::uint64_t>(b[j]) << (8 * j);
    m.data()[i] = std::bit_cast<double>(bits);
  }
  // Trailing bytes mean the header undercounted.
  if (is.peek() != std::ifstream::traits_type::eof()) {
    throw ParseError(path.filename().string() +
                     ": payload longer than header dimensions");
  }
  return m;
}

void save_dataset(const MultimodalDataset& dataset,
                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("save_dataset: cannot create " + dir.string());

  nlohmann::ordered_json meta;
  meta["schema_version"] = 1;
  meta["n"] = dataset.n();
  meta["c"] = dataset.n_classes();
  meta["d_v"] = dataset.d_v();
  meta["d_t"] = dataset.d_t();
  meta["seed"] = dataset.seed;
  meta["split"] = {{"train", dataset.train_indices},
                   {"test", dataset.test_indices}};
  std::ofstream os(dir / "meta.json", std::ios::binary);
  if (!os) throw IoError("save_dataset: cannot write meta.json in " + dir.string());
  os << meta.dump(2) << '\n';

  save_matrix_file(dataset.V, dir / "V.f64");
  save_matrix_file(dataset.T, dir / "T.f64");
  save_matrix_file(dataset.Y, dir / "Y.f64");
}

MultimodalDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream is(dir / "meta.json", std::ios::binary);
  if (!is) throw IoError("load_dataset: cannot open " + (dir / "meta.json").string());
  nlohmann::json meta;
  try {
    is >> meta;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("meta.json: " + std::string(e.what()));
  }

  MultimodalDataset ds;
  try {
    ds.seed = meta.at("seed").get<std::uint64_t>();
    ds.train_indices = meta.at("split").at("train").get<std::vector<std::size_t>>();
    ds.test_indices = meta.at("split").at("test").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("meta.json: missing or malformed field: " +
                     std::string(e.what()));
  }

  ds.V = load_matrix_file(dir / "V.f64");
  ds.T = load_matrix_file(dir / "T.f64");
  ds.Y = load_matrix_file(dir / "Y.f64");

  const auto n = meta.at("n").get<std::size_t>();
  const auto c = meta.at("c").get<std::size_t>();
  const auto d_v = meta.at("d_v").get<std::size_t>();
  const auto d_t = meta.at("d_t").get<std::size_t>();
  if (ds.V.rows() != n || ds.T.rows() != n || ds.Y.rows() != n) {
    throw ParseError("dataset: row count mismatch between meta.json n=" +
                     std::to_string(n) + " and matrix payloads");
  }
  if (ds.V.cols() != d_v || ds.T.cols() != d_t || ds.Y.cols() != c) {
    throw ParseError("dataset: dimension mismatch between meta.json and payloads");
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (double y : ds.Y.row(i)) {
      if (y != 0.0 && y != 1.0) {
        throw ParseError("dataset: Y row " + std::to_string(i) + " is not one-hot");
      }
      sum += y;
    }
    if (sum != 1.0) {
      throw ParseError("dataset: Y row " + std::to_string(i) + " is not one-hot");
    }
  }
  for (std::size_t idx : ds.train_indices) {
    if (idx >= n) throw ParseError("dataset: train index out of range");
  }
  for (std::size_t idx : ds.test_indices) {
    if (idx >= n) throw ParseError("dataset: test index out of range");
  }
  return ds;
}

}  // namespace cmst
