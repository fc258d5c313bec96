#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmst/common_space.hpp"
#include "cmst/datagen.hpp"
#include "cmst/matrix.hpp"

namespace cmst {

// Gallery indices in ascending common-space distance from the query;
// equal distances break toward the lower index.
struct RankedList {
  static constexpr std::size_t kNoQuery = static_cast<std::size_t>(-1);
  std::size_t query = kNoQuery;
  std::vector<std::size_t> order;
};

RankedList rank_gallery(std::span<const double> query_emb,
                        const Matrix& gallery_embs);

// AP = (1/R') * sum over hits h at rank r <= L of h/r, with L the truncation
// (or the full list) and R' = min(|relevant|, L). Empty relevant sets are
// undefined and reported as nullopt rather than zero.
std::optional<double> average_precision(const RankedList& ranked,
                                        std::span<const std::size_t> relevant,
                                        std::optional<std::size_t> truncation);

// Mean AP over all queries; an item is relevant when its class label equals
// the query's. Throws when every query was skipped.
double map_score(const Matrix& query_embs, const Matrix& gallery_embs,
                 std::span<const std::size_t> query_labels,
                 std::span<const std::size_t> gallery_labels,
                 std::optional<std::size_t> truncation);

// Fraction of queries whose ground-truth partner (pair_ids[q], a bijection
// onto the gallery) ranks within the top k.
double topk_pair_accuracy(const Matrix& query_embs, const Matrix& gallery_embs,
                          std::span<const std::size_t> pair_ids, std::size_t k);

struct MapRow {
  std::string truncation;  // "full" or the truncation level as digits
  double img2txt = 0.0;
  double txt2img = 0.0;
  double avg = 0.0;
};

struct TopkRow {
  std::size_t k = 0;
  double img2txt = 0.0;
  double txt2img = 0.0;
  double avg = 0.0;
};

struct RetrievalReport {
  std::vector<MapRow> map_rows;
  std::vector<TopkRow> topk_rows;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string distance = "sqeuclidean";
};

struct EvalSettings {
  std::vector<std::size_t> ks = {1, 5, 10, 50};
  // One mAP row per entry; nullopt means the full gallery.
  std::vector<std::optional<std::size_t>> truncations = {std::nullopt,
                                                         std::size_t{50}};
  std::uint64_t seed = 0;
  std::string config_hash;
};

// Projects the test split with the generators and assembles the full report:
// both retrieval directions for mAP at each truncation plus the top-k table.
RetrievalReport evaluate(const GeneratorPair& gen,
                         const MultimodalDataset& dataset,
                         const EvalSettings& settings);

// Same report from precomputed common-space embeddings of the test split.
RetrievalReport evaluate_embeddings(const Matrix& s_v, const Matrix& s_t,
                                    std::span<const std::size_t> labels,
                                    const EvalSettings& settings);

// Fixed key order, 6-decimal fixed-point metrics: identical reports render
// to identical bytes.
std::string report_to_json(const RetrievalReport& report);

}  // namespace cmst
