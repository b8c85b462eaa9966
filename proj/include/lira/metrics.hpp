#pragma once
// Mask IoU and the dataset-level cIoU (pooled) / gIoU (per-sample mean).

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lira/image.hpp"

namespace lira::metrics {

struct PairCounts {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
};

PairCounts count(const BinaryMask& pred, const BinaryMask& gt);

// |pred & gt| / |pred | gt|; two empty masks score 1.
double iou(const BinaryMask& pred, const BinaryMask& gt);
double iou(const PairCounts& c);

struct MetricReport {
  std::vector<double> per_sample_iou;
  std::vector<PairCounts> counts;
  double ciou = 0.0;
  double giou = 0.0;
  double miou = 0.0;  // same as giou
  std::uint64_t total_intersection = 0;
  std::uint64_t total_union = 0;
  std::size_t n = 0;
};

using MaskPairs = std::vector<std::pair<BinaryMask, BinaryMask>>;  // (pred, gt)

MetricReport aggregate(const MaskPairs& pairs);
MetricReport aggregate(std::span<const PairCounts> counts);

nlohmann::json to_json(const MetricReport& r);
// Header "index,intersection,union,iou", one row per sample.
std::string to_csv(const MetricReport& r);

}  // namespace lira::metrics
