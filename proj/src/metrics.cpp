#include "lira/metrics.hpp"

#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace lira::metrics {

PairCounts count(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw std::invalid_argument("iou: mask dims " + std::to_string(pred.height) + "x" +
                                std::to_string(pred.width) + " vs " + std::to_string(gt.height) +
                                "x" + std::to_string(gt.width));
  PairCounts c;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    c.intersection += (pred.bits[i] & gt.bits[i]);
    c.union_ += (pred.bits[i] | gt.bits[i]);
  }
  return c;
}

double iou(const PairCounts& c) {
  if (c.union_ == 0) return 1.0;
  return static_cast<double>(c.intersection) / static_cast<double>(c.union_);
}

double iou(const BinaryMask& pred, const BinaryMask& gt) { return iou(count(pred, gt)); }

MetricReport aggregate(std::span<const PairCounts> counts) {
  if (counts.empty()) throw std::invalid_argument("aggregate: no samples");
  MetricReport r;
  r.n = counts.size();
  double sum = 0.0;
  for (const auto& c : counts) {
    r.counts.push_back(c);
    r.per_sample_iou.push_back(iou(c));
    sum += r.per_sample_iou.back();
    r.total_intersection += c.intersection;
    r.total_union += c.union_;
  }
  r.giou = sum / static_cast<double>(r.n);
  r.miou = r.giou;
  r.ciou = iou(PairCounts{r.total_intersection, r.total_union});
  return r;
}

MetricReport aggregate(const MaskPairs& pairs) {
  std::vector<PairCounts> counts;
  counts.reserve(pairs.size());
  for (const auto& [pred, gt] : pairs) counts.push_back(count(pred, gt));
  return aggregate(counts);
}

nlohmann::json to_json(const MetricReport& r) {
  return nlohmann::json{{"n", r.n},
                        {"ciou", r.ciou},
                        {"giou", r.giou},
                        {"miou", r.miou},
                        {"total_intersection", r.total_intersection},
                        {"total_union", r.total_union},
                        {"per_sample_iou", r.per_sample_iou}};
}

std::string to_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "index,intersection,union,iou\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r.n; ++i)
    os << i << ',' << r.counts[i].intersection << ',' << r.counts[i].union_ << ','
       << r.per_sample_iou[i] << '\n';
  return os.str();
}

}  // namespace lira::metrics
