#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mcgan/data/label_map.hpp"

namespace mcgan::metrics {

inline constexpr double kDefaultThreshold = 3.0;
inline constexpr double kDefaultMatchFraction = 0.75;

struct TrackPoint {
  double row = 0;
  double col = 0;
};

/// One point per sampled row, rows strictly increasing, at least two points.
struct TrackPolyline {
  int lane_id = 0;
  std::vector<TrackPoint> points;
};

/// 8-connected components of class-1 pixels; per component, the column
/// centroid of every sampled row (row % row_stride == 0) it covers.
/// Components yielding fewer than two points are dropped.
std::vector<TrackPolyline> extract_polylines(const data::LabelMap& mask, int row_stride = 1);

struct PointCounts {
  std::size_t correct = 0;       // C_im
  std::size_t ground_truth = 0;  // S_im
  double ratio() const { return ground_truth ? static_cast<double>(correct) / static_cast<double>(ground_truth) : 0.0; }
};

/// A predicted point is correct when its distance to the same-row point of
/// the ground-truth lane it is paired with is strictly below `threshold`.
/// Lanes are paired one-to-one, greedily by descending correct-point count.
PointCounts point_accuracy(const std::vector<TrackPolyline>& pred, const std::vector<TrackPolyline>& gt,
                           double threshold = kDefaultThreshold);

struct LaneCounts {
  std::size_t false_pred = 0;  // F_pred: predicted lanes without a match
  std::size_t n_pred = 0;
  std::size_t missed_gt = 0;   // M_pred: ground-truth lanes without a match
  std::size_t n_gt = 0;

  /// 0 with fp_undefined() when there are no predictions.
  double fp() const { return n_pred ? static_cast<double>(false_pred) / static_cast<double>(n_pred) : 0.0; }
  double fn() const { return n_gt ? static_cast<double>(missed_gt) / static_cast<double>(n_gt) : 0.0; }
  bool fp_undefined() const { return n_pred == 0; }
  bool fn_undefined() const { return n_gt == 0; }
};

/// A predicted lane matches a ground-truth lane when at least
/// `match_fraction` of its points lie within `threshold` of the same-row
/// ground-truth point. Matching is one-to-one, greedy by descending score.
LaneCounts lane_counts(const std::vector<TrackPolyline>& pred, const std::vector<TrackPolyline>& gt,
                       double match_fraction = kDefaultMatchFraction, double threshold = kDefaultThreshold);

/// (FP, FN) of a single image.
std::pair<double, double> lane_fp_fn(const std::vector<TrackPolyline>& pred, const std::vector<TrackPolyline>& gt,
                                     double match_fraction = kDefaultMatchFraction, double threshold = kDefaultThreshold);

struct PixelCounts {
  std::size_t matching = 0;
  std::size_t total = 0;
  std::array<std::size_t, data::kNumClasses> intersection{};
  std::array<std::size_t, data::kNumClasses> union_{};
};

/// Throws ShapeError on dimension mismatch.
PixelCounts pixel_counts(const data::LabelMap& pred, const data::LabelMap& gt);

double pixel_accuracy(const data::LabelMap& pred, const data::LabelMap& gt);

struct IouResult {
  std::array<std::optional<double>, data::kNumClasses> per_class;  // nullopt: class absent from both
  double mean = 0;
};

IouResult iou(const data::LabelMap& pred, const data::LabelMap& gt);
IouResult iou_from_counts(const PixelCounts& counts);

struct EvalConfig {
  double threshold = kDefaultThreshold;
  double match_fraction = kDefaultMatchFraction;
  int row_stride = 1;
};

struct ImageRecord {
  std::string name;
  PointCounts points;
  LaneCounts lanes;
  double pixel_accuracy = 0;
  double mean_iou = 0;
};

struct MetricsReport {
  std::string name;
  double acc = 0;      // mean of C_im / S_im over images with ground truth
  double acc_sum = 0;  // sum of C_im / S_im
  double fp = 0;
  double fn = 0;
  bool fp_undefined = false;
  double pixel_accuracy = 0;
  std::array<std::optional<double>, data::kNumClasses> iou_per_class;
  double mean_iou = 0;
  std::optional<double> avg_time_s;
  std::vector<ImageRecord> images;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

/// Aggregates over (prediction, ground truth) pairs. Lane and pixel counts
/// are pooled before dividing.
MetricsReport evaluate(const std::vector<std::pair<std::string, std::pair<data::LabelMap, data::LabelMap>>>& images,
                       const EvalConfig& config = {});

/// "Method | Accuracy(%) | FP | FN" table; an "Average Time(s)" column is
/// added when any report carries a timing.
std::string render_track_table(const std::vector<MetricsReport>& reports);
/// "Metric | <name>..." table of pixel accuracy (%) and mean IoU.
std::string render_pixel_table(const std::vector<MetricsReport>& reports);
std::string render_csv(const std::vector<MetricsReport>& reports);

}  // namespace mcgan::metrics
