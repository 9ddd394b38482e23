#include "mcgan/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "mcgan/core/error.hpp"

namespace mcgan::metrics {

namespace {

using data::LabelMap;

constexpr std::uint8_t kTrack = static_cast<std::uint8_t>(data::LabelClass::track_line);

// Same-row lookup: row -> column.
std::map<long, double> row_index(const TrackPolyline& line) {
  std::map<long, double> out;
  for (const auto& p : line.points) out.emplace(std::lround(p.row), p.col);
  return out;
}

std::size_t correct_points(const TrackPolyline& pred, const std::map<long, double>& gt_rows, double threshold) {
  std::size_t n = 0;
  for (const auto& p : pred.points) {
    auto it = gt_rows.find(std::lround(p.row));
    if (it != gt_rows.end() && std::abs(p.col - it->second) < threshold) ++n;
  }
  return n;
}

std::vector<std::vector<std::size_t>> correct_matrix(const std::vector<TrackPolyline>& pred,
                                                     const std::vector<TrackPolyline>& gt, double threshold) {
  std::vector<std::map<long, double>> rows;
  rows.reserve(gt.size());
  for (const auto& g : gt) rows.push_back(row_index(g));
  std::vector<std::vector<std::size_t>> m(pred.size(), std::vector<std::size_t>(gt.size(), 0));
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < gt.size(); ++j) m[i][j] = correct_points(pred[i], rows[j], threshold);
  return m;
}

struct Candidate {
  double score;
  std::size_t pred;
  std::size_t gt;
};

// One-to-one greedy assignment by descending score; ties by lower indices.
std::vector<Candidate> greedy_assign(std::vector<Candidate> candidates, std::size_t n_pred, std::size_t n_gt) {
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.pred != b.pred) return a.pred < b.pred;
    return a.gt < b.gt;
  });
  std::vector<bool> used_p(n_pred, false);
  std::vector<bool> used_g(n_gt, false);
  std::vector<Candidate> out;
  for (const auto& c : candidates) {
    if (used_p[c.pred] || used_g[c.gt]) continue;
    used_p[c.pred] = used_g[c.gt] = true;
    out.push_back(c);
  }
  return out;
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

std::vector<TrackPolyline> extract_polylines(const LabelMap& mask, int row_stride) {
  if (row_stride < 1) throw ConfigError("row_stride must be >= 1, got " + std::to_string(row_stride));
  const int w = mask.width();
  const int h = mask.height();
  std::vector<int> comp(static_cast<std::size_t>(w) * h, -1);
  std::vector<TrackPolyline> out;
  std::vector<std::pair<int, int>> stack;
  int next = 0;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      const std::size_t i0 = static_cast<std::size_t>(y0) * w + x0;
      if (mask.at(y0, x0) != kTrack || comp[i0] >= 0) continue;
      // Flood fill one component, accumulating per-row column sums.
      std::map<int, std::pair<double, int>> rows;
      comp[i0] = next;
      stack.assign(1, {y0, x0});
      while (!stack.empty()) {
        auto [y, x] = stack.back();
        stack.pop_back();
        auto& acc = rows[y];
        acc.first += x;
        acc.second += 1;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = y + dy;
            const int nx = x + dx;
            if ((dy == 0 && dx == 0) || ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
            if (mask.at(ny, nx) != kTrack || comp[ni] >= 0) continue;
            comp[ni] = next;
            stack.emplace_back(ny, nx);
          }
        }
      }
      ++next;
      TrackPolyline line;
      for (const auto& [row, acc] : rows) {
        if (row % row_stride != 0) continue;
        line.points.push_back({static_cast<double>(row), acc.first / acc.second});
      }
      if (line.points.size() >= 2) {
        line.lane_id = static_cast<int>(out.size());
        out.push_back(std::move(line));
      }
    }
  }
  return out;
}

PointCounts point_accuracy(const std::vector<TrackPolyline>& pred, const std::vector<TrackPolyline>& gt,
                           double threshold) {
  PointCounts counts;
  for (const auto& g : gt) counts.ground_truth += g.points.size();
  const auto m = correct_matrix(pred, gt, threshold);
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < gt.size(); ++j)
      if (m[i][j] > 0) cands.push_back({static_cast<double>(m[i][j]), i, j});
  for (const auto& c : greedy_assign(std::move(cands), pred.size(), gt.size()))
    counts.correct += static_cast<std::size_t>(c.score);
  return counts;
}

LaneCounts lane_counts(const std::vector<TrackPolyline>& pred, const std::vector<TrackPolyline>& gt,
                       double match_fraction, double threshold) {
  if (!(match_fraction > 0.0 && match_fraction <= 1.0))
    throw ConfigError("match_fraction must be in (0, 1], got " + std::to_string(match_fraction));
  LaneCounts counts;
  counts.n_pred = pred.size();
  counts.n_gt = gt.size();
  const auto m = correct_matrix(pred, gt, threshold);
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].points.empty()) continue;
    for (std::size_t j = 0; j < gt.size(); ++j) {
      const double score = static_cast<double>(m[i][j]) / static_cast<double>(pred[i].points.size());
      if (score >= match_fraction) cands.push_back({score, i, j});
    }
  }
  const std::size_t matched = greedy_assign(std::move(cands), pred.size(), gt.size()).size();
  counts.false_pred = counts.n_pred - matched;
  counts.missed_gt = counts.n_gt - matched;
  return counts;
}

std::pair<double, double> lane_fp_fn(const std::vector<TrackPolyline>& pred, const std::vector<TrackPolyline>& gt,
                                     double match_fraction, double threshold) {
  const auto c = lane_counts(pred, gt, match_fraction, threshold);
  return {c.fp(), c.fn()};
}

PixelCounts pixel_counts(const LabelMap& pred, const LabelMap& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height())
    throw ShapeError("prediction is " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                     " but ground truth is " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
  PixelCounts c;
  c.total = gt.size();
  const auto& p = pred.ids();
  const auto& g = gt.ids();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (p[i] >= data::kNumClasses || g[i] >= data::kNumClasses)
      throw ShapeError("class id out of range at pixel " + std::to_string(i));
    if (p[i] == g[i]) {
      ++c.matching;
      ++c.intersection[g[i]];
      ++c.union_[g[i]];
    } else {
      ++c.union_[g[i]];
      ++c.union_[p[i]];
    }
  }
  return c;
}

double pixel_accuracy(const LabelMap& pred, const LabelMap& gt) {
  const auto c = pixel_counts(pred, gt);
  return c.total ? static_cast<double>(c.matching) / static_cast<double>(c.total) : 0.0;
}

IouResult iou_from_counts(const PixelCounts& counts) {
  IouResult r;
  double sum = 0;
  int present = 0;
  for (int k = 0; k < data::kNumClasses; ++k) {
    if (counts.union_[k] == 0) continue;
    const double v = static_cast<double>(counts.intersection[k]) / static_cast<double>(counts.union_[k]);
    r.per_class[k] = v;
    sum += v;
    ++present;
  }
  r.mean = present ? sum / present : 0.0;
  return r;
}

IouResult iou(const LabelMap& pred, const LabelMap& gt) { return iou_from_counts(pixel_counts(pred, gt)); }

MetricsReport evaluate(const std::vector<std::pair<std::string, std::pair<LabelMap, LabelMap>>>& images,
                       const EvalConfig& config) {
  MetricsReport report;
  PixelCounts pooled;
  std::size_t false_pred = 0, n_pred = 0, missed = 0, n_gt = 0;
  std::size_t with_gt = 0;
  for (const auto& [name, pair] : images) {
    const auto& [pred, gt] = pair;
    const auto pc = pixel_counts(pred, gt);
    const auto pred_lines = extract_polylines(pred, config.row_stride);
    const auto gt_lines = extract_polylines(gt, config.row_stride);
    ImageRecord rec;
    rec.name = name;
    rec.points = point_accuracy(pred_lines, gt_lines, config.threshold);
    rec.lanes = lane_counts(pred_lines, gt_lines, config.match_fraction, config.threshold);
    rec.pixel_accuracy = pc.total ? static_cast<double>(pc.matching) / static_cast<double>(pc.total) : 0.0;
    rec.mean_iou = iou_from_counts(pc).mean;
    if (rec.points.ground_truth > 0) {
      report.acc_sum += rec.points.ratio();
      ++with_gt;
    }
    false_pred += rec.lanes.false_pred;
    n_pred += rec.lanes.n_pred;
    missed += rec.lanes.missed_gt;
    n_gt += rec.lanes.n_gt;
    pooled.matching += pc.matching;
    pooled.total += pc.total;
    for (int k = 0; k < data::kNumClasses; ++k) {
      pooled.intersection[k] += pc.intersection[k];
      pooled.union_[k] += pc.union_[k];
    }
    report.images.push_back(std::move(rec));
  }
  report.acc = with_gt ? report.acc_sum / static_cast<double>(with_gt) : 0.0;
  report.fp = n_pred ? static_cast<double>(false_pred) / static_cast<double>(n_pred) : 0.0;
  report.fp_undefined = n_pred == 0;
  report.fn = n_gt ? static_cast<double>(missed) / static_cast<double>(n_gt) : 0.0;
  report.pixel_accuracy = pooled.total ? static_cast<double>(pooled.matching) / static_cast<double>(pooled.total) : 0.0;
  const auto iou_all = iou_from_counts(pooled);
  report.iou_per_class = iou_all.per_class;
  report.mean_iou = iou_all.mean;
  return report;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["name"] = name;
  j["acc"] = acc;
  j["acc_sum"] = acc_sum;
  j["fp"] = fp;
  j["fn"] = fn;
  j["fp_undefined"] = fp_undefined;
  j["pixel_accuracy"] = pixel_accuracy;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& v : iou_per_class) per.push_back(optional_json(v));
  j["iou_per_class"] = per;
  j["mean_iou"] = mean_iou;
  j["avg_time_s"] = optional_json(avg_time_s);
  nlohmann::json imgs = nlohmann::json::array();
  for (const auto& r : images) {
    imgs.push_back({{"name", r.name},
                    {"c_im", r.points.correct},
                    {"s_im", r.points.ground_truth},
                    {"false_pred", r.lanes.false_pred},
                    {"n_pred", r.lanes.n_pred},
                    {"missed_gt", r.lanes.missed_gt},
                    {"n_gt", r.lanes.n_gt},
                    {"pixel_accuracy", r.pixel_accuracy},
                    {"mean_iou", r.mean_iou}});
  }
  j["images"] = imgs;
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  try {
    if (j.value("schema_version", 1) != 1) throw IoError("unsupported report schema_version");
    MetricsReport r;
    r.name = j.value("name", std::string{});
    r.acc = j.at("acc").get<double>();
    r.acc_sum = j.value("acc_sum", r.acc);
    r.fp = j.at("fp").get<double>();
    r.fn = j.at("fn").get<double>();
    r.fp_undefined = j.value("fp_undefined", false);
    r.pixel_accuracy = j.value("pixel_accuracy", 0.0);
    if (j.contains("iou_per_class")) {
      const auto& per = j.at("iou_per_class");
      for (std::size_t k = 0; k < per.size() && k < r.iou_per_class.size(); ++k)
        if (!per[k].is_null()) r.iou_per_class[k] = per[k].get<double>();
    }
    r.mean_iou = j.value("mean_iou", 0.0);
    if (j.contains("avg_time_s") && !j.at("avg_time_s").is_null()) r.avg_time_s = j.at("avg_time_s").get<double>();
    if (j.contains("images")) {
      for (const auto& im : j.at("images")) {
        ImageRecord rec;
        rec.name = im.value("name", std::string{});
        rec.points.correct = im.value("c_im", std::size_t{0});
        rec.points.ground_truth = im.value("s_im", std::size_t{0});
        rec.lanes.false_pred = im.value("false_pred", std::size_t{0});
        rec.lanes.n_pred = im.value("n_pred", std::size_t{0});
        rec.lanes.missed_gt = im.value("missed_gt", std::size_t{0});
        rec.lanes.n_gt = im.value("n_gt", std::size_t{0});
        rec.pixel_accuracy = im.value("pixel_accuracy", 0.0);
        rec.mean_iou = im.value("mean_iou", 0.0);
        r.images.push_back(std::move(rec));
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed report: ") + e.what());
  }
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string join_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += " | ";
    out += cells[i];
  }
  return out;
}

}  // namespace

std::string render_track_table(const std::vector<MetricsReport>& reports) {
  const bool timed = std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.avg_time_s.has_value(); });
  std::ostringstream os;
  std::vector<std::string> head{"Method", "Accuracy(%)", "FP", "FN"};
  if (timed) head.emplace_back("Average Time(s)");
  os << join_row(head) << '\n';
  for (const auto& r : reports) {
    std::vector<std::string> row{r.name, fmt("%.2f", 100.0 * r.acc), fmt("%.4f", r.fp), fmt("%.4f", r.fn)};
    if (timed) row.push_back(r.avg_time_s ? fmt("%.3f", *r.avg_time_s) : std::string("-"));
    os << join_row(row) << '\n';
  }
  return os.str();
}

std::string render_pixel_table(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  std::vector<std::string> head{"Metric"};
  std::vector<std::string> pa{"Pixel accuracy(%)"};
  std::vector<std::string> mi{"IOU"};
  for (const auto& r : reports) {
    head.push_back(r.name);
    pa.push_back(fmt("%.2f", 100.0 * r.pixel_accuracy));
    mi.push_back(fmt("%.4f", r.mean_iou));
  }
  os << join_row(head) << '\n' << join_row(pa) << '\n' << join_row(mi) << '\n';
  return os.str();
}

std::string render_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << "method,accuracy_pct,fp,fn,fp_undefined,pixel_accuracy_pct,mean_iou,avg_time_s\n";
  for (const auto& r : reports) {
    os << r.name << ',' << fmt("%.2f", 100.0 * r.acc) << ',' << fmt("%.4f", r.fp) << ',' << fmt("%.4f", r.fn) << ','
       << (r.fp_undefined ? "true" : "false") << ',' << fmt("%.2f", 100.0 * r.pixel_accuracy) << ','
       << fmt("%.4f", r.mean_iou) << ',' << (r.avg_time_s ? fmt("%.3f", *r.avg_time_s) : std::string()) << '\n';
  }
  return os.str();
}

}  // namespace mcgan::metrics
