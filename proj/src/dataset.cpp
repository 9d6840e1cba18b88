#include "agreelearn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace agreelearn {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
  throw ValidationError(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

AnnotationSet::AnnotationSet(std::vector<Sample> samples, std::vector<std::string> annotator_ids,
                             std::vector<std::int8_t> labels, std::vector<double> weights)
    : samples_(std::move(samples)),
      annotator_ids_(std::move(annotator_ids)),
      labels_(std::move(labels)),
      weights_(std::move(weights)) {
  const std::size_t n = samples_.size();
  const std::size_t j = annotator_ids_.size();
  if (n < 1) throw ValidationError("dataset is empty");
  if (j < 2) throw ValidationError("dataset needs at least 2 annotators, got " + std::to_string(j));
  if (labels_.size() != n * j) throw ValidationError("label matrix shape mismatch");
  if (weights_.empty()) weights_.assign(n * j, 1.0);
  if (weights_.size() != n * j) throw ValidationError("weight matrix shape mismatch");

  std::set<std::string> ids(annotator_ids_.begin(), annotator_ids_.end());
  if (ids.size() != j) throw ValidationError("duplicate annotator ids");

  const std::size_t d = samples_.front().features.size();
  if (d < 1) throw ValidationError("samples need at least one feature");
  for (const Sample& s : samples_) {
    if (s.features.size() != d) {
      throw ValidationError("sample '" + s.id + "': feature dimensionality " +
                            std::to_string(s.features.size()) + " != " + std::to_string(d));
    }
    for (double f : s.features) {
      if (!std::isfinite(f)) throw ValidationError("sample '" + s.id + "': non-finite feature");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t present = 0;
    for (std::size_t a = 0; a < j; ++a) {
      const std::int8_t v = labels_[i * j + a];
      if (v != kMissingLabel && v != 0 && v != 1) {
        throw ValidationError("sample '" + samples_[i].id + "': label value " +
                              std::to_string(int(v)) + " is not binary");
      }
      if (v != kMissingLabel) {
        ++present;
        const double w = weights_[i * j + a];
        if (!(w > 0.0 && w <= 1.0)) {
          throw ValidationError("sample '" + samples_[i].id + "': weight outside (0, 1]");
        }
      }
    }
    if (present == 0) {
      throw ValidationError("sample '" + samples_[i].id + "' has no labels");
    }
  }
}

std::size_t AnnotationSet::present_count(std::size_t i) const {
  std::size_t c = 0;
  for (std::size_t j = 0; j < annotator_ids_.size(); ++j) {
    if (present(i, j)) ++c;
  }
  return c;
}

std::vector<std::int8_t> AnnotationSet::annotator_labels(std::size_t j) const {
  if (j >= annotator_ids_.size()) throw std::out_of_range("annotator index out of range");
  std::vector<std::int8_t> col(size());
  for (std::size_t i = 0; i < size(); ++i) col[i] = label(i, j);
  return col;
}

AnnotationSet AnnotationSet::subset(std::span<const std::size_t> indices) const {
  const std::size_t j = annotator_count();
  std::vector<Sample> samples;
  std::vector<std::int8_t> labels;
  std::vector<double> weights;
  samples.reserve(indices.size());
  labels.reserve(indices.size() * j);
  weights.reserve(indices.size() * j);
  for (std::size_t i : indices) {
    if (i >= size()) throw std::out_of_range("sample index out of range");
    samples.push_back(samples_[i]);
    for (std::size_t a = 0; a < j; ++a) {
      labels.push_back(label(i, a));
      weights.push_back(weight(i, a));
    }
  }
  return AnnotationSet(std::move(samples), annotator_ids_, std::move(labels), std::move(weights));
}

namespace {

struct Builder {
  std::vector<Sample> samples;
  std::vector<std::string> annotator_ids;
  // Per-sample sparse labels by annotator id; column order fixed afterwards.
  std::vector<std::vector<std::pair<std::size_t, std::int8_t>>> rows;

  std::size_t annotator_index(const std::string& id) {
    for (std::size_t k = 0; k < annotator_ids.size(); ++k) {
      if (annotator_ids[k] == id) return k;
    }
    annotator_ids.push_back(id);
    return annotator_ids.size() - 1;
  }

  AnnotationSet finish() {
    const std::size_t n = samples.size();
    const std::size_t j = annotator_ids.size();
    if (n == 0) throw ValidationError("dataset is empty");
    std::vector<std::int8_t> labels(n * j, kMissingLabel);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto [a, v] : rows[i]) labels[i * j + a] = v;
    }
    return AnnotationSet(std::move(samples), std::move(annotator_ids), std::move(labels));
  }
};

std::int8_t parse_label_value(const json& v, const std::string& path, std::size_t line,
                              const std::string& sample_id) {
  if (v.is_null()) return kMissingLabel;
  if (v.is_number_integer()) {
    const auto x = v.get<long long>();
    if (x == 0 || x == 1) return static_cast<std::int8_t>(x);
  }
  fail(path, line, "sample '" + sample_id + "': label value " + v.dump() + " is not 0, 1, or null");
}

AnnotationSet load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open file");
  Builder b;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(path, line, std::string("malformed JSON: ") + e.what());
    }
    if (!row.is_object() || !row.contains("id") || !row["id"].is_string()) {
      fail(path, line, "row needs a string \"id\"");
    }
    Sample s;
    s.id = row["id"].get<std::string>();
    if (!row.contains("features") || !row["features"].is_array()) {
      fail(path, line, "sample '" + s.id + "': missing \"features\" array");
    }
    for (const json& f : row["features"]) {
      if (!f.is_number()) fail(path, line, "sample '" + s.id + "': non-numeric feature");
      s.features.push_back(f.get<double>());
    }
    if (!row.contains("labels") || !row["labels"].is_object()) {
      fail(path, line, "sample '" + s.id + "': missing \"labels\" object");
    }
    std::vector<std::pair<std::size_t, std::int8_t>> entries;
    for (auto& [ann, v] : row["labels"].items()) {
      const std::int8_t lab = parse_label_value(v, path, line, s.id);
      if (lab != kMissingLabel) entries.emplace_back(b.annotator_index(ann), lab);
    }
    if (entries.empty()) {
      fail(path, line, "sample '" + s.id + "' has no labels");
    }
    b.samples.push_back(std::move(s));
    b.rows.push_back(std::move(entries));
  }
  return b.finish();
}

std::vector<std::string> split_csv_line(const std::string& text) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(text);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!text.empty() && text.back() == ',') cells.emplace_back();
  return cells;
}

AnnotationSet load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open file");
  std::string text;
  if (!std::getline(in, text)) throw ValidationError(path + ": empty file");
  const std::vector<std::string> header = split_csv_line(text);
  if (header.empty() || header[0] != "id") fail(path, 1, "header must start with \"id\"");

  Builder b;
  std::size_t n_features = 0;
  std::vector<std::size_t> ann_cols;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].rfind("ann:", 0) == 0) {
      ann_cols.push_back(c);
      b.annotator_index(header[c].substr(4));
    } else {
      if (!ann_cols.empty()) fail(path, 1, "feature column after annotator columns");
      ++n_features;
    }
  }
  if (n_features == 0) fail(path, 1, "no feature columns");
  if (ann_cols.empty()) fail(path, 1, "no annotator columns (prefix \"ann:\")");

  std::size_t line = 1;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = split_csv_line(text);
    if (cells.size() != header.size()) {
      fail(path, line, "expected " + std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()));
    }
    Sample s;
    s.id = cells[0];
    for (std::size_t c = 1; c <= n_features; ++c) {
      try {
        std::size_t used = 0;
        s.features.push_back(std::stod(cells[c], &used));
        if (used != cells[c].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        fail(path, line, "sample '" + s.id + "': bad feature value '" + cells[c] + "'");
      }
    }
    std::vector<std::pair<std::size_t, std::int8_t>> entries;
    for (std::size_t k = 0; k < ann_cols.size(); ++k) {
      const std::string& cell = cells[ann_cols[k]];
      if (cell.empty()) continue;
      if (cell != "0" && cell != "1") {
        fail(path, line, "sample '" + s.id + "': label value '" + cell + "' is not binary");
      }
      entries.emplace_back(k, static_cast<std::int8_t>(cell == "1" ? 1 : 0));
    }
    if (entries.empty()) fail(path, line, "sample '" + s.id + "' has no labels");
    b.samples.push_back(std::move(s));
    b.rows.push_back(std::move(entries));
  }
  return b.finish();
}

}  // namespace

AnnotationSet load_annotations(const std::string& path, FileFormat format) {
  return format == FileFormat::Jsonl ? load_jsonl(path) : load_csv(path);
}

std::vector<double> agreement_targets(const AnnotationSet& data) {
  std::vector<double> alpha(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t j = 0; j < data.annotator_count(); ++j) {
      if (!data.present(i, j)) continue;
      sum += data.weight(i, j) * data.label(i, j);
      ++present;
    }
    alpha[i] = sum / static_cast<double>(present);
  }
  return alpha;
}

std::vector<std::int8_t> majority_vote(const AnnotationSet& data, TieBreak tie_break) {
  std::vector<std::int8_t> votes(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t pos = 0, neg = 0;
    for (std::size_t j = 0; j < data.annotator_count(); ++j) {
      if (!data.present(i, j)) continue;
      (data.label(i, j) == 1 ? pos : neg) += 1;
    }
    if (pos > neg) {
      votes[i] = 1;
    } else if (neg > pos) {
      votes[i] = 0;
    } else {
      votes[i] = tie_break == TieBreak::Positive ? 1 : 0;
    }
  }
  return votes;
}

AnnotatorCounts annotator_class_counts(const AnnotationSet& data, std::size_t annotator) {
  if (annotator >= data.annotator_count()) throw std::out_of_range("annotator index out of range");
  AnnotatorCounts c;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.present(i, annotator)) continue;
    (data.label(i, annotator) == 1 ? c.positives : c.negatives) += 1;
  }
  c.labeled = c.positives + c.negatives;
  return c;
}

}  // namespace agreelearn
