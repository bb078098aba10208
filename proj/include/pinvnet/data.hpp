#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "pinvnet/learner.hpp"
#include "pinvnet/matrix.hpp"
#include "pinvnet/network.hpp"
#include "pinvnet/random.hpp"

namespace pinvnet {

enum class TaskKind { regression, classification };

/// One-hot target coding with configurable on/off levels.
struct TargetEncoding {
  double on = 1.0;
  double off = 0.0;

  static constexpr TargetEncoding onehot01() { return {1.0, 0.0}; }
  static constexpr TargetEncoding soft(double on = 0.9, double off = 0.1) { return {on, off}; }

  /// Encoding usable with `output` as the last layer's activation: 0/1 for a
  /// linear output, 0.9/0.1 otherwise so the targets sit inside the inverse domain.
  static TargetEncoding for_output(const Activation& output, bool linear_output) {
    if (linear_output || output.is_identity()) return onehot01();
    return soft();
  }
};

struct Dataset {
  Matrix x;  ///< m x d raw inputs
  Matrix y;  ///< m x q targets
  TaskKind kind = TaskKind::regression;
  /// Class names, index = encoded column. Empty for regression.
  std::vector<std::string> class_labels;
  /// Class index of every row. Empty for regression.
  std::vector<std::size_t> labels;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
  bool is_classification() const { return kind == TaskKind::classification; }

  void validate() const {
    if (x.rows() != y.rows()) throw InvalidArgument("dataset: inputs and targets differ in row count");
    if (is_classification()) {
      if (labels.size() != size()) throw InvalidArgument("dataset: one label per row required");
      for (auto l : labels)
        if (l >= class_labels.size()) throw InvalidArgument("dataset: label index out of range");
      if (static_cast<std::size_t>(y.cols()) != class_labels.size()) {
        throw InvalidArgument("dataset: target width must equal the class count");
      }
    }
  }

  /// Rows `idx` of this dataset.
  Dataset subset(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.kind = kind;
    out.class_labels = class_labels;
    std::vector<Eigen::Index> rows(idx.begin(), idx.end());
    out.x = x(rows, Eigen::all);
    out.y = y(rows, Eigen::all);
    if (is_classification())
      for (auto i : idx) out.labels.push_back(labels[i]);
    return out;
  }

  /// Same rows with targets recoded; no-op for regression.
  Dataset encoded(const TargetEncoding& enc) const {
    Dataset out = *this;
    if (!is_classification()) return out;
    out.y = Matrix::Constant(x.rows(), static_cast<Eigen::Index>(class_labels.size()), enc.off);
    for (std::size_t i = 0; i < labels.size(); ++i)
      out.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = enc.on;
    return out;
  }
};

/// Index of each label in first-appearance order, with the distinct names.
struct LabelIndex {
  std::vector<std::string> classes;
  std::vector<std::size_t> index;
};

inline LabelIndex index_labels(const std::vector<std::string>& labels) {
  LabelIndex out;
  std::map<std::string, std::size_t, std::less<>> seen;
  for (const auto& l : labels) {
    auto [it, inserted] = seen.try_emplace(l, out.classes.size());
    if (inserted) out.classes.push_back(l);
    out.index.push_back(it->second);
  }
  return out;
}

/// m x q one-hot matrix, q = number of distinct labels (first-appearance order).
inline Matrix encode_targets(const std::vector<std::string>& labels,
                             const TargetEncoding& enc = TargetEncoding::onehot01()) {
  const auto idx = index_labels(labels);
  Matrix y = Matrix::Constant(static_cast<Eigen::Index>(labels.size()),
                              static_cast<Eigen::Index>(idx.classes.size()), enc.off);
  for (std::size_t i = 0; i < labels.size(); ++i)
    y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(idx.index[i])) = enc.on;
  return y;
}

inline Dataset make_classification(Matrix x, const std::vector<std::string>& labels,
                                   const TargetEncoding& enc = TargetEncoding::onehot01()) {
  Dataset ds;
  ds.kind = TaskKind::classification;
  ds.x = std::move(x);
  auto idx = index_labels(labels);
  ds.class_labels = std::move(idx.classes);
  ds.labels = std::move(idx.index);
  ds.y = encode_targets(labels, enc);
  ds.validate();
  return ds;
}

/// Re-indexes a classification set onto `classes` (e.g. a training set's class
/// list) so that target columns line up. Unknown class names are an error.
inline Dataset align_classes(const Dataset& ds, const std::vector<std::string>& classes,
                             const TargetEncoding& enc = TargetEncoding::onehot01()) {
  if (!ds.is_classification()) throw InvalidArgument("align_classes: dataset is not a classification set");
  std::map<std::string, std::size_t, std::less<>> pos;
  for (std::size_t i = 0; i < classes.size(); ++i) pos.emplace(classes[i], i);
  Dataset out = ds;
  out.class_labels = classes;
  for (auto& l : out.labels) {
    const auto it = pos.find(ds.class_labels[l]);
    if (it == pos.end()) throw InvalidArgument("align_classes: unknown class '" + ds.class_labels[l] + "'");
    l = it->second;
  }
  return out.encoded(enc);
}

// ---------------------------------------------------------------------------
// Synthetic generators

struct RegressionSets {
  std::vector<Dataset> train;  ///< clean set first, then the noisy copies
  Dataset test;
};

inline double sinc2(double x) { return std::sin(2.0 * x) / (2.0 * x); }

/// y = sin(2x)/(2x). Train on x = 1..8; test on the 721-point grid 0.90:0.01:8.10.
/// Noisy sets add uniform noise in [-A, A], A = noise_frac * (target range).
inline RegressionSets gen_regression(std::size_t noisy_sets, double noise_frac, std::uint64_t seed) {
  if (!(noise_frac >= 0.0)) throw InvalidArgument("gen_regression: noise fraction must be >= 0");
  RegressionSets out;
  Dataset base;
  base.x.resize(8, 1);
  base.y.resize(8, 1);
  for (int i = 0; i < 8; ++i) {
    base.x(i, 0) = i + 1;
    base.y(i, 0) = sinc2(i + 1.0);
  }
  const double amplitude = noise_frac * (base.y.maxCoeff() - base.y.minCoeff());
  out.train.push_back(base);
  for (std::size_t s = 0; s < noisy_sets; ++s) {
    Rng rng(seed, "data.regression", s);
    Dataset noisy = base;
    for (int i = 0; i < 8; ++i) noisy.y(i, 0) += rng.uniform(-amplitude, amplitude);
    out.train.push_back(std::move(noisy));
  }
  constexpr int kTest = 721;
  out.test.x.resize(kTest, 1);
  out.test.y.resize(kTest, 1);
  for (int j = 0; j < kTest; ++j) {
    const double x = (90 + j) / 100.0;
    out.test.x(j, 0) = x;
    out.test.y(j, 0) = sinc2(x);
  }
  return out;
}

struct SpiralSets {
  Dataset train;
  Dataset test;
};

/// Multi-arm spiral. Sample i = 1..per_arm of arm a has radius i/per_arm and angle
/// 2 pi i/per_arm + 2 pi a/arms + noise * u, u ~ U[0, 1). Odd i go to train, even
/// i to test; class = arm index.
inline SpiralSets gen_spiral(std::size_t arms, std::size_t per_arm, double noise, std::uint64_t seed) {
  if (arms < 1) throw InvalidArgument("gen_spiral: need at least one arm");
  if (per_arm < 2 || per_arm % 2) throw InvalidArgument("gen_spiral: samples per arm must be even");
  const std::size_t half = per_arm / 2;
  Matrix xtr(static_cast<Eigen::Index>(arms * half), 2), xte(static_cast<Eigen::Index>(arms * half), 2);
  std::vector<std::string> ltr, lte;
  Rng rng(seed, "data.spiral");
  Eigen::Index rtr = 0, rte = 0;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t a = 0; a < arms; ++a) {
    for (std::size_t i = 1; i <= per_arm; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(per_arm);
      const double angle = two_pi * t + two_pi * static_cast<double>(a) / static_cast<double>(arms) +
                           noise * rng.uniform01();
      const double px = t * std::cos(angle), py = t * std::sin(angle);
      if (i % 2) {
        xtr.row(rtr++) << px, py;
        ltr.push_back(std::to_string(a));
      } else {
        xte.row(rte++) << px, py;
        lte.push_back(std::to_string(a));
      }
    }
  }
  // labels appear in arm order, so both halves share the class indexing
  return {make_classification(std::move(xtr), ltr), make_classification(std::move(xte), lte)};
}

// ---------------------------------------------------------------------------
// CSV ingestion

enum class MissingPolicy { drop, mean_impute };
enum class TaskHint { automatic, regression, classification };

struct CsvSchema {
  /// Column index (negative counts from the end) or a header name.
  std::variant<long, std::string> label_column = -1L;
  bool header = true;
  MissingPolicy missing = MissingPolicy::drop;
  TaskHint task = TaskHint::automatic;
  char delimiter = ',';
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line, char delim, std::size_t lineno) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote", lineno);
  cells.push_back(std::move(cur));
  for (auto& s : cells) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  }
  return cells;
}

inline bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "?" || cell == "NA" || cell == "NaN" || cell == "nan";
}

inline std::optional<double> to_number(const std::string& cell) {
  double v = 0.0;
  const char* b = cell.data();
  const char* e = b + cell.size();
  if (b != e && *b == '+') ++b;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads a delimited file into a Dataset.
///
/// Numeric feature columns are used as-is; any column with a non-numeric value
/// is one-hot expanded (categories in first-appearance order). Rows whose label
/// is missing are always dropped; missing features follow `schema.missing`
/// (column mean, or the most frequent category for categorical columns). With
/// TaskHint::automatic the task is regression only if some label is a
/// non-integer number.
inline Dataset load_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path);

  std::vector<std::string> names;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> linenos;
  std::string line;
  std::size_t lineno = 0, width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = detail::split_csv_line(line, schema.delimiter, lineno);
    if (schema.header && names.empty()) {
      names = std::move(cells);
      width = names.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                       std::to_string(cells.size()),
                       lineno);
    }
    rows.push_back(std::move(cells));
    linenos.push_back(lineno);
  }
  if (rows.empty()) throw ParseError("no data rows in " + path);
  if (width < 2) throw ParseError("need at least one feature column and a label column");

  std::size_t label_col = 0;
  if (const auto* idx = std::get_if<long>(&schema.label_column)) {
    const long w = static_cast<long>(width);
    const long c = *idx < 0 ? w + *idx : *idx;
    if (c < 0 || c >= w) throw InvalidConfiguration("label column " + std::to_string(*idx) + " out of range");
    label_col = static_cast<std::size_t>(c);
  } else {
    const auto& name = std::get<std::string>(schema.label_column);
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InvalidConfiguration("unknown label column '" + name + "'");
    label_col = static_cast<std::size_t>(it - names.begin());
  }

  // drop rows without a label, and rows with any missing cell under `drop`
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (detail::is_missing(rows[r][label_col])) continue;
    if (schema.missing == MissingPolicy::drop &&
        std::any_of(rows[r].begin(), rows[r].end(), detail::is_missing))
      continue;
    keep.push_back(r);
  }
  if (keep.empty()) throw ParseError("every row of " + path + " was dropped for missing values");

  struct Column {
    bool numeric = true;
    std::vector<std::string> categories;
    double fill = 0.0;
    std::string fill_category;
  };
  std::vector<Column> cols(width);
  for (std::size_t c = 0; c < width; ++c) {
    if (c == label_col) continue;
    double sum = 0.0;
    std::size_t count = 0;
    std::map<std::string, std::size_t> freq;
    for (auto r : keep) {
      const auto& cell = rows[r][c];
      if (detail::is_missing(cell)) continue;
      if (auto v = detail::to_number(cell)) {
        sum += *v;
        ++count;
      } else {
        cols[c].numeric = false;
      }
    }
    if (!cols[c].numeric) {
      for (auto r : keep) {
        const auto& cell = rows[r][c];
        if (detail::is_missing(cell)) continue;
        if (std::find(cols[c].categories.begin(), cols[c].categories.end(), cell) == cols[c].categories.end())
          cols[c].categories.push_back(cell);
        ++freq[cell];
      }
      std::size_t best = 0;
      for (const auto& cat : cols[c].categories)
        if (freq[cat] > best) {
          best = freq[cat];
          cols[c].fill_category = cat;
        }
    } else {
      if (count == 0) throw ParseError("column " + std::to_string(c + 1) + " has no values");
      cols[c].fill = sum / static_cast<double>(count);
    }
  }

  std::size_t feature_width = 0;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == label_col) continue;
    feature_width += cols[c].numeric ? 1 : cols[c].categories.size();
  }
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(feature_width));
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto& row = rows[keep[i]];
    Eigen::Index out = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_col) continue;
      const auto& cell = row[c];
      if (cols[c].numeric) {
        x(static_cast<Eigen::Index>(i), out++) = detail::is_missing(cell) ? cols[c].fill : *detail::to_number(cell);
      } else {
        const auto& value = detail::is_missing(cell) ? cols[c].fill_category : cell;
        auto it = std::find(cols[c].categories.begin(), cols[c].categories.end(), value);
        x(static_cast<Eigen::Index>(i), out + (it - cols[c].categories.begin())) = 1.0;
        out += static_cast<Eigen::Index>(cols[c].categories.size());
      }
    }
    labels.push_back(row[label_col]);
  }

  bool regression = schema.task == TaskHint::regression;
  if (schema.task == TaskHint::automatic) {
    bool all_numeric = true, any_fractional = false;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto v = detail::to_number(labels[i]);
      if (!v) {
        all_numeric = false;
        break;
      }
      if (*v != std::floor(*v)) any_fractional = true;
    }
    regression = all_numeric && any_fractional;
  }
  if (regression) {
    Dataset ds;
    ds.kind = TaskKind::regression;
    ds.x = std::move(x);
    ds.y.resize(static_cast<Eigen::Index>(labels.size()), 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto v = detail::to_number(labels[i]);
      if (!v) throw ParseError("non-numeric regression target '" + labels[i] + "'", linenos[keep[i]]);
      ds.y(static_cast<Eigen::Index>(i), 0) = *v;
    }
    return ds;
  }
  return make_classification(std::move(x), labels);
}

/// Writes features then the label (class name, or the numeric target) with a
/// header row; load_csv reads it back.
inline void write_dataset_csv(std::ostream& os, const Dataset& ds) {
  char buf[64];
  auto num = [&](double v) {
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
  };
  for (Eigen::Index c = 0; c < ds.x.cols(); ++c) os << 'x' << (c + 1) << ',';
  os << "label\n";
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    for (Eigen::Index c = 0; c < ds.x.cols(); ++c) os << num(ds.x(i, c)) << ',';
    if (ds.is_classification())
      os << ds.class_labels[ds.labels[static_cast<std::size_t>(i)]] << '\n';
    else
      os << num(ds.y(i, 0)) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Cross-validation

struct CvPlan {
  std::size_t folds = 10;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  bool stratified = true;

  void validate() const {
    if (folds < 2) throw InvalidArgument("cv: need at least 2 folds");
    if (trials < 1) throw InvalidArgument("cv: need at least 1 trial");
  }
};

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Splits rows into `plan.folds` folds for repetition `trial`.
///
/// Rows are shuffled within each class, the classes are concatenated, and row p
/// of that sequence goes to fold p mod folds. Every class is therefore spread
/// within one sample of its proportional share, and classes smaller than the
/// fold count fall round-robin across folds. Regression data (or
/// stratified = false) is shuffled as one group.
inline std::vector<Fold> stratified_kfold(const Dataset& ds, const CvPlan& plan, std::size_t trial = 0) {
  plan.validate();
  const std::size_t m = ds.size();
  if (plan.folds > m) {
    throw InvalidArgument("cv: " + std::to_string(plan.folds) + " folds exceed " + std::to_string(m) + " samples");
  }
  Rng rng(plan.seed, "cv.split", trial);
  std::vector<std::size_t> sequence;
  if (plan.stratified && ds.is_classification()) {
    std::vector<std::vector<std::size_t>> groups(ds.class_labels.size());
    for (std::size_t i = 0; i < m; ++i) groups[ds.labels[i]].push_back(i);
    for (auto& g : groups) {
      rng.shuffle(g.begin(), g.end());
      sequence.insert(sequence.end(), g.begin(), g.end());
    }
  } else {
    sequence.resize(m);
    for (std::size_t i = 0; i < m; ++i) sequence[i] = i;
    rng.shuffle(sequence.begin(), sequence.end());
  }
  std::vector<std::size_t> fold_of(m);
  for (std::size_t p = 0; p < m; ++p) fold_of[sequence[p]] = p % plan.folds;
  std::vector<Fold> folds(plan.folds);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t f = 0; f < plan.folds; ++f) {
      (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(i);
    }
  }
  return folds;
}

/// Fraction of rows whose argmax (lowest index on ties) matches the true class.
inline double accuracy(const Matrix& pred, const Dataset& truth) {
  if (!truth.is_classification()) throw InvalidArgument("accuracy: dataset is not a classification set");
  if (static_cast<std::size_t>(pred.rows()) != truth.size() ||
      static_cast<std::size_t>(pred.cols()) != truth.class_labels.size()) {
    throw InvalidArgument("accuracy: prediction shape " + shape_string(pred) + " does not match dataset");
  }
  if (truth.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < pred.cols(); ++c)
      if (pred(i, c) > pred(i, best)) best = c;
    if (static_cast<std::size_t>(best) == truth.labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

/// Structure with symbolic widths, e.g. "8h-4h-2h-h-q" or "h^r3-q".
class StructureTemplate {
 public:
  explicit StructureTemplate(std::string text) : text_(std::move(text)) {
    std::string_view s = text_;
    std::size_t start = 0;
    while (true) {
      const auto dash = s.find('-', start);
      auto token = s.substr(start, dash == s.npos ? s.npos : dash - start);
      Term term;
      if (auto caret = token.find('^'); caret != token.npos) {
        term.suffix = std::string(token.substr(caret));
        token = token.substr(0, caret);
      }
      if (token.empty()) throw ParseError("empty layer in template '" + text_ + "'");
      const char last = token.back();
      if (last == 'h' || last == 'q') {
        term.symbol = last;
        token.remove_suffix(1);
      }
      if (!token.empty()) {
        auto res = std::from_chars(token.data(), token.data() + token.size(), term.factor);
        if (res.ec != std::errc{} || res.ptr != token.data() + token.size() || term.factor == 0)
          throw ParseError("bad layer '" + std::string(token) + "' in template '" + text_ + "'");
      }
      terms_.push_back(term);
      if (dash == s.npos) break;
      start = dash + 1;
    }
  }

  const std::string& text() const { return text_; }

  /// Concrete structure string for hidden size h and output width q.
  std::string expand(std::size_t h, std::size_t q) const {
    std::string out;
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto& t = terms_[k];
      std::size_t w = t.factor;
      if (t.symbol == 'h') w *= h;
      if (t.symbol == 'q') w *= q;
      if (k) out += '-';
      out += std::to_string(w) + t.suffix;
    }
    return out;
  }

 private:
  struct Term {
    std::size_t factor = 1;
    char symbol = 0;
    std::string suffix;
  };
  std::string text_;
  std::vector<Term> terms_;
};

/// Default hidden-size grid.
inline const std::vector<std::size_t>& default_h_grid() {
  static const std::vector<std::size_t> grid{1, 2, 3, 5, 10, 20, 30, 50, 80, 100, 200, 500};
  return grid;
}

struct SearchSpace {
  std::vector<StructureTemplate> templates;
  std::vector<std::size_t> h_grid = default_h_grid();
  Activation activation = Activation::softplus08();
  bool linear_output = false;
};

struct CvResult {
  /// Candidate chosen most often across outer folds (ties: smaller h, earlier template).
  std::size_t selected_h = 0;
  std::string selected_template;
  /// Classification: accuracy. Regression: mean squared error.
  std::string metric;
  double mean_score = 0.0;
  /// scores[trial][fold]
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<std::size_t>> chosen_h;
  std::vector<std::vector<std::string>> chosen_template;
};

namespace detail {

/// Higher is better: accuracy, or negative MSE for regression.
inline double fit_and_score(const Dataset& train_set, const Dataset& test_set, const StructureTemplate& tpl,
                            std::size_t h, const SearchSpace& space, const TrainConfig& cfg) {
  const auto spec = NetworkSpec::from_structure(static_cast<std::size_t>(train_set.x.cols()),
                                                tpl.expand(h, static_cast<std::size_t>(train_set.y.cols())),
                                                space.activation, space.linear_output);
  const auto report = train(spec, train_set.x, train_set.y, cfg);
  const Matrix pred = forward(spec, report.weights, test_set.x);
  if (test_set.is_classification()) return accuracy(pred, test_set);
  return -(pred - test_set.y).squaredNorm() / static_cast<double>(test_set.size());
}

}  // namespace detail

/// Repeated k-fold evaluation with nested model selection.
///
/// For every outer training split an inner k-fold CV over (template, h) picks the
/// candidate with the best mean inner score (ties: smaller h, then earlier
/// template); that candidate is refit on the full outer training split and
/// scored on the held-out fold. A single candidate skips the inner loop.
inline CvResult cv_search(const Dataset& ds, const SearchSpace& space, const CvPlan& plan, const TrainConfig& cfg) {
  plan.validate();
  ds.validate();
  if (space.h_grid.empty()) throw InvalidArgument("cv: empty hidden-size grid");
  if (space.templates.empty()) throw InvalidArgument("cv: no structure templates");

  const Dataset data = ds.encoded(TargetEncoding::for_output(space.activation, space.linear_output));
  struct Candidate {
    std::size_t h;
    std::size_t tpl;
  };
  std::vector<Candidate> candidates;
  std::vector<std::size_t> grid = space.h_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (auto h : grid)
    for (std::size_t t = 0; t < space.templates.size(); ++t) candidates.push_back({h, t});

  CvResult result;
  result.metric = data.is_classification() ? "accuracy" : "mse";
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> votes;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t trial = 0; trial < plan.trials; ++trial) {
    const auto folds = stratified_kfold(data, plan, trial);
    result.scores.emplace_back();
    result.chosen_h.emplace_back();
    result.chosen_template.emplace_back();
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const Dataset outer_train = data.subset(folds[f].train);
      const Dataset outer_test = data.subset(folds[f].test);
      Candidate best = candidates.front();
      if (candidates.size() > 1) {
        CvPlan inner = plan;
        inner.trials = 1;
        inner.folds = std::min(plan.folds, outer_train.size());
        inner.seed = derive_seed(plan.seed, "cv.inner", trial * plan.folds + f);
        const auto inner_folds = stratified_kfold(outer_train, inner, 0);
        double best_score = -std::numeric_limits<double>::infinity();
        for (const auto& cand : candidates) {
          double s = 0.0;
          for (const auto& fold : inner_folds) {
            s += detail::fit_and_score(outer_train.subset(fold.train), outer_train.subset(fold.test),
                                       space.templates[cand.tpl], cand.h, space, cfg);
          }
          s /= static_cast<double>(inner_folds.size());
          if (s > best_score) {
            best_score = s;
            best = cand;
          }
        }
      }
      double score = detail::fit_and_score(outer_train, outer_test, space.templates[best.tpl], best.h, space, cfg);
      if (!data.is_classification()) score = -score;
      result.scores.back().push_back(score);
      result.chosen_h.back().push_back(best.h);
      result.chosen_template.back().push_back(space.templates[best.tpl].text());
      ++votes[{best.h, best.tpl}];
      total += score;
      ++count;
    }
  }
  result.mean_score = total / static_cast<double>(count);
  std::size_t top = 0;
  for (const auto& [key, n] : votes) {
    if (n > top) {  // map order is (h, template) ascending, so ties keep the smaller h
      top = n;
      result.selected_h = key.first;
      result.selected_template = space.templates[key.second].text();
    }
  }
  return result;
}

}  // namespace pinvnet
