#include "n2a/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace n2a {

std::vector<std::vector<double>> segment(const TimeSeries& series, std::size_t L) {
  if (L == 0) throw ConfigError("segment length must be >= 1");
  std::vector<std::vector<double>> out;
  const std::size_t count = series.values.size() / L;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s)
    out.emplace_back(series.values.begin() + long(s * L),
                     series.values.begin() + long((s + 1) * L));
  return out;
}

TrainingSet segment_all(const std::vector<TimeSeries>& series, std::size_t L) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (const auto& ts : series) {
    for (auto& seg : segment(ts, L)) {
      rows.push_back(std::move(seg));
      labels.push_back(ts.label);
    }
  }
  TrainingSet out;
  out.X = Matrix(rows.size(), L);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double* dst = out.X.row(i);
    for (std::size_t j = 0; j < L; ++j) dst[j] = rows[i][j];
  }
  out.y = std::move(labels);
  return out;
}

TrainingSet minmax_normalize(const TrainingSet& ts) {
  if (ts.X.rows() == 0) throw DataError("minmax_normalize: empty set");
  Normalization p;
  p.min.assign(ts.X.cols(), 0.0);
  p.max.assign(ts.X.cols(), 0.0);
  for (std::size_t j = 0; j < ts.X.cols(); ++j) {
    double lo = ts.X(0, j), hi = ts.X(0, j);
    for (std::size_t i = 1; i < ts.X.rows(); ++i) {
      lo = std::min(lo, ts.X(i, j));
      hi = std::max(hi, ts.X(i, j));
    }
    p.min[j] = lo;
    p.max[j] = hi;
  }
  return apply_normalization(ts, p);
}

TrainingSet apply_normalization(const TrainingSet& ts, const Normalization& params) {
  if (ts.X.rows() == 0) throw DataError("apply_normalization: empty set");
  if (params.min.size() != ts.X.cols() || params.max.size() != ts.X.cols())
    throw ShapeError("normalization parameter length != feature count");
  TrainingSet out = ts;
  for (std::size_t j = 0; j < ts.X.cols(); ++j) {
    const double range = params.max[j] - params.min[j];
    if (range < 0.0) throw DataError("normalization: max < min for feature " + std::to_string(j));
    for (std::size_t i = 0; i < ts.X.rows(); ++i)
      out.X(i, j) = range == 0.0 ? 0.0 : (ts.X(i, j) - params.min[j]) / range;
  }
  out.normalization = params;
  return out;
}

std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold_split(
    std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw DataError("kfold_split: k must be >= 2");
  if (n < k) throw DataError("kfold_split: need at least k samples");

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 gen(seed);
  std::shuffle(perm.begin(), perm.end(), gen);

  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds;
  folds.reserve(k);
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    std::vector<std::size_t> test(perm.begin() + long(start), perm.begin() + long(start + size));
    std::vector<std::size_t> train;
    train.reserve(n - size);
    train.insert(train.end(), perm.begin(), perm.begin() + long(start));
    train.insert(train.end(), perm.begin() + long(start + size), perm.end());
    folds.emplace_back(std::move(train), std::move(test));
    start += size;
  }
  return folds;
}

TrainingSet subsample_labeled(const TrainingSet& ts, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("subsample fraction must lie in (0,1]");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ts.y.size(); ++i) by_class[ts.y[i]].push_back(i);

  std::mt19937_64 gen(seed);
  std::vector<std::size_t> keep;
  for (auto& [label, idx] : by_class) {
    const std::size_t want = std::size_t(std::ceil(fraction * double(idx.size())));
    if (want == 0)
      throw CoverageError("subsample would leave class " + std::to_string(label) + " empty");
    std::shuffle(idx.begin(), idx.end(), gen);
    keep.insert(keep.end(), idx.begin(), idx.begin() + long(want));
  }
  std::sort(keep.begin(), keep.end());

  TrainingSet out;
  out.X = Matrix(keep.size(), ts.X.cols());
  out.y.reserve(keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const double* src = ts.X.row(keep[r]);
    double* dst = out.X.row(r);
    for (std::size_t j = 0; j < ts.X.cols(); ++j) dst[j] = src[j];
    out.y.push_back(ts.y[keep[r]]);
  }
  out.normalization = ts.normalization;
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& tok, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + tok + "'");
  }
}

}  // namespace

std::vector<TimeSeries> load_timeseries_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset: " + path);

  std::vector<TimeSeries> out;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (!saw_header) {
      if (fields.empty() || fields[0] != "label")
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected header starting with 'label'");
      saw_header = true;
      continue;
    }
    if (fields.size() < 2)
      throw ParseError("line " + std::to_string(line_no) + ": row has no values");
    TimeSeries ts;
    const std::string& tok = fields[0];
    if (!schema.class_map.empty()) {
      auto it = schema.class_map.find(tok);
      if (it == schema.class_map.end())
        throw DataError("line " + std::to_string(line_no) + ": unknown class label '" + tok +
                        "'");
      ts.label = it->second;
    } else {
      try {
        std::size_t pos = 0;
        ts.label = std::stoi(tok, &pos);
        if (pos != tok.size() || ts.label < 0) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": bad class label '" + tok + "'");
      }
    }
    ts.values.reserve(fields.size() - 1);
    for (std::size_t f = 1; f < fields.size(); ++f)
      ts.values.push_back(parse_double(fields[f], line_no));
    out.push_back(std::move(ts));
  }
  return out;
}

void save_samples_csv(const TrainingSet& ts, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out << "label";
    for (std::size_t j = 0; j < ts.X.cols(); ++j) out << ",v" << j;
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < ts.X.rows(); ++i) {
      out << ts.y[i];
      const double* row = ts.X.row(i);
      for (std::size_t j = 0; j < ts.X.cols(); ++j) {
        std::snprintf(buf, sizeof buf, ",%.17g", row[j]);
        out << buf;
      }
      out << '\n';
    }
    if (!out) throw DataError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

namespace {

// One windowed two-harmonic burst; classes differ in base frequency and
// harmonic mix, the target domain rescales amplitude and offsets frequency.
// Phase and amplitude jitter keep a within-class spread without destroying
// the time-domain structure the classifier has to pick up.
void synth_sample(double* dst, std::size_t d, int c, double amplitude, double freq_scale,
                  double noise, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> phase_dist(0.0, 0.5);
  std::uniform_real_distribution<double> amp_dist(0.85, 1.15);
  std::normal_distribution<double> noise_dist(0.0, 1.0);
  const double phase = phase_dist(gen);
  const double amp = amplitude * amp_dist(gen);
  const double base = (2.0 + double(c)) * freq_scale;
  const double harmonic_w = 0.4 + 0.15 * double(c);
  for (std::size_t i = 0; i < d; ++i) {
    const double t = double(i) / double(d);
    // raised-cosine taper with a floor, so edge features keep usable signal
    const double window = 0.6 + 0.2 * (1.0 - std::cos(2.0 * std::numbers::pi * double(i) /
                                                      double(d - 1)));
    const double s = std::sin(2.0 * std::numbers::pi * base * t + phase) +
                     harmonic_w * std::sin(4.0 * std::numbers::pi * base * t + 1.7 * phase);
    dst[i] = amp * window * s + noise * noise_dist(gen);
  }
}

TrainingSet synth_set(const SynthSpec& spec, std::size_t per_class, double amplitude,
                      double freq_scale, std::uint64_t seed) {
  TrainingSet out;
  out.X = Matrix(per_class * std::size_t(spec.C), spec.d);
  out.y.reserve(out.X.rows());
  std::mt19937_64 gen(seed);
  std::size_t row = 0;
  for (int c = 0; c < spec.C; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      synth_sample(out.X.row(row++), spec.d, c, amplitude, freq_scale, spec.noise, gen);
      out.y.push_back(c);
    }
  return out;
}

}  // namespace

DomainPair synth_domains(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.C < 2) throw ConfigError("synth_domains: need at least 2 classes");
  if (spec.d < 2) throw ConfigError("synth_domains: need at least 2 features");
  if (spec.n_source == 0 || spec.n_target == 0)
    throw ConfigError("synth_domains: sample counts must be positive");
  if (spec.noise < 0.0 || spec.shift < 0.0)
    throw ConfigError("synth_domains: shift and noise must be >= 0");

  const double tgt_amplitude = 1.0 + spec.shift;
  const double tgt_freq_scale = 1.0 + 0.2 * spec.shift;

  std::mt19937_64 master(seed);
  const std::uint64_t s_src = master(), s_tr = master(), s_te = master();

  DomainPair pair;
  pair.C = spec.C;
  pair.source = synth_set(spec, spec.n_source, 1.0, 1.0, s_src);
  pair.target_train = synth_set(spec, spec.n_target, tgt_amplitude, tgt_freq_scale, s_tr);
  pair.target_test = synth_set(spec, spec.n_target, tgt_amplitude, tgt_freq_scale, s_te);
  return pair;
}

}  // namespace n2a
