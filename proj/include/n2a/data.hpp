#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "n2a/matrix.hpp"

namespace n2a {

struct TimeSeries {
  std::vector<double> values;
  double sample_rate = 0.0;  // Hz, informational
  int label = 0;
};

// Per-feature min/max captured on a training split and reapplied verbatim
// to held-out data (which may therefore leave [0,1]).
struct Normalization {
  std::vector<double> min;
  std::vector<double> max;
};

struct TrainingSet {
  Matrix X;
  std::vector<int> y;
  std::optional<Normalization> normalization;
};

struct DomainPair {
  TrainingSet source;
  TrainingSet target_train;
  TrainingSet target_test;
  int C = 0;
};

// Non-overlapping consecutive windows of length L; the trailing remainder is
// dropped. May legitimately return zero segments when L exceeds the series.
std::vector<std::vector<double>> segment(const TimeSeries& series, std::size_t L);

// Segments every series and stacks the windows into one labeled sample set.
TrainingSet segment_all(const std::vector<TimeSeries>& series, std::size_t L);

// Min-max rescaling per feature; constant features map to 0. The parameters
// are stored on the result for reuse on test data.
TrainingSet minmax_normalize(const TrainingSet& ts);
TrainingSet apply_normalization(const TrainingSet& ts, const Normalization& params);

// Seeded permutation split into k near-equal folds; returns
// (train indices, test indices) per fold.
std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold_split(
    std::size_t n, std::size_t k, std::uint64_t seed);

// Stratified per-class sampling without replacement, ceil(fraction * n_c)
// samples per class.
TrainingSet subsample_labeled(const TrainingSet& ts, double fraction, std::uint64_t seed);

// CSV schema: header "label,v0,v1,..."; one sample (or one long series to be
// segmented) per row. With a non-empty class map, label tokens must be map
// keys; otherwise they must be non-negative integers.
struct CsvSchema {
  std::map<std::string, int> class_map;
};

std::vector<TimeSeries> load_timeseries_csv(const std::string& path,
                                            const CsvSchema& schema = {});

void save_samples_csv(const TrainingSet& ts, const std::string& path);

// Synthetic domain-shift task: class-dependent windowed harmonic signals;
// the target domain scales the amplitude by (1+shift) and offsets the base
// frequency proportionally to shift. n_source / n_target are per class;
// target train and test splits are independent draws of n_target each.
struct SynthSpec {
  int C = 4;
  std::size_t d = 64;
  std::size_t n_source = 200;
  std::size_t n_target = 40;
  double shift = 0.5;
  double noise = 0.1;
};

DomainPair synth_domains(const SynthSpec& spec, std::uint64_t seed);

}  // namespace n2a
