// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace natres::data {

enum class DType { floating, integer };

// Immutable labelled sample matrix. Construction checks every invariant:
// values inside [x_min, x_max], labels in [0, num_classes), whole numbers for
// integer data. x_min/x_max are global scalars over the whole matrix.
class Dataset {
 public:
  Dataset() = default;

  // Computes x_min/x_max from the values.
  static Dataset create(std::size_t input_len, std::vector<float> inputs,
                        std::vector<int> labels, int num_classes,
                        DType dtype = DType::floating,
                        std::vector<int> dims = {},
                        std::vector<std::string> class_names = {});

  // Keeps a caller-provided value range (must enclose every value). Used when
  // a derived dataset mirrors the range of its source.
  static Dataset create_with_range(std::size_t input_len,
                                   std::vector<float> inputs,
                                   std::vector<int> labels, int num_classes,
                                   float x_min, float x_max, DType dtype,
                                   std::vector<int> dims = {},
                                   std::vector<std::string> class_names = {});

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t input_len() const { return input_len_; }
  int num_classes() const { return num_classes_; }
  float x_min() const { return x_min_; }
  float x_max() const { return x_max_; }
  DType dtype() const { return dtype_; }
  // HxWxC (channel-last) when known, else empty.
  const std::vector<int>& dims() const { return dims_; }
  // Original label text per dense class id (CSV ingestion), else empty.
  const std::vector<std::string>& class_names() const { return class_names_; }

  std::span<const float> row(std::size_t i) const {
    return {inputs_.data() + i * input_len_, input_len_};
  }
  int label(std::size_t i) const { return labels_[i]; }
  std::span<const int> labels() const { return labels_; }
  std::span<const float> inputs() const { return inputs_; }

  std::vector<std::size_t> class_counts() const;

  // Rows in the given order; mirrors range/dtype/dims of this dataset.
  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  void validate() const;

  std::size_t input_len_ = 0;
  std::vector<float> inputs_;
  std::vector<int> labels_;
  int num_classes_ = 0;
  float x_min_ = 0.0f;
  float x_max_ = 0.0f;
  DType dtype_ = DType::floating;
  std::vector<int> dims_;
  std::vector<std::string> class_names_;
};

// Balanced Gaussian clusters (class i % C for row i) with unit within-class
// std. Every class mean sits at distance `separation` from the origin: the
// scaled basis vector separation * e_c when dim >= num_classes, evenly spaced
// on a circle in the first two coordinates otherwise, and c * separation on
// a line when dim == 1.
Dataset synth_blobs(std::size_t n, int num_classes, std::size_t dim,
                    double separation, std::uint64_t seed);

struct CsvDataset {
  Dataset dataset;
  std::vector<std::string> feature_names;
  std::string label_column;
};

// Header row required. Features are all non-label columns in file order;
// labels are densified to 0..C-1 in ascending order (numeric when every label
// parses as a number).
CsvDataset load_csv(const std::filesystem::path& path,
                    const std::string& label_column);

// Big-endian IDX pair (images 0x00000803, labels 0x00000801).
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

struct SplitResult {
  Dataset val;
  Dataset test;
  std::vector<std::size_t> val_indices;
  std::vector<std::size_t> test_indices;
};

// Uniform random holdout: floor(val_fraction * n) rows go to val.
SplitResult split_holdout(const Dataset& pool, double val_fraction,
                          std::uint64_t seed);

struct ShardResult {
  std::vector<std::vector<std::size_t>> shards;
  std::size_t dropped = 0;
};

// Random permutation cut into equal shards of floor(n / num_users); the
// remainder is dropped.
ShardResult shard_users(const Dataset& dataset, int num_users,
                        std::uint64_t seed);

// The three sets the search and audit stages work on.
struct DataSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

}  // namespace natres::data
