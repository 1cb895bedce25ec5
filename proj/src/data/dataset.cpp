// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "natres/csv.hpp"
#include "natres/error.hpp"
#include "natres/rng.hpp"

namespace natres::data {

Dataset Dataset::create(std::size_t input_len, std::vector<float> inputs,
                        std::vector<int> labels, int num_classes, DType dtype,
                        std::vector<int> dims,
                        std::vector<std::string> class_names) {
  float lo = 0.0f;
  float hi = 0.0f;
  if (!inputs.empty()) {
    const auto [mn, mx] = std::minmax_element(inputs.begin(), inputs.end());
    lo = *mn;
    hi = *mx;
  }
  return create_with_range(input_len, std::move(inputs), std::move(labels),
                           num_classes, lo, hi, dtype, std::move(dims),
                           std::move(class_names));
}

Dataset Dataset::create_with_range(std::size_t input_len,
                                   std::vector<float> inputs,
                                   std::vector<int> labels, int num_classes,
                                   float x_min, float x_max, DType dtype,
                                   std::vector<int> dims,
                                   std::vector<std::string> class_names) {
  Dataset d;
  d.input_len_ = input_len;
  d.inputs_ = std::move(inputs);
  d.labels_ = std::move(labels);
  d.num_classes_ = num_classes;
  d.x_min_ = x_min;
  d.x_max_ = x_max;
  d.dtype_ = dtype;
  d.dims_ = std::move(dims);
  d.class_names_ = std::move(class_names);
  d.validate();
  return d;
}

void Dataset::validate() const {
  if (input_len_ == 0) throw InvalidArgument("dataset input length must be positive");
  if (num_classes_ < 2) throw InvalidArgument("dataset needs at least 2 classes");
  if (inputs_.size() != labels_.size() * input_len_) {
    throw InvalidArgument("dataset input matrix size does not match n * len");
  }
  if (!(x_min_ <= x_max_)) throw InvalidArgument("dataset x_min > x_max");
  if (!dims_.empty()) {
    std::size_t prod = 1;
    for (const int d : dims_) {
      if (d <= 0) throw InvalidArgument("dataset dims must be positive");
      prod *= static_cast<std::size_t>(d);
    }
    if (prod != input_len_) throw InvalidArgument("dataset dims do not multiply to input length");
  }
  if (!class_names_.empty() &&
      class_names_.size() != static_cast<std::size_t>(num_classes_)) {
    throw InvalidArgument("class name table size differs from num_classes");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= num_classes_) {
      throw InvalidArgument("label out of range at row " + std::to_string(i));
    }
  }
  for (const float v : inputs_) {
    if (!std::isfinite(v) || v < x_min_ || v > x_max_) {
      throw InvalidArgument("input value outside [x_min, x_max] or not finite");
    }
    if (dtype_ == DType::integer && v != std::round(v)) {
      throw InvalidArgument("integer dataset holds a fractional value");
    }
  }
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes_), 0);
  for (const int y : labels_) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<float> x;
  x.reserve(indices.size() * input_len_);
  std::vector<int> y;
  y.reserve(indices.size());
  for (const std::size_t i : indices) {
    if (i >= size()) throw InvalidArgument("subset index out of range");
    const auto r = row(i);
    x.insert(x.end(), r.begin(), r.end());
    y.push_back(labels_[i]);
  }
  return create_with_range(input_len_, std::move(x), std::move(y), num_classes_,
                           x_min_, x_max_, dtype_, dims_, class_names_);
}

Dataset synth_blobs(std::size_t n, int num_classes, std::size_t dim,
                    double separation, std::uint64_t seed) {
  if (num_classes < 2) throw InvalidArgument("synth_blobs: need at least 2 classes");
  if (dim == 0) throw InvalidArgument("synth_blobs: dim must be positive");
  if (n < static_cast<std::size_t>(num_classes)) {
    throw InvalidArgument("synth_blobs: n must be >= num_classes");
  }
  if (!(separation >= 0.0) || !std::isfinite(separation)) {
    throw InvalidArgument("synth_blobs: separation must be finite and >= 0");
  }
  const auto classes = static_cast<std::size_t>(num_classes);
  std::vector<double> means(classes * dim, 0.0);
  if (dim >= classes) {
    for (std::size_t c = 0; c < classes; ++c) means[c * dim + c] = separation;
  } else if (dim >= 2) {
    for (std::size_t c = 0; c < classes; ++c) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / num_classes;
      means[c * dim + 0] = separation * std::cos(angle);
      means[c * dim + 1] = separation * std::sin(angle);
    }
  } else {
    for (std::size_t c = 0; c < classes; ++c) means[c] = separation * static_cast<double>(c);
  }

  Rng rng(derive_seed(seed, "blobs"));
  std::vector<float> x(n * dim);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % classes;
    y[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < dim; ++j) {
      x[i * dim + j] = static_cast<float>(means[c * dim + j] + rng.normal());
    }
  }
  return Dataset::create(dim, std::move(x), std::move(y), num_classes);
}

CsvDataset load_csv(const std::filesystem::path& path,
                    const std::string& label_column) {
  const csv::Table table = csv::read(path);
  const auto it = std::find(table.header.begin(), table.header.end(), label_column);
  if (it == table.header.end()) {
    throw DataError("'" + path.string() + "': unknown label column '" + label_column + "'");
  }
  const auto label_col = static_cast<std::size_t>(it - table.header.begin());
  const std::size_t width = table.header.size();
  if (width < 2) throw DataError("'" + path.string() + "': need at least one feature column");
  if (table.rows.empty()) throw DataError("'" + path.string() + "': no data rows");

  std::vector<float> x;
  x.reserve(table.rows.size() * (width - 1));
  std::vector<std::string> raw_labels;
  bool all_whole = true;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    if (row.size() != width) {
      throw DataError("'" + path.string() + "' row " + std::to_string(line) + ": expected " +
                      std::to_string(width) + " cells, got " + std::to_string(row.size()));
    }
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_col) {
        if (row[c].empty()) {
          throw DataError("'" + path.string() + "' row " + std::to_string(line) +
                          ", column '" + table.header[c] + "': empty label");
        }
        raw_labels.push_back(row[c]);
        continue;
      }
      double v = 0.0;
      if (!csv::parse_double(row[c], v) || !std::isfinite(v)) {
        throw DataError("'" + path.string() + "' row " + std::to_string(line) + ", column '" +
                        table.header[c] + "': non-numeric cell '" + row[c] + "'");
      }
      if (v != std::round(v)) all_whole = false;
      x.push_back(static_cast<float>(v));
    }
  }

  // Dense re-index in ascending label order.
  bool numeric = true;
  std::vector<double> numeric_values(raw_labels.size());
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    if (!csv::parse_double(raw_labels[i], numeric_values[i])) numeric = false;
  }
  std::vector<std::string> names;
  std::vector<int> labels(raw_labels.size());
  if (numeric) {
    std::map<double, int> ids;
    for (const double v : numeric_values) ids.emplace(v, 0);
    int next = 0;
    for (auto& [v, id] : ids) id = next++;
    for (std::size_t i = 0; i < raw_labels.size(); ++i) labels[i] = ids.at(numeric_values[i]);
    names.resize(ids.size());
    for (std::size_t i = 0; i < raw_labels.size(); ++i) names[labels[i]] = raw_labels[i];
  } else {
    std::map<std::string, int> ids;
    for (const auto& s : raw_labels) ids.emplace(s, 0);
    int next = 0;
    for (auto& [s, id] : ids) {
      id = next++;
      names.push_back(s);
    }
    for (std::size_t i = 0; i < raw_labels.size(); ++i) labels[i] = ids.at(raw_labels[i]);
  }
  if (names.size() < 2) {
    throw DataError("'" + path.string() + "': label column holds fewer than 2 distinct values");
  }

  CsvDataset out;
  for (std::size_t c = 0; c < width; ++c) {
    if (c != label_col) out.feature_names.push_back(table.header[c]);
  }
  out.label_column = label_column;
  const int num_classes = static_cast<int>(names.size());
  out.dataset = Dataset::create(width - 1, std::move(x), std::move(labels), num_classes,
                                all_whole ? DType::integer : DType::floating, {},
                                std::move(names));
  return out;
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > buf.size()) {
    throw DataError("'" + path.string() + "': truncated IDX header");
  }
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex;
  os.width(8);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  constexpr std::uint32_t kImageMagic = 0x00000803;
  constexpr std::uint32_t kLabelMagic = 0x00000801;
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);

  const std::uint32_t image_magic = read_be32(images, 0, images_path);
  if (image_magic != kImageMagic) {
    throw DataError("'" + images_path.string() + "': bad image magic " + hex32(image_magic) +
                    " (expected 0x00000803)");
  }
  const std::uint32_t label_magic = read_be32(labels, 0, labels_path);
  if (label_magic != kLabelMagic) {
    throw DataError("'" + labels_path.string() + "': bad label magic " + hex32(label_magic) +
                    " (expected 0x00000801)");
  }
  const std::size_t n = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t n_labels = read_be32(labels, 4, labels_path);
  if (n != n_labels) {
    throw DataError("IDX count mismatch: " + std::to_string(n) + " images vs " +
                    std::to_string(n_labels) + " labels");
  }
  if (n == 0 || rows == 0 || cols == 0) throw DataError("'" + images_path.string() + "': empty IDX");
  const std::size_t len = rows * cols;
  if (images.size() < 16 + n * len) {
    throw DataError("'" + images_path.string() + "': truncated pixel data");
  }
  if (labels.size() < 8 + n) throw DataError("'" + labels_path.string() + "': truncated label data");

  std::vector<float> x(n * len);
  for (std::size_t i = 0; i < n * len; ++i) x[i] = static_cast<float>(images[16 + i]);
  std::vector<int> y(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = labels[8 + i];
    max_label = std::max(max_label, y[i]);
  }
  return Dataset::create(len, std::move(x), std::move(y), std::max(2, max_label + 1),
                         DType::integer,
                         {static_cast<int>(rows), static_cast<int>(cols), 1});
}

SplitResult split_holdout(const Dataset& pool, double val_fraction,
                          std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw InvalidArgument("split_holdout: val_fraction must be in (0, 1)");
  }
  if (pool.size() < 2) throw InvalidArgument("split_holdout: pool needs at least 2 rows");
  const auto perm = permutation(pool.size(), derive_seed(seed, "holdout"));
  const auto n_val =
      static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(pool.size())));
  SplitResult out;
  out.val_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  out.test_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  std::sort(out.val_indices.begin(), out.val_indices.end());
  std::sort(out.test_indices.begin(), out.test_indices.end());
  out.val = pool.subset(out.val_indices);
  out.test = pool.subset(out.test_indices);
  return out;
}

ShardResult shard_users(const Dataset& dataset, int num_users, std::uint64_t seed) {
  if (num_users <= 0) throw InvalidArgument("shard_users: num_users must be positive");
  if (static_cast<std::size_t>(num_users) > dataset.size()) {
    throw InvalidArgument("shard_users: more users than samples");
  }
  const auto perm = permutation(dataset.size(), derive_seed(seed, "shards"));
  const std::size_t per_user = dataset.size() / static_cast<std::size_t>(num_users);
  ShardResult out;
  out.shards.resize(static_cast<std::size_t>(num_users));
  for (std::size_t u = 0; u < out.shards.size(); ++u) {
    out.shards[u].assign(perm.begin() + static_cast<std::ptrdiff_t>(u * per_user),
                         perm.begin() + static_cast<std::ptrdiff_t>((u + 1) * per_user));
  }
  out.dropped = dataset.size() - per_user * out.shards.size();
  return out;
}

}  // namespace natres::data
