#include "protochaos/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "protochaos/hash.hpp"
#include "protochaos/rng.hpp"

namespace protochaos {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_feature(const std::string& text, const std::filesystem::path& path,
                     std::size_t line_no, const std::string& record_id) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": feature '" +
                          text + "' in record '" + record_id + "' is not a number");
  }
  if (!std::isfinite(value)) {
    throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": feature '" +
                          text + "' in record '" + record_id + "' is not finite");
  }
  return value;
}

}  // namespace

Dataset Dataset::from_records(std::vector<EmbeddingRecord> records) {
  if (records.empty()) {
    throw ValidationError("dataset is empty");
  }
  Dataset ds;
  ds.dim_ = records.front().features.size();
  if (ds.dim_ < 1) {
    throw ValidationError("dataset records need at least one feature");
  }
  std::unordered_map<std::string, int> class_idx;
  std::unordered_set<std::string> seen_ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const EmbeddingRecord& rec = records[i];
    if (rec.features.size() != ds.dim_) {
      throw ValidationError("record '" + rec.id + "' has " +
                            std::to_string(rec.features.size()) + " features, expected " +
                            std::to_string(ds.dim_));
    }
    if (!rec.features.allFinite()) {
      throw ValidationError("record '" + rec.id + "' has non-finite features");
    }
    if (!seen_ids.insert(rec.id).second) {
      throw ValidationError("duplicate record id '" + rec.id + "'");
    }
    auto [it, inserted] = class_idx.try_emplace(rec.label, ds.class_count());
    if (inserted) {
      ds.class_names_.push_back(rec.label);
      ds.by_class_.emplace_back();
    }
    ds.by_class_[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(i));
  }
  ds.records_ = std::move(records);
  return ds;
}

const std::vector<int>& Dataset::class_records(int class_idx) const {
  return by_class_.at(static_cast<std::size_t>(class_idx));
}

int Dataset::class_index(const std::string& label) const {
  const auto it = std::find(class_names_.begin(), class_names_.end(), label);
  return it == class_names_.end() ? -1
                                  : static_cast<int>(it - class_names_.begin());
}

void SyntheticSpec::validate() const {
  if (num_classes < 1) throw ValidationError("synthetic: num_classes must be >= 1");
  if (per_class < 1) throw ValidationError("synthetic: per_class must be >= 1");
  if (dim < 1) throw ValidationError("synthetic: dim must be >= 1");
  if (!(separation > 0.0)) throw ValidationError("synthetic: separation must be > 0");
  if (!(sigma > 0.0)) throw ValidationError("synthetic: sigma must be > 0");
  if (!(outlier_fraction >= 0.0) || !(outlier_fraction < 1.0)) {
    throw ValidationError("synthetic: outlier_fraction must be in [0, 1)");
  }
  if (!(outlier_scale >= 1.0)) throw ValidationError("synthetic: outlier_scale must be >= 1");
  if (dim < num_classes) {
    throw ValidationError("synthetic: dim (" + std::to_string(dim) +
                          ") must be >= num_classes (" + std::to_string(num_classes) +
                          ") for axis-aligned centroids");
  }
}

Dataset load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open embeddings file: " + path.string());
  }
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw ValidationError(path.string() + ": empty dataset (no header)");
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
    throw ValidationError(path.string() +
                          ":1: header must be 'id,label,f0,...' with at least one feature");
  }
  const std::size_t columns = header.size();

  std::vector<EmbeddingRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != columns) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(columns) + " columns, got " +
                            std::to_string(fields.size()));
    }
    EmbeddingRecord rec;
    rec.id = fields[0];
    rec.label = fields[1];
    rec.features.resize(static_cast<Eigen::Index>(columns - 2));
    for (std::size_t f = 2; f < columns; ++f) {
      rec.features[static_cast<Eigen::Index>(f - 2)] =
          parse_feature(fields[f], path, line_no, rec.id);
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) {
    throw ValidationError(path.string() + ": empty dataset (no records)");
  }
  return Dataset::from_records(std::move(records));
}

std::string to_csv(const Dataset& dataset) {
  std::string out = "id,label";
  for (Eigen::Index f = 0; f < dataset.dim(); ++f) {
    out += ",f" + std::to_string(f);
  }
  out += '\n';
  char buf[64];
  for (const EmbeddingRecord& rec : dataset.records()) {
    out += rec.id;
    out += ',';
    out += rec.label;
    for (Eigen::Index f = 0; f < dataset.dim(); ++f) {
      std::snprintf(buf, sizeof(buf), ",%.17g", rec.features[f]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void save_embeddings(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write embeddings file: " + path.string());
  }
  out << to_csv(dataset);
  if (!out) {
    throw IoError("failed writing embeddings file: " + path.string());
  }
}

std::string dataset_digest(const Dataset& dataset) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(fnv1a64(to_csv(dataset))));
  return buf;
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<EmbeddingRecord> records;
  records.reserve(static_cast<std::size_t>(spec.num_classes) *
                  static_cast<std::size_t>(spec.per_class));
  const int n_outliers =
      static_cast<int>(std::llround(spec.outlier_fraction * spec.per_class));
  char id[64];
  for (int c = 0; c < spec.num_classes; ++c) {
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(spec.dim);
    centroid[c] = spec.separation * spec.sigma;
    for (int i = 0; i < spec.per_class; ++i) {
      const double scale = i < n_outliers ? spec.outlier_scale * spec.sigma : spec.sigma;
      EmbeddingRecord rec;
      std::snprintf(id, sizeof(id), "c%d_s%06d", c, i);
      rec.id = id;
      rec.label = "class" + std::to_string(c);
      rec.features.resize(spec.dim);
      for (Eigen::Index f = 0; f < spec.dim; ++f) {
        rec.features[f] = centroid[f] + scale * rng.gaussian();
      }
      records.push_back(std::move(rec));
    }
  }
  return Dataset::from_records(std::move(records));
}

DataSplit split(const Dataset& dataset, const std::array<double, 3>& fractions,
                std::uint64_t seed) {
  double sum = 0.0;
  for (const double f : fractions) {
    if (!(f > 0.0)) throw ValidationError("split fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split fractions must sum to 1, got " + std::to_string(sum));
  }

  Rng rng(seed);
  // part_of[record position] in {0: train, 1: val, 2: test}
  std::vector<int> part_of(dataset.size(), -1);
  for (int c = 0; c < dataset.class_count(); ++c) {
    const std::string& name = dataset.class_names()[static_cast<std::size_t>(c)];
    std::vector<int> positions = dataset.class_records(c);
    const int n = static_cast<int>(positions.size());
    if (n < 3) {
      throw ValidationError("class '" + name + "' has " + std::to_string(n) +
                            " records; at least 3 are required to stratify");
    }
    rng.shuffle(positions);

    // Largest-remainder allocation, remainder ties resolved train-first.
    std::array<int, 3> counts{};
    std::array<double, 3> remainders{};
    int assigned = 0;
    for (int p = 0; p < 3; ++p) {
      const double ideal = fractions[static_cast<std::size_t>(p)] * n;
      counts[static_cast<std::size_t>(p)] = static_cast<int>(std::floor(ideal));
      remainders[static_cast<std::size_t>(p)] = ideal - std::floor(ideal);
      assigned += counts[static_cast<std::size_t>(p)];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return remainders[static_cast<std::size_t>(a)] > remainders[static_cast<std::size_t>(b)];
    });
    for (int leftover = n - assigned, i = 0; leftover > 0; --leftover, ++i) {
      ++counts[static_cast<std::size_t>(order[static_cast<std::size_t>(i % 3)])];
    }
    if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0) {
      throw ValidationError("class '" + name +
                            "' is too small to appear in every split part");
    }
    int cursor = 0;
    for (int p = 0; p < 3; ++p) {
      for (int k = 0; k < counts[static_cast<std::size_t>(p)]; ++k, ++cursor) {
        part_of[static_cast<std::size_t>(positions[static_cast<std::size_t>(cursor)])] = p;
      }
    }
  }

  // Emit each part in original dataset order.
  std::array<std::vector<EmbeddingRecord>, 3> parts;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    parts[static_cast<std::size_t>(part_of[i])].push_back(dataset.record(i));
  }
  return DataSplit{Dataset::from_records(std::move(parts[0])),
                   Dataset::from_records(std::move(parts[1])),
                   Dataset::from_records(std::move(parts[2]))};
}

}  // namespace protochaos
