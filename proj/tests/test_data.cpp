#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "protochaos/data.hpp"
#include "protochaos/rng.hpp"

using namespace protochaos;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path, std::ios::trunc);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("load_embeddings reads a small file") {
  const fs::path path = write_temp("pc_small.csv",
                                   "id,label,f0,f1,f2\n"
                                   "a,apple,1.0,2.0,3.0\n"
                                   "b,pear,-0.5,0,4.25\n");
  const Dataset ds = load_embeddings(path);
  CHECK(ds.size() == 2);
  CHECK(ds.dim() == 3);
  CHECK(ds.class_count() == 2);
  CHECK(ds.class_names()[0] == "apple");  // first-appearance order
  CHECK(ds.record(1).features[2] == 4.25);
}

TEST_CASE("load_embeddings rejects NaN features, naming the row") {
  const fs::path path = write_temp("pc_nan.csv",
                                   "id,label,f0\n"
                                   "a,apple,1.0\n"
                                   "b,pear,NaN\n");
  CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains(":3:"), ValidationError);
}

TEST_CASE("load_embeddings reports inconsistent column counts with the line number") {
  const fs::path path = write_temp("pc_cols.csv",
                                   "id,label,f0,f1\n"
                                   "a,apple,1.0,2.0\n"
                                   "b,pear,1.0\n");
  CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains(":3:"), ValidationError);
}

TEST_CASE("load_embeddings rejects non-numeric features") {
  const fs::path path = write_temp("pc_alpha.csv",
                                   "id,label,f0\n"
                                   "a,apple,abc\n");
  CHECK_THROWS_AS(load_embeddings(path), ValidationError);
}

TEST_CASE("empty files are empty-dataset errors") {
  CHECK_THROWS_AS(load_embeddings(write_temp("pc_empty.csv", "")), ValidationError);
  CHECK_THROWS_AS(load_embeddings(write_temp("pc_header_only.csv", "id,label,f0\n")),
                  ValidationError);
}

TEST_CASE("load_embeddings rejects duplicate ids") {
  const fs::path path = write_temp("pc_dup.csv",
                                   "id,label,f0\n"
                                   "a,apple,1.0\n"
                                   "a,pear,2.0\n");
  CHECK_THROWS_AS(load_embeddings(path), ValidationError);
}

TEST_CASE("per-class counts {100,115,105,74} load intact") {
  std::string csv = "id,label,f0,f1\n";
  const std::map<std::string, int> counts{
      {"Glioma", 100}, {"Meningioma", 115}, {"NoTumor", 105}, {"Pituitary", 74}};
  int uid = 0;
  for (const auto& [label, count] : counts) {
    for (int i = 0; i < count; ++i) {
      csv += "r" + std::to_string(uid++) + "," + label + ",0.5,1.5\n";
    }
  }
  const Dataset ds = load_embeddings(write_temp("pc_marginals.csv", csv));
  CHECK(ds.size() == 394);
  for (const auto& [label, count] : counts) {
    const int idx = ds.class_index(label);
    REQUIRE(idx >= 0);
    CHECK(static_cast<int>(ds.class_records(idx).size()) == count);
  }
}

TEST_CASE("csv round-trip preserves the dataset exactly") {
  SyntheticSpec spec;
  spec.num_classes = 3;
  spec.per_class = 5;
  spec.dim = 4;
  const Dataset ds = generate_synthetic(spec, 7);
  const fs::path path = write_temp("pc_roundtrip.csv", to_csv(ds));
  const Dataset back = load_embeddings(path);
  REQUIRE(back.size() == ds.size());
  CHECK(to_csv(back) == to_csv(ds));
  CHECK(dataset_digest(back) == dataset_digest(ds));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.record(i).features == ds.record(i).features);  // bit-exact
  }
}

TEST_CASE("generate_synthetic structure and determinism") {
  SyntheticSpec spec;
  spec.num_classes = 2;
  spec.per_class = 10;
  spec.dim = 3;
  const Dataset a = generate_synthetic(spec, 11);
  const Dataset b = generate_synthetic(spec, 11);
  CHECK(a.size() == 20);
  CHECK(a.class_count() == 2);
  CHECK(to_csv(a) == to_csv(b));
  const Dataset c = generate_synthetic(spec, 12);
  CHECK(to_csv(a) != to_csv(c));
}

TEST_CASE("vanishing sigma collapses samples onto centroids") {
  SyntheticSpec spec;
  spec.num_classes = 3;
  spec.per_class = 8;
  spec.dim = 3;
  spec.sigma = 1e-12;
  spec.separation = 6.0 / 1e-12;  // keep centroid distance at 6 absolute
  const Dataset ds = generate_synthetic(spec, 3);
  for (const EmbeddingRecord& rec : ds.records()) {
    const int c = ds.class_index(rec.label);
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(3);
    centroid[c] = 6.0;
    CHECK((rec.features - centroid).norm() < 1e-9);
  }
}

TEST_CASE("generate_synthetic rejects dim < classes") {
  SyntheticSpec spec;
  spec.num_classes = 5;
  spec.dim = 4;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), ValidationError);
}

TEST_CASE("split is stratified, disjoint, exhaustive and deterministic") {
  SyntheticSpec spec;
  spec.num_classes = 4;
  spec.per_class = 100;
  spec.dim = 4;
  const Dataset ds = generate_synthetic(spec, 5);
  const DataSplit parts = split(ds, {0.7, 0.15, 0.15}, 33);

  for (int c = 0; c < 4; ++c) {
    CHECK(parts.train.class_records(c).size() == 70);
    CHECK(parts.val.class_records(c).size() == 15);
    CHECK(parts.test.class_records(c).size() == 15);
  }

  std::set<std::string> ids;
  for (const Dataset* part : {&parts.train, &parts.val, &parts.test}) {
    for (const EmbeddingRecord& rec : part->records()) {
      CHECK(ids.insert(rec.id).second);  // pairwise disjoint by id
    }
  }
  CHECK(ids.size() == ds.size());  // exhaustive

  const DataSplit again = split(ds, {0.7, 0.15, 0.15}, 33);
  CHECK(to_csv(again.train) == to_csv(parts.train));
  CHECK(to_csv(again.val) == to_csv(parts.val));
  CHECK(to_csv(again.test) == to_csv(parts.test));
}

TEST_CASE("split counts follow largest-remainder rounding") {
  SyntheticSpec spec;
  spec.num_classes = 2;
  spec.per_class = 11;
  spec.dim = 2;
  const Dataset ds = generate_synthetic(spec, 9);
  const DataSplit parts = split(ds, {0.7, 0.15, 0.15}, 1);
  // ideals 7.7 / 1.65 / 1.65 -> bases 7/1/1; remainders 0.7, 0.65, 0.65
  // leave two leftovers for train and (tie, resolved val-first) val.
  CHECK(parts.train.class_records(0).size() == 8);
  CHECK(parts.val.class_records(0).size() == 2);
  CHECK(parts.test.class_records(0).size() == 1);
}

TEST_CASE("split errors") {
  SyntheticSpec spec;
  spec.num_classes = 2;
  spec.per_class = 2;  // too small to stratify
  spec.dim = 2;
  const Dataset tiny = generate_synthetic(spec, 2);
  CHECK_THROWS_AS(split(tiny, {0.7, 0.15, 0.15}, 1), ValidationError);

  spec.per_class = 30;
  const Dataset ds = generate_synthetic(spec, 2);
  CHECK_THROWS_AS(split(ds, {0.5, 0.5, 0.1}, 1), ValidationError);   // sums to 1.1
  CHECK_THROWS_AS(split(ds, {1.0, -0.1, 0.1}, 1), ValidationError);  // negative
  // a part that would receive zero records from a class
  CHECK_THROWS_AS(split(ds, {0.98, 0.01, 0.01}, 1), ValidationError);
}

TEST_CASE("separability oracle: nearest centroid on raw features") {
  SyntheticSpec spec;
  spec.num_classes = 4;
  spec.per_class = 200;
  spec.dim = 32;
  spec.separation = 6.0;
  const Dataset ds = generate_synthetic(spec, 2024);
  const DataSplit parts = split(ds, {0.7, 0.15, 0.15}, 8);

  // Centroids from the first 50 train records per class.
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(spec.dim, 4);
  for (int c = 0; c < 4; ++c) {
    const std::vector<int>& members = parts.train.class_records(c);
    REQUIRE(members.size() >= 50);
    for (int i = 0; i < 50; ++i) {
      centroids.col(c) +=
          parts.train.record(static_cast<std::size_t>(members[static_cast<std::size_t>(i)]))
              .features;
    }
    centroids.col(c) /= 50.0;
  }

  int correct = 0;
  int total = 0;
  for (const Dataset* held_out : {&parts.val, &parts.test}) {
    for (const EmbeddingRecord& rec : held_out->records()) {
      int best = 0;
      double best_d = (rec.features - centroids.col(0)).squaredNorm();
      for (int c = 1; c < 4; ++c) {
        const double d = (rec.features - centroids.col(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      const std::string& predicted =
          parts.train.class_names()[static_cast<std::size_t>(best)];
      correct += predicted == rec.label ? 1 : 0;
      ++total;
    }
  }
  CHECK(static_cast<double>(correct) / total >= 0.99);
}
