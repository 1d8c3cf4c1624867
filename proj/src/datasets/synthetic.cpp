#include "iosp/datasets/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "iosp/numkernel/rng.hpp"

namespace iosp::data {

namespace {

std::vector<double> normalized(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

std::string class_name(std::uint32_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "class_%03u", id);
  return buf;
}

void append_samples(EmbeddingSet& set, std::uint32_t class_id, const std::vector<double>& prototype,
                    std::uint32_t count, double sigma, num::Rng& rng) {
  for (std::uint32_t s = 0; s < count; ++s) {
    std::vector<double> v = prototype;
    if (sigma > 0.0) {
      for (double& x : v) x += sigma * rng.normal();
      v = normalized(std::move(v));
    }
    EmbeddingRecord rec{class_id, std::vector<float>(v.begin(), v.end())};
    set.records.push_back(std::move(rec));
  }
}

}  // namespace

SyntheticDataset gen_synthetic(const SyntheticSpec& spec) {
  if (!(spec.sigma >= 0.0)) throw std::invalid_argument("gen_synthetic: sigma must be >= 0");
  if (spec.classes == 0 || spec.dim == 0) {
    throw std::invalid_argument("gen_synthetic: classes and dim must be positive");
  }
  num::Rng proto_rng(num::derive_seed(spec.seed, "synthetic-prototypes"));
  num::Rng train_rng(num::derive_seed(spec.seed, "synthetic-train"));
  num::Rng test_rng(num::derive_seed(spec.seed, "synthetic-test"));

  SyntheticDataset out;
  out.train.dim = out.test.dim = spec.dim;
  out.train.notes = "synthetic train split";
  out.test.notes = "synthetic test split";
  for (std::uint32_t c = 0; c < spec.classes; ++c) {
    std::vector<double> proto(spec.dim);
    for (double& x : proto) x = proto_rng.normal();
    proto = normalized(std::move(proto));
    const ClassInfo info{c, class_name(c)};
    out.train.classes.push_back(info);
    out.test.classes.push_back(info);
    append_samples(out.train, c, proto, spec.train_per_class, spec.sigma, train_rng);
    append_samples(out.test, c, proto, spec.test_per_class, spec.sigma, test_rng);
  }
  return out;
}

void write_synthetic(const SyntheticDataset& dataset, const std::filesystem::path& dir) {
  write_embeddings(dataset.train, dir / "train");
  write_embeddings(dataset.test, dir / "test");
}

}  // namespace iosp::data
