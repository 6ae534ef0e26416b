#include "safelens/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "safelens/error.hpp"
#include "safelens/random.hpp"
#include "safelens/tensor_io.hpp"

namespace safelens {

void SyntheticSpec::validate() const {
  if (dim < kNumCategories) throw ConfigError("synthetic dim must be at least 7");
  if (train_per_class == 0 || val_per_class == 0) {
    throw ConfigError("synthetic corpus needs train and val samples in every class");
  }
  if (!(separation > 0.0) || !std::isfinite(separation)) {
    throw ConfigError("synthetic separation must be positive");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("synthetic noise must be >= 0");
  if (!(flip_fraction >= 0.0 && flip_fraction < 0.5)) {
    throw ConfigError("synthetic flip fraction must lie in [0, 0.5)");
  }
  if (tokens == 0) throw ConfigError("synthetic tokens must be positive");
  if (!(toy_learning_rate > 0.0)) throw ConfigError("toy learning rate must be positive");
  if (!(duration_seconds > 0.0)) throw ConfigError("synthetic duration must be positive");
  if (frame_count < kMinFrames) throw ConfigError("synthetic frame_count must be at least 2");
}

std::vector<SampleRecord> SyntheticCorpus::all_records() const {
  std::vector<SampleRecord> out;
  for (const Manifest* m : {&train, &val, &test}) {
    out.insert(out.end(), m->records.begin(), m->records.end());
  }
  return out;
}

std::vector<double> toy_logit_residual(const std::vector<double>& weights, std::size_t dim,
                                       const std::vector<double>& x, Category y) {
  std::array<double, kNumCategories> logits{};
  for (std::size_t k = 0; k < kNumCategories; ++k) {
    double z = 0.0;
    for (std::size_t j = 0; j < dim; ++j) z += weights[k * dim + j] * x[j];
    logits[k] = z;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double norm = 0.0;
  for (auto& z : logits) {
    z = std::exp(z - top);
    norm += z;
  }
  std::vector<double> u(kNumCategories);
  for (std::size_t k = 0; k < kNumCategories; ++k) u[k] = logits[k] / norm;
  u[ordinal(y)] -= 1.0;
  return u;
}

namespace {

struct Draw {
  std::string id;
  Split split;
  Category clean;
  Category label;
  std::vector<float> rows;  // tokens x dim
  std::vector<double> x;    // mean row
};

std::string make_id(Split s, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%05zu", std::string(to_string(s)).c_str(), i);
  return buf;
}

std::vector<Draw> draw_split(const SyntheticSpec& spec, Split split, std::size_t per_class,
                             Rng& rng) {
  std::vector<Draw> out;
  for (Category c : canonical_categories()) {
    for (std::size_t s = 0; s < per_class; ++s) {
      Draw d;
      d.id = make_id(split, out.size());
      d.split = split;
      d.clean = d.label = c;
      d.rows.resize(spec.tokens * spec.dim);
      d.x.assign(spec.dim, 0.0);
      for (std::size_t t = 0; t < spec.tokens; ++t) {
        for (std::size_t j = 0; j < spec.dim; ++j) {
          const double centre = j == ordinal(c) ? spec.separation : 0.0;
          const auto v = static_cast<float>(centre + spec.noise * standard_normal(rng));
          d.rows[t * spec.dim + j] = v;
          d.x[j] += static_cast<double>(v) / static_cast<double>(spec.tokens);
        }
      }
      out.push_back(std::move(d));
    }
  }
  return out;
}

std::vector<double> fit_toy_model(const SyntheticSpec& spec, const std::vector<Draw>& train) {
  const std::size_t d = spec.dim;
  std::vector<double> w(kNumCategories * d, 0.0);
  std::vector<double> grad(w.size());
  const double scale = spec.toy_learning_rate / static_cast<double>(train.size());
  for (std::size_t step = 0; step < spec.toy_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& s : train) {
      const auto u = toy_logit_residual(w, d, s.x, s.label);
      for (std::size_t k = 0; k < kNumCategories; ++k) {
        for (std::size_t j = 0; j < d; ++j) grad[k * d + j] += u[k] * s.x[j];
      }
    }
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= scale * grad[i];
  }
  return w;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  auto train = draw_split(spec, Split::train, spec.train_per_class, rng);
  auto val = draw_split(spec, Split::val, spec.val_per_class, rng);
  auto test = draw_split(spec, Split::test, spec.test_per_class, rng);

  SyntheticCorpus corpus;
  const auto flips = static_cast<std::size_t>(
      std::llround(spec.flip_fraction * static_cast<double>(train.size())));
  if (flips > 0) {
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(std::span<std::size_t>(order), rng);
    order.resize(flips);
    std::sort(order.begin(), order.end());
    for (std::size_t i : order) {
      const auto shift = 1 + uniform_index(rng, kNumCategories - 1);
      train[i].label = category_from_ordinal((ordinal(train[i].clean) + shift) % kNumCategories);
      corpus.flipped_ids.push_back(train[i].id);
    }
  }

  corpus.toy_weights = fit_toy_model(spec, train);

  auto emit = [&](std::vector<Draw>& draws, Manifest& m) {
    for (auto& s : draws) {
      SampleRecord r;
      r.id = s.id;
      r.split = s.split;
      r.label = s.label;
      r.embedding_ref = "embeddings/" + s.id + ".slvf";
      r.gradient_ref = "gradients/" + s.id + ".slvf";
      r.extra["duration_seconds"] = spec.duration_seconds;
      r.extra["frame_count"] = spec.frame_count;
      r.extra["clean_label"] = std::string(category_name(s.clean));
      if (s.split == Split::train) r.extra["flipped"] = s.clean != s.label;

      const auto u = toy_logit_residual(corpus.toy_weights, spec.dim, s.x, s.label);
      GradientVector g;
      g.source_id = s.id;
      g.checkpoint_id = "default";
      g.values.resize(kNumCategories * spec.dim);
      for (std::size_t k = 0; k < kNumCategories; ++k) {
        for (std::size_t j = 0; j < spec.dim; ++j) {
          g.values[k * spec.dim + j] = static_cast<float>(u[k] * s.x[j]);
        }
      }
      corpus.gradients.emplace(s.id, std::move(g));
      corpus.embeddings.emplace(s.id,
                                HiddenStates::dense(spec.tokens, spec.dim, std::move(s.rows)));
      corpus.gold.emplace(s.id, s.clean);
      m.records.push_back(std::move(r));
    }
  };
  emit(train, corpus.train);
  emit(val, corpus.val);
  emit(test, corpus.test);
  return corpus;
}

void write_synthetic_corpus(SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "embeddings");
  std::filesystem::create_directories(dir / "gradients");
  for (Manifest* m : {&corpus.train, &corpus.val, &corpus.test}) {
    m->base_dir = dir;
    for (const auto& r : m->records) {
      const HiddenStates& h = corpus.embeddings.at(r.id);
      write_tensor({{static_cast<std::uint32_t>(h.n), static_cast<std::uint32_t>(h.d)}, h.values},
                   dir / *r.embedding_ref);
      const GradientVector& g = corpus.gradients.at(r.id);
      write_tensor({{static_cast<std::uint32_t>(g.values.size())}, g.values}, dir / *r.gradient_ref);
    }
  }
  write_manifest(corpus.train, dir / "train.jsonl");
  write_manifest(corpus.val, dir / "val.jsonl");
  if (!corpus.test.records.empty()) write_manifest(corpus.test, dir / "test.jsonl");
}

}  // namespace safelens
