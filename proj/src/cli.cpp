#include "safelens/cli.hpp"

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "safelens/cascade.hpp"
#include "safelens/config.hpp"
#include "safelens/curation.hpp"
#include "safelens/dataset.hpp"
#include "safelens/error.hpp"
#include "safelens/metrics.hpp"
#include "safelens/numfmt.hpp"
#include "safelens/parallel.hpp"
#include "safelens/probe_archive.hpp"
#include "safelens/service.hpp"
#include "safelens/synthetic.hpp"

namespace safelens {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration");
  cmd->add_option("--seed", c.seed, "Seed for every random choice");
  cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

RunConfig load_config(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) {
    cfg = load_run_config(c.config);
  } else {
    cfg.captioner = BackendSpec{"mock", "mock-captioner", {}, json::object()};
  }
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.probe_training.seed = *c.seed;
  }
  if (c.threads) cfg.threads = *c.threads;
  cfg.validate();
  return cfg;
}

fs::path pick(const std::string& flag, const std::optional<fs::path>& configured,
              const std::string& what) {
  if (!flag.empty()) return flag;
  if (configured) return *configured;
  throw ConfigError("missing " + what);
}

fs::path pick_input(const std::string& flag, const std::optional<fs::path>& configured,
                    const std::string& what) {
  fs::path p = pick(flag, configured, what);
  require_existing(p, what);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

template <typename Range, typename Fn>
std::string jsonl(const Range& items, Fn&& to_line) {
  std::string text;
  for (const auto& item : items) {
    text += to_line(item).dump();
    text += '\n';
  }
  return text;
}

std::shared_ptr<const Cascade> build_cascade(const RunConfig& cfg, const Manifest* context,
                                             const fs::path& probe_path) {
  if (!cfg.embedder) throw ConfigError("config lacks backends.embedder");
  if (!cfg.captioner) throw ConfigError("config lacks backends.captioner");
  if (!cfg.reasoner) throw ConfigError("config lacks backends.reasoner");
  auto probe = std::make_shared<const ProbeModel>(load_probe(probe_path));
  BackendSet b = make_backends(cfg, context);
  return std::make_shared<const Cascade>(
      cfg.cascade, CascadeBackends{b.embedder, b.captioner, b.reasoner, probe});
}

std::vector<double> parse_taus(const std::string& text) {
  if (text.empty()) return default_tau_grid();
  std::vector<double> taus;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      taus.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad tau '" + item + "'");
    }
  }
  return taus;
}

/// id -> label from a JSONL file; `key` is tried first, then the other label key.
std::vector<std::pair<std::string, Category>> read_labels(const fs::path& path,
                                                          const std::string& key) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  const std::string other = key == "predicted" ? "label" : "predicted";
  std::vector<std::pair<std::string, Category>> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + " line " + std::to_string(n);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      throw DataError(where + ": missing string 'id'");
    }
    const json* label = j.contains(key) ? &j[key] : j.contains(other) ? &j[other] : nullptr;
    if (!label || !label->is_string()) throw DataError(where + ": missing '" + key + "'");
    out.emplace_back(j["id"].get<std::string>(), parse_category(label->get<std::string>()));
  }
  if (out.empty()) throw DataError("'" + path.string() + "' holds no rows");
  return out;
}

CurationOptions curation_options(const RunConfig& cfg) {
  CurationOptions o;
  o.probe = cfg.probe_training;
  o.probe_subset_fraction = cfg.probe_subset_fraction;
  o.screen_variant = cfg.cascade.screen_variant;
  o.threads = cfg.threads;
  return o;
}

CurationBackends curation_backends(const RunConfig& cfg, const Manifest& context) {
  BackendSet b = make_backends(cfg, &context);
  return {b.embedder, b.captioner, b.cot_generator};
}

void write_augment_outputs(const AugmentResult& a, const fs::path& requests,
                           const std::string& cot_out) {
  write_text(requests, jsonl(a.requests, [](const CotRequest& r) { return to_json(r); }));
  if (!cot_out.empty()) {
    if (a.cot_responses.empty()) throw ConfigError("--cot-out needs backends.cot_generator");
    std::string text;
    for (std::size_t i = 0; i < a.requests.size(); ++i) {
      text += cot_sample_json(a.requests[i], a.cot_responses[i]).dump() + '\n';
    }
    write_text(cot_out, text);
  }
}

// ---- commands ----

struct SynthArgs {
  std::string out;
  SyntheticSpec spec;
  double tau = kDefaultTau;
};

int cmd_synth(const Common& c, SynthArgs& a, std::ostream& out) {
  if (c.seed) a.spec.seed = *c.seed;
  SyntheticCorpus corpus = generate_synthetic_corpus(a.spec);
  const fs::path dir = a.out;
  write_synthetic_corpus(corpus, dir);
  std::string flipped;
  for (const auto& id : corpus.flipped_ids) flipped += id + '\n';
  write_text(dir / "flipped_ids.txt", flipped);

  json cfg = {
      {"seed", a.spec.seed},
      {"backends",
       {{"embedder", {{"type", "manifest"}, {"model_id", "synthetic-embedder"}}},
        {"captioner",
         {{"type", "mock"},
          {"model_id", "mock-captioner"},
          {"cost", {{"fixed_seconds", 0.0}, {"per_frame_seconds", 0.15}}}}},
        {"reasoner",
         {{"type", "oracle"},
          {"model_id", "oracle-reasoner"},
          {"accuracy", 1.0},
          {"cost", {{"fixed_seconds", 2.0}, {"per_frame_seconds", 0.1}}}}},
        {"cot_generator", {{"type", "echo"}, {"model_id", "echo-generator"}}}}},
      {"cascade", {{"tau", a.tau}}},
      {"probe", {{"path", "probe.slpa"}, {"epochs", 30}, {"learning_rate", 0.05}}},
      {"paths",
       {{"train", "train.jsonl"},
        {"val", "val.jsonl"},
        {"manifest", corpus.test.records.empty() ? "val.jsonl" : "test.jsonl"}}}};
  write_text(dir / "config.json", cfg.dump(2) + '\n');
  out << "wrote " << corpus.train.records.size() << " train, " << corpus.val.records.size()
      << " val, " << corpus.test.records.size() << " test samples ("
      << corpus.flipped_ids.size() << " flipped) to " << dir.string() << '\n';
  return kExitOk;
}

struct CurateArgs {
  std::string train, val, out, report, cot_requests, cot_out, probe_out;
};

int cmd_curate(const Common& c, const CurateArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(c);
  const fs::path train_path = pick_input(a.train, cfg.train_manifest, "train manifest");
  const fs::path val_path = pick_input(a.val, cfg.val_manifest, "validation manifest");
  if (a.out.empty() || a.report.empty()) throw ConfigError("curate needs --out and --report");
  const fs::path requests =
      a.cot_requests.empty() ? fs::path(a.out + ".cot_requests.jsonl") : fs::path(a.cot_requests);

  const Manifest train = read_manifest(train_path);
  const Manifest val = read_manifest(val_path);
  const CurationResult r =
      run_curation(train, val, curation_options(cfg), curation_backends(cfg, train));

  write_filter_report(r.report, a.report);
  Manifest filtered = r.filtered;
  write_manifest(filtered, a.out);
  write_augment_outputs(r.augmented, requests, a.cot_out);
  if (!a.probe_out.empty()) save_probe(r.augmented.probe, a.probe_out);

  const FilterSummary s = summarize(r.report);
  out << "kept " << s.total_kept() << " of " << r.report.rows.size() << " training samples\n";
  for (Category k : canonical_categories()) {
    out << "  " << category_name(k) << ": kept " << s.kept[ordinal(k)] << ", removed "
        << s.removed[ordinal(k)] << '\n';
  }
  for (const auto& w : r.augmented.warnings) out << "warning: " << w << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string manifest, out;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> learning_rate, holdout;
};

int cmd_train_probe(const Common& c, const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = load_config(c);
  if (a.epochs) cfg.probe_training.epochs = *a.epochs;
  if (a.batch_size) cfg.probe_training.batch_size = *a.batch_size;
  if (a.learning_rate) cfg.probe_training.learning_rate = *a.learning_rate;
  if (a.holdout) cfg.probe_training.holdout_fraction = *a.holdout;
  cfg.validate();
  const fs::path manifest_path = pick_input(a.manifest, cfg.train_manifest, "training manifest");
  const fs::path out_path = pick(a.out, cfg.probe_path, "probe output path (--out)");

  const Manifest m = read_manifest(manifest_path);
  BackendSet b = make_backends(cfg, &m);
  std::vector<LabeledStates> data;
  data.reserve(m.records.size());
  for (const auto& r : m.records) {
    data.push_back({hidden_states_for(m, r, b.embedder.get(), cfg.cascade.screen_variant),
                    r.label});
  }
  const ProbeModel probe = train_probe(data, cfg.probe_training);
  save_probe(probe, out_path);
  out << "trained on " << probe.training.train_count << " samples, final loss "
      << format_number(probe.training.loss_trace.back());
  if (probe.training.holdout_accuracy) {
    out << ", holdout accuracy " << format_number(*probe.training.holdout_accuracy) << " on "
        << probe.training.holdout_count;
  }
  out << '\n';
  return kExitOk;
}

struct AugmentArgs {
  std::string manifest, probe, out, cot_out;
};

int cmd_augment(const Common& c, const AugmentArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(c);
  const fs::path manifest_path = pick_input(a.manifest, cfg.manifest, "manifest");
  if (a.out.empty()) throw ConfigError("augment needs --out");
  std::optional<ProbeModel> probe;
  if (!a.probe.empty()) {
    require_existing(a.probe, "probe");
    probe = load_probe(a.probe);
  }
  const Manifest m = read_manifest(manifest_path);
  const AugmentResult r = augment(m, curation_options(cfg), curation_backends(cfg, m), probe);
  write_augment_outputs(r, a.out, a.cot_out);
  out << "wrote " << r.requests.size() << " CoT requests\n";
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  return kExitOk;
}

struct InferArgs {
  std::string manifest, probe, out;
  std::optional<double> tau;
};

int cmd_infer(const Common& c, const InferArgs& a, std::ostream& out) {
  RunConfig cfg = load_config(c);
  if (a.tau) cfg.cascade.tau = *a.tau;
  cfg.validate();
  const fs::path manifest_path = pick_input(a.manifest, cfg.manifest, "manifest");
  const fs::path probe_path = pick_input(a.probe, cfg.probe_path, "probe");
  if (a.out.empty()) throw ConfigError("infer needs --out");
  const Manifest m = read_manifest(manifest_path);
  const auto cascade = build_cascade(cfg, &m, probe_path);

  std::vector<Decision> decisions(m.records.size());
  std::vector<std::exception_ptr> errors(m.records.size());
  parallel_for(
      m.records.size(),
      [&](std::size_t i) {
        try {
          decisions[i] = cascade->moderate(m.records[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      },
      cfg.threads);
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  write_text(a.out, jsonl(decisions, [](const Decision& d) { return to_json(d); }));
  std::size_t escalated = 0;
  for (const auto& d : decisions) escalated += d.path != DecisionPath::s1;
  out << "moderated " << decisions.size() << " samples, " << escalated << " escalated at tau "
      << format_number(cfg.cascade.tau) << '\n';
  return kExitOk;
}

struct SweepArgs {
  std::string manifest, probe, out, taus;
};

int cmd_sweep(const Common& c, const SweepArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(c);
  const fs::path manifest_path = pick_input(a.manifest, cfg.manifest, "manifest");
  const fs::path probe_path = pick_input(a.probe, cfg.probe_path, "probe");
  if (a.out.empty()) throw ConfigError("sweep needs --out");
  const std::vector<double> taus = parse_taus(a.taus);
  const Manifest m = read_manifest(manifest_path);
  const auto cascade = build_cascade(cfg, &m, probe_path);
  const SweepResult r = sweep(m.records, *cascade, taus, cfg.threads);
  write_text(a.out, format_sweep_csv(r.points));
  out << "wrote " << r.points.size() << " sweep points\n";
  return kExitOk;
}

struct EvalArgs {
  std::string pred, gold, out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.pred.empty() || a.gold.empty()) throw ConfigError("eval needs --pred and --gold");
  require_existing(a.pred, "prediction file");
  require_existing(a.gold, "gold file");
  const auto preds = read_labels(a.pred, "predicted");
  const auto golds = read_labels(a.gold, "label");
  std::map<std::string, Category, std::less<>> by_id;
  for (const auto& [id, c] : preds) {
    if (!by_id.emplace(id, c).second) throw DataError("duplicate prediction for '" + id + "'");
  }
  std::vector<Category> p, g;
  for (const auto& [id, c] : golds) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("no prediction for '" + id + "'");
    p.push_back(it->second);
    g.push_back(c);
    by_id.erase(it);
  }
  if (!by_id.empty()) throw DataError("prediction for unknown id '" + by_id.begin()->first + "'");
  const std::string report = metrics_report(confusion(p, g)).dump(2) + '\n';
  if (a.out.empty()) {
    out << report;
  } else {
    write_text(a.out, report);
  }
  return kExitOk;
}

struct BenchArgs {
  std::string manifest, probe, out;
  std::optional<double> tau;
};

int cmd_bench(const Common& c, const BenchArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(c);
  if (a.tau) cfg.cascade.tau = *a.tau;
  cfg.validate();
  const fs::path manifest_path = pick_input(a.manifest, cfg.manifest, "manifest");
  const fs::path probe_path = pick_input(a.probe, cfg.probe_path, "probe");
  const Manifest m = read_manifest(manifest_path);
  const auto cascade = build_cascade(cfg, &m, probe_path);

  const auto started = std::chrono::steady_clock::now();
  const SweepResult r = sweep(m.records, *cascade, {cfg.cascade.tau}, cfg.threads);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const auto& decisions = r.decisions.front();
  CostRecord total;
  double s1_seconds = 0.0;
  double s2_seconds = 0.0;
  std::size_t escalated = 0;
  for (const auto& d : decisions) {
    total.merge(d.cost);
    s1_seconds += d.s1.cost.seconds();
    if (d.path != DecisionPath::s1) {
      s2_seconds += d.cost.seconds() - d.s1.cost.seconds();
      ++escalated;
    }
  }
  const double n = static_cast<double>(decisions.size());
  const double mean_s1 = s1_seconds / n;
  const double mean_s2 = escalated ? s2_seconds / static_cast<double>(escalated) : 0.0;
  const double fraction = static_cast<double>(escalated) / n;
  json components = json::array();
  for (const auto& e : total.breakdown()) {
    components.push_back({{"component", e.component},
                          {"model_id", e.model_id},
                          {"calls", e.calls},
                          {"seconds", e.seconds},
                          {"gflops", e.gflops}});
  }
  const json report = {{"n", decisions.size()},
                       {"tau", cfg.cascade.tau},
                       {"s2_fraction", fraction},
                       {"mean_seconds", total.seconds() / n},
                       {"mean_gflops", total.gflops() / n},
                       {"mean_s1_seconds", mean_s1},
                       {"mean_s2_seconds", mean_s2},
                       {"expected_seconds", expected_cost(mean_s1, mean_s2, fraction)},
                       {"avg_acc", r.points.front().avg_accuracy},
                       {"macro_f1", r.points.front().macro_f1},
                       {"components", components}};
  if (a.out.empty()) {
    out << report.dump(2) << '\n';
  } else {
    write_text(a.out, report.dump(2) + '\n');
  }
  err << "bench: " << decisions.size() << " decisions in " << format_number(wall)
      << " s wall time\n";
  return kExitOk;
}

struct ServeArgs {
  std::string probe, manifest, bind = "127.0.0.1:8080";
};

ModerationServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const Common& c, const ServeArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(c);
  const fs::path probe_path = pick_input(a.probe, cfg.probe_path, "probe");
  const auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) throw ConfigError("--bind must be host:port");
  int port = 0;
  try {
    port = std::stoi(a.bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("bad port in --bind '" + a.bind + "'");
  }
  std::optional<Manifest> context;
  if (!a.manifest.empty() || cfg.manifest) {
    context = read_manifest(pick_input(a.manifest, cfg.manifest, "manifest"));
  }
  const auto cascade = build_cascade(cfg, context ? &*context : nullptr, probe_path);
  ModerationServer server(cascade);
  const int bound = server.bind(a.bind.substr(0, colon), port);
  out << "listening on " << a.bind.substr(0, colon) << ':' << bound << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.serve();
  g_server = nullptr;
  return kExitOk;
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage: return kExitUsage;
    case ErrorKind::data: return kExitData;
    case ErrorKind::backend: return kExitBackend;
  }
  return kExitData;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Video moderation toolkit: influence-filtered curation, probe screening and "
               "escalation to a reasoning model."};
  app.name("safelens");
  app.require_subcommand(1, 1);

  Common common;

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic corpus and a matching config");
  add_common(c_synth, common);
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--dim", synth.spec.dim, "Embedding width");
  c_synth->add_option("--train-per-class", synth.spec.train_per_class, "Training samples per class");
  c_synth->add_option("--val-per-class", synth.spec.val_per_class, "Validation samples per class");
  c_synth->add_option("--test-per-class", synth.spec.test_per_class, "Test samples per class");
  c_synth->add_option("--separation", synth.spec.separation, "Distance of cluster means");
  c_synth->add_option("--noise", synth.spec.noise, "Per-coordinate noise deviation");
  c_synth->add_option("--flip-fraction", synth.spec.flip_fraction, "Share of flipped train labels");
  c_synth->add_option("--tokens", synth.spec.tokens, "Hidden-state rows per sample");
  c_synth->add_option("--tau", synth.tau, "Threshold written to the generated config");

  CurateArgs curate;
  auto* c_curate = app.add_subcommand("curate", "Influence filtering and CoT request assembly");
  add_common(c_curate, common);
  c_curate->add_option("--train", curate.train, "Training manifest");
  c_curate->add_option("--val", curate.val, "Validation manifest");
  c_curate->add_option("--out", curate.out, "Filtered manifest to write");
  c_curate->add_option("--report", curate.report, "Filter report CSV to write");
  c_curate->add_option("--cot-requests", curate.cot_requests,
                       "CoT request JSONL (default <out>.cot_requests.jsonl)");
  c_curate->add_option("--cot-out", curate.cot_out, "Generated CoT samples JSONL");
  c_curate->add_option("--probe-out", curate.probe_out, "Save the curation probe here");

  TrainArgs trainp;
  auto* c_train = app.add_subcommand("train-probe", "Train the screening probe");
  add_common(c_train, common);
  c_train->add_option("--manifest", trainp.manifest, "Training manifest");
  c_train->add_option("--out", trainp.out, "Probe archive to write");
  c_train->add_option("--epochs", trainp.epochs, "Training epochs");
  c_train->add_option("--batch-size", trainp.batch_size, "Mini-batch size");
  c_train->add_option("--lr", trainp.learning_rate, "Learning rate");
  c_train->add_option("--holdout", trainp.holdout, "Holdout fraction");

  AugmentArgs aug;
  auto* c_aug = app.add_subcommand("augment", "Build CoT requests for an already filtered manifest");
  add_common(c_aug, common);
  c_aug->add_option("--manifest", aug.manifest, "Filtered manifest");
  c_aug->add_option("--probe", aug.probe, "Probe archive (trained on the fly when absent)");
  c_aug->add_option("--out", aug.out, "CoT request JSONL to write");
  c_aug->add_option("--cot-out", aug.cot_out, "Generated CoT samples JSONL");

  InferArgs infer;
  auto* c_infer = app.add_subcommand("infer", "Moderate every record of a manifest");
  add_common(c_infer, common);
  c_infer->add_option("--manifest", infer.manifest, "Manifest to moderate");
  c_infer->add_option("--probe", infer.probe, "Probe archive");
  c_infer->add_option("--tau", infer.tau, "Routing threshold");
  c_infer->add_option("--out", infer.out, "Decision JSONL to write");

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "Accuracy and cost across routing thresholds");
  add_common(c_sweep, common);
  c_sweep->add_option("--manifest", sw.manifest, "Manifest to moderate");
  c_sweep->add_option("--probe", sw.probe, "Probe archive");
  c_sweep->add_option("--taus", sw.taus, "Comma-separated ascending thresholds (default grid)");
  c_sweep->add_option("--out", sw.out, "CSV to write");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Metrics of predictions against gold labels");
  c_eval->add_option("--pred", ev.pred, "JSONL with id and predicted (or label)");
  c_eval->add_option("--gold", ev.gold, "JSONL with id and label");
  c_eval->add_option("--out", ev.out, "Report JSON to write (default stdout)");

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Declared cost summary of the cascade at one tau");
  add_common(c_bench, common);
  c_bench->add_option("--manifest", bench.manifest, "Manifest to moderate");
  c_bench->add_option("--probe", bench.probe, "Probe archive");
  c_bench->add_option("--tau", bench.tau, "Routing threshold");
  c_bench->add_option("--out", bench.out, "Report JSON to write (default stdout)");

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "HTTP classify endpoint");
  add_common(c_serve, common);
  c_serve->add_option("--probe", serve.probe, "Probe archive");
  c_serve->add_option("--manifest", serve.manifest, "Manifest for table-driven mock backends");
  c_serve->add_option("--bind", serve.bind, "host:port (port 0 picks one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_synth->parsed()) return cmd_synth(common, synth, out);
    if (c_curate->parsed()) return cmd_curate(common, curate, out);
    if (c_train->parsed()) return cmd_train_probe(common, trainp, out);
    if (c_aug->parsed()) return cmd_augment(common, aug, out);
    if (c_infer->parsed()) return cmd_infer(common, infer, out);
    if (c_sweep->parsed()) return cmd_sweep(common, sw, out);
    if (c_eval->parsed()) return cmd_eval(ev, out);
    if (c_bench->parsed()) return cmd_bench(common, bench, out, err);
    if (c_serve->parsed()) return cmd_serve(common, serve, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const MalformedResponseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace safelens
