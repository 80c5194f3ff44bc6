#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <optional>
#include <ostream>

#include "loopdyn/backends.hpp"
#include "loopdyn/calibration.hpp"
#include "loopdyn/calibration_dataset.hpp"
#include "loopdyn/clustering.hpp"
#include "loopdyn/dynamics.hpp"
#include "loopdyn/error.hpp"
#include "loopdyn/loop_runner.hpp"
#include "loopdyn/report.hpp"
#include "loopdyn/synthgen.hpp"
#include "loopdyn/trajectory_io.hpp"

namespace loopdyn::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kDefaultOllama = "http://localhost:11434";

struct GlobalFlags {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
};

struct EmbedFlags {
  std::string kind = "none";  // none | stub | http | lookup
  std::string url;
  std::string model = "nomic-embed-text";
  std::string table;
  std::size_t dim = 256;
};

void add_embed_flags(CLI::App& cmd, EmbedFlags& f) {
  cmd.add_option("--embed", f.kind, "Embedding backend")
      ->check(CLI::IsMember({"none", "stub", "http", "lookup"}));
  cmd.add_option("--embed-url", f.url, "Embedding server base URL (default $LOOPDYN_EMBED_URL)");
  cmd.add_option("--embed-model", f.model, "Embedding model name");
  cmd.add_option("--embed-table", f.table, "JSONL table of precomputed embeddings");
  cmd.add_option("--embed-dim", f.dim, "Stub embedding dimension")->check(CLI::PositiveNumber);
}

std::unique_ptr<EmbeddingBackend> make_embedder(const EmbedFlags& f, std::uint64_t seed) {
  if (f.kind == "stub") return std::make_unique<StubEmbeddingBackend>(f.dim, seed);
  if (f.kind == "lookup") {
    if (f.table.empty()) throw Error(ErrorKind::InvalidConfig, "--embed lookup needs --embed-table");
    return std::make_unique<LookupEmbeddingBackend>(LookupEmbeddingBackend::from_file(f.table));
  }
  if (f.kind == "http") {
    auto ep = endpoint_from_env("LOOPDYN_EMBED_URL", kDefaultOllama);
    if (!f.url.empty()) ep.base_url = f.url;
    return std::make_unique<HttpEmbeddingBackend>(ep, f.model);
  }
  return nullptr;
}

// Writes through a sibling temp file so a reader never sees a partial file.
void write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot move " + tmp.string() + " to " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create directory " + dir.string());
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

RegimeLabel parse_regime(const std::string& name) {
  const auto l = lower(name);
  if (l == "contractive") return RegimeLabel::Contractive;
  if (l == "oscillatory") return RegimeLabel::Oscillatory;
  if (l == "exploratory") return RegimeLabel::Exploratory;
  throw Error(ErrorKind::InvalidSpec, "unknown regime '" + name + "'");
}

// ---- calibrate -------------------------------------------------------------

struct CalibrateFlags {
  std::string pairs;
  double cut = 0.8;
  double quantile = 0.05;
  EmbedFlags embed;
};

int cmd_calibrate(const CalibrateFlags& f, const GlobalFlags& g, std::ostream& out,
                  std::ostream& err) {
  if (g.out.empty()) throw Error(ErrorKind::InvalidConfig, "calibrate needs --out <map.json>");
  if (!(f.quantile >= 0.0 && f.quantile <= 1.0)) {
    throw Error(ErrorKind::InvalidParams, "--quantile must lie in [0, 1]");
  }
  auto embedder = make_embedder(f.embed, g.seed);
  const auto data = read_calibration_tsv(f.pairs, embedder.get());
  auto map = fit_isotonic(data.pairs);
  std::optional<double> tau;
  try {
    tau = hcs_threshold(data.pairs, map, f.cut, f.quantile);
    map = map.with_tau_hcs(*tau);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoHighSimilarityPairs) throw;
    err << "warning: no pairs with target >= " << format_double(f.cut) << "; tau_hcs left unset\n";
  }
  write_file(g.out, calibration_to_json(map));
  out << "pairs: " << data.pairs.size() << "\n"
      << "knots: " << map.knots().size() << "\n"
      << "tau_hcs: " << (tau ? format_double(*tau) : std::string("null")) << "\n"
      << "wrote " << g.out << "\n";
  return kOk;
}

// ---- run -------------------------------------------------------------------

struct RunFlags {
  std::string preset;
  std::string config;
  std::string backend = "ollama";
  std::string transcript;
  std::string llm_url;
  std::optional<std::size_t> horizon;
  EmbedFlags embed;
};

int cmd_run(const RunFlags& f, const GlobalFlags& g, std::ostream& out, std::ostream& err) {
  LoopConfig cfg = f.config.empty() ? preset(f.preset) : load_loop_config(f.config);
  if (f.horizon) cfg.horizon = *f.horizon;
  if (g.seed_given) {
    for (auto& p : cfg.phases) p.generation.seed = static_cast<std::int64_t>(g.seed);
  }
  cfg.validate();

  std::unique_ptr<LlmBackend> llm;
  if (f.backend == "transcript") {
    if (f.transcript.empty()) throw Error(ErrorKind::InvalidConfig, "--backend transcript needs --transcript");
    llm = std::make_unique<TranscriptBackend>(TranscriptBackend::from_file(f.transcript));
  } else if (f.backend == "echo") {
    llm = std::make_unique<EchoBackend>();
  } else {
    auto ep = endpoint_from_env("LOOPDYN_LLM_URL", kDefaultOllama);
    if (!f.llm_url.empty()) ep.base_url = f.llm_url;
    llm = std::make_unique<OllamaBackend>(ep);
  }
  auto embedder = make_embedder(f.embed, g.seed);

  const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  ensure_dir(dir);
  const fs::path path = dir / trajectory_file_name(cfg.loop_id, cfg.hash());
  TrajectoryStore store(path);
  const auto outcome = run_loop(cfg, *llm, embedder.get(), store);
  if (outcome.aborted()) {
    err << "error: loop aborted after " << outcome.trajectory.size() << " records: "
        << *outcome.abort_reason << "\n"
        << "partial trajectory: " << path.string() << "\n";
    return kAborted;
  }
  out << "records: " << outcome.trajectory.size() << "\n"
      << "wrote " << path.string() << "\n";
  return kOk;
}

// ---- analyze ---------------------------------------------------------------

struct AnalyzeFlags {
  std::vector<std::string> trajectories;
  std::vector<double> lambdas{0.8};
  std::vector<double> rhos{0.1, 0.2, 0.3};
  std::vector<std::size_t> kappas{2};
  std::size_t min_members = 3;
  std::string calibration;
  bool identity = false;
  std::optional<double> recurrence_tau;
  std::optional<std::size_t> tail_slack;
  std::size_t min_terminal_span = 10;
  double coverage_min = 0.25;
  double alpha = 2.0;
  EmbedFlags embed;
};

struct GridResult {
  std::string name;
  std::string report_json;
  std::string timeline_svg;
  std::string drift_csv;
  std::string drift_svg;
  RegimeReport report;
};

std::string grid_name(const std::string& stem, const ClusterParams& p) {
  return stem + "_l" + format_double(p.lambda) + "_r" + format_double(p.rho) + "_k" +
         std::to_string(p.kappa);
}

int cmd_analyze(const AnalyzeFlags& f, const GlobalFlags& g, std::ostream& out, std::ostream&) {
  if (!f.calibration.empty() && f.identity) {
    throw Error(ErrorKind::InvalidConfig, "--calibration and --identity are exclusive");
  }
  Similarity sim;
  std::string calibration_label = "identity";
  if (!f.calibration.empty()) {
    sim = Similarity(load_calibration(f.calibration));
    calibration_label = "isotonic:" + fs::path(f.calibration).filename().string();
  }

  RegimeRules rules;
  rules.recurrence_tau = f.recurrence_tau;
  rules.tail_slack = f.tail_slack;
  rules.min_terminal_span = f.min_terminal_span;
  rules.coverage_min = f.coverage_min;
  TimelinePlotConfig plot;
  plot.alpha = f.alpha;
  plot.validate();

  std::vector<ClusterParams> grid;
  for (double l : f.lambdas)
    for (double r : f.rhos)
      for (std::size_t k : f.kappas) {
        ClusterParams p{l, r, k, f.min_members};
        p.validate();
        grid.push_back(p);
      }

  auto embedder = make_embedder(f.embed, g.seed);
  struct Input {
    std::string stem;
    std::vector<Embedding> embeddings;
  };
  std::vector<Input> inputs;
  for (const auto& path : f.trajectories) {
    auto traj = read_trajectory(path);
    if (traj.empty()) throw Error(ErrorKind::EmptyTrajectory, path + " has no records");
    if (embedder) {
      traj = embed_trajectory(traj, *embedder);
    } else if (!traj.has_embeddings()) {
      throw Error(ErrorKind::MissingEmbeddings,
                  path + " lacks embeddings; pass --embed <backend> to compute them");
    }
    inputs.push_back({fs::path(path).stem().string(), traj.embeddings()});
  }

  const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  ensure_dir(dir);

  std::vector<std::future<GridResult>> tasks;
  for (const auto& in : inputs) {
    for (const auto& p : grid) {
      tasks.push_back(std::async(std::launch::async, [&in, p, &sim, &rules, &plot, &calibration_label] {
        GridResult res;
        res.name = grid_name(in.stem, p);
        auto clusters = detect_clusters(in.embeddings, p, sim);
        res.report = classify_regime(in.embeddings, std::move(clusters), sim, p, rules);
        const auto doc = make_report_document(res.report, in.embeddings, sim, calibration_label, plot);
        res.report_json = report_to_json(doc);
        res.timeline_svg = emit_timeline_svg(doc.points, doc.bands, in.embeddings.size() - 1, plot,
                                             res.name + " (" + std::string(to_string(res.report.label)) + ")");
        res.drift_csv = drift_csv(res.report.drift);
        res.drift_svg = emit_drift_svg(res.report.drift, plot, res.name);
        return res;
      }));
    }
  }

  std::vector<RegimeReport> reports;
  std::vector<std::string> names;
  for (auto& task : tasks) {
    auto res = task.get();
    write_file(dir / (res.name + ".report.json"), res.report_json);
    write_file(dir / (res.name + ".timeline.svg"), res.timeline_svg);
    write_file(dir / (res.name + ".drift.csv"), res.drift_csv);
    write_file(dir / (res.name + ".drift.svg"), res.drift_svg);
    out << res.name << ": " << to_string(res.report.label) << ", " << res.report.clusters.size()
        << " cluster(s)\n";
    names.push_back(res.name);
    reports.push_back(std::move(res.report));
  }
  write_file(dir / "summary.csv", summary_csv(comparative_summary(reports, names)));
  out << "wrote " << (dir / "summary.csv").string() << "\n";
  return kOk;
}

// ---- plot ------------------------------------------------------------------

struct PlotFlags {
  std::string report;
  std::string kind = "timeline";
  std::optional<double> alpha;
  std::string title;
};

int cmd_plot(const PlotFlags& f, const GlobalFlags& g, std::ostream& out, std::ostream&) {
  if (g.out.empty()) throw Error(ErrorKind::InvalidConfig, "plot needs --out <file.svg>");
  auto doc = report_from_json(read_file(f.report));
  if (f.alpha) {
    doc.plot.alpha = *f.alpha;
    doc.plot.validate();
    for (auto& p : doc.points) p.y = static_cast<double>(p.cluster) + *f.alpha * p.deviation;
    for (auto& b : doc.bands) b.y_high = b.y_low + *f.alpha * doc.report.params.rho;
  }
  std::string svg;
  if (f.kind == "drift") {
    svg = emit_drift_svg(doc.report.drift, doc.plot, f.title);
  } else {
    svg = emit_timeline_svg(doc.points, doc.bands, doc.report.rationale.horizon, doc.plot, f.title);
  }
  write_file(g.out, svg);
  out << "wrote " << g.out << "\n";
  return kOk;
}

// ---- synth -----------------------------------------------------------------

struct SynthFlags {
  std::string regime = "contractive";
  std::size_t dim = 256;
  std::size_t horizon = 50;
  std::optional<double> beta;
  std::optional<double> sigma;
  std::optional<std::size_t> block_length;
};

int cmd_synth(const SynthFlags& f, const GlobalFlags& g, std::ostream& out, std::ostream&) {
  SynthSpec spec;
  spec.regime = parse_regime(f.regime);
  spec.dim = f.dim;
  spec.horizon = f.horizon;
  spec.seed = g.seed;
  if (f.beta) spec.contractive.beta = *f.beta;
  if (f.sigma) spec.contractive.sigma = spec.oscillatory.sigma = *f.sigma;
  if (f.block_length) spec.oscillatory.block_length = *f.block_length;
  spec.validate();

  const std::string path = g.out.empty()
                               ? "synthetic_" + lower(f.regime) + "_" + std::to_string(g.seed) + ".jsonl"
                               : g.out;
  const auto traj = generate(spec);
  std::string body;
  for (const auto& r : traj.records()) body += record_to_json_line(r) + "\n";
  write_file(path, body);
  out << "wrote " << path << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Agentic loop trajectory recorder and dynamics analyzer", "loopdyn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "loopdyn 0.1.0");

  GlobalFlags g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--out", g.out, "Output file or directory (per subcommand)");

  CalibrateFlags cal;
  auto* calibrate = app.add_subcommand("calibrate", "Fit an isotonic calibration map from a TSV dataset");
  calibrate->fallthrough();
  calibrate->add_option("pairs,--pairs", cal.pairs, "TSV dataset")->required();
  calibrate->add_option("--cut", cal.cut, "Target cut for high-similarity pairs")->capture_default_str();
  calibrate->add_option("--quantile", cal.quantile, "Quantile for tau_hcs")->capture_default_str();
  add_embed_flags(*calibrate, cal.embed);

  RunFlags rf;
  auto* runcmd = app.add_subcommand("run", "Execute an agentic loop and record its trajectory");
  runcmd->fallthrough();
  auto* preset_opt = runcmd->add_option("--preset", rf.preset, "Built-in loop")
                         ->check(CLI::IsMember({"contractive", "exploratory"}));
  auto* config_opt = runcmd->add_option("--config", rf.config, "Loop configuration JSON");
  preset_opt->excludes(config_opt);
  runcmd->add_option("--backend", rf.backend, "Generation backend")
      ->check(CLI::IsMember({"ollama", "transcript", "echo"}))
      ->capture_default_str();
  runcmd->add_option("--transcript", rf.transcript, "Recorded responses (JSONL) for --backend transcript");
  runcmd->add_option("--llm-url", rf.llm_url, "Generation server base URL (default $LOOPDYN_LLM_URL)");
  runcmd->add_option("--horizon", rf.horizon, "Override the number of iterations T");
  add_embed_flags(*runcmd, rf.embed);

  AnalyzeFlags af;
  auto* analyze = app.add_subcommand("analyze", "Detect clusters and classify the regime over a parameter grid");
  analyze->fallthrough();
  analyze->add_option("trajectory,--trajectory", af.trajectories, "Trajectory JSONL file(s)")->required();
  analyze->add_option("--lambda", af.lambdas, "Consecutive-similarity thresholds")->delimiter(',');
  analyze->add_option("--rho", af.rhos, "Dispersion thresholds")->delimiter(',');
  analyze->add_option("--kappa", af.kappas, "Patience values")->delimiter(',');
  analyze->add_option("--min-members", af.min_members, "Smallest reported cluster")->capture_default_str();
  analyze->add_option("--calibration", af.calibration, "Calibration map JSON");
  analyze->add_flag("--identity", af.identity, "Use raw cosine similarity (default)");
  analyze->add_option("--recurrence-tau", af.recurrence_tau, "Attractor recurrence threshold (default lambda)");
  analyze->add_option("--tail-slack", af.tail_slack, "Terminal cluster slack (default kappa)");
  analyze->add_option("--min-terminal-span", af.min_terminal_span)->capture_default_str();
  analyze->add_option("--coverage-min", af.coverage_min)->capture_default_str();
  analyze->add_option("--alpha", af.alpha, "Timeline vertical amplification")->capture_default_str();
  add_embed_flags(*analyze, af.embed);

  PlotFlags pf;
  auto* plot = app.add_subcommand("plot", "Render a figure from a report JSON");
  plot->fallthrough();
  plot->add_option("report,--report", pf.report, "Report JSON")->required();
  plot->add_option("--kind", pf.kind)->check(CLI::IsMember({"timeline", "drift"}))->capture_default_str();
  plot->add_option("--alpha", pf.alpha, "Override the timeline amplification");
  plot->add_option("--title", pf.title);

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic trajectory with a known regime");
  synth->fallthrough();
  synth->add_option("--regime", sf.regime)->capture_default_str();
  synth->add_option("--dim", sf.dim)->capture_default_str();
  synth->add_option("--horizon", sf.horizon)->capture_default_str();
  synth->add_option("--beta", sf.beta, "Contractive pull");
  synth->add_option("--sigma", sf.sigma, "Noise scale");
  synth->add_option("--block-length", sf.block_length, "Oscillation block length");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (calibrate->parsed()) return cmd_calibrate(cal, g, out, err);
    if (runcmd->parsed()) {
      if (preset_opt->count() == 0 && config_opt->count() == 0) {
        err << "error: run needs --preset or --config\n";
        return kUsage;
      }
      return cmd_run(rf, g, out, err);
    }
    if (analyze->parsed()) return cmd_analyze(af, g, out, err);
    if (plot->parsed()) return cmd_plot(pf, g, out, err);
    if (synth->parsed()) return cmd_synth(sf, g, out, err);
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::InvalidParams:
      case ErrorKind::InvalidConfig:
      case ErrorKind::InvalidSpec:
        return kUsage;
      default:
        return kFailure;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace loopdyn::cli
