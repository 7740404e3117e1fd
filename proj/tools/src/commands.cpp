#include "mns/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "mns/cli/io.hpp"
#include "mns/errors.hpp"
#include "mns/estimator.hpp"
#include "mns/glasso.hpp"
#include "mns/simulator.hpp"
#include "mns/stability.hpp"
#include "mns/tuning.hpp"

#ifndef MNS_VERSION
#define MNS_VERSION "0.0.0"
#endif

namespace mns::cli {
namespace {

using json = nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Library validation failures raised while turning flags into a config are
// usage errors, not run failures.
template <class F>
void as_usage(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string pad(std::size_t i, int width) {
  std::string s = std::to_string(i);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

std::vector<std::string> subject_ids(std::size_t count) {
  const int width = std::max(2, static_cast<int>(std::to_string(count).size()));
  std::vector<std::string> ids;
  for (std::size_t i = 1; i <= count; ++i) ids.push_back(pad(i, width));
  return ids;
}

Rule parse_rule_flag(const std::string& s) {
  Rule r = Rule::And;
  as_usage([&] { r = parse_rule(s); });
  return r;
}

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_dir;
  std::string rule = "and";
};

struct Run {
  std::string command;
  std::vector<std::string> args;
  Globals globals;
  json config = json::object();
  json inputs = json::object();
  json summary = json::object();
  std::string started;
  fs::path out;
};

fs::path require_out_dir(const Globals& g) {
  if (g.out_dir.empty()) throw UsageError("--out-dir is required");
  fs::create_directories(g.out_dir);
  return g.out_dir;
}

json output_digests(const fs::path& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), out);
    if (rel == kRunManifest) continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  json digests = json::object();
  for (const auto& f : files) digests[f.generic_string()] = file_digest(out / f);
  return digests;
}

void write_manifest(const Run& run) {
  json m;
  m["tool"] = "mns";
  m["version"] = MNS_VERSION;
  m["command"] = run.command;
  m["argv"] = run.args;
  m["seed"] = run.globals.seed;
  m["threads"] = run.globals.threads;
  m["rule"] = run.globals.rule;
  m["config"] = run.config;
  m["inputs"] = run.inputs;
  m["outputs"] = output_digests(run.out);
  m["started_at"] = run.started;
  m["finished_at"] = utc_now();
  write_text(run.out / kRunManifest, m.dump(2) + "\n");
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

// ---- cohort input ----

struct CohortInput {
  std::string path;
  bool raw = false;
};

void add_cohort_flags(CLI::App* cmd, CohortInput& in) {
  cmd->add_option("--cohort", in.path, "Cohort directory or cohort.json")->required();
  cmd->add_flag("--no-standardize", in.raw, "Keep centered data on its original scale");
}

CohortData load_cohort(Run& run, const CohortInput& in) {
  auto report = ingest_cohort(in.path);
  run.inputs[report.manifest.generic_string()] = file_digest(report.manifest);
  for (const auto& f : report.files) run.inputs[f.generic_string()] = file_digest(f);
  run.config["standardize"] = !in.raw;
  return in.raw ? std::move(report.cohort) : report.cohort.standardized();
}

// ---- simulate ----

void write_truth(const fs::path& dir, const NodeSet& nodes, const SimTruth& truth,
                 const std::vector<std::string>& ids) {
  const fs::path tdir = dir / "truth";
  json doc;
  doc["p"] = nodes.size();
  doc["nodes"] = nodes.labels();
  doc["subjects"] = ids;
  doc["e_pop"] = "e_pop.tsv";
  doc["e_tilde"] = "e_tilde.tsv";
  json subj = json::array();
  json full = json::array();
  json prec = json::array();
  write_edges(tdir / "e_pop.tsv", nodes, truth.e_pop, &truth.theta_pop);
  write_edges(tdir / "e_tilde.tsv", nodes, truth.e_tilde);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::string s = "subject_" + ids[i] + ".tsv";
    const std::string f = "network_" + ids[i] + ".tsv";
    const std::string c = "precision_" + ids[i] + ".csv";
    write_edges(tdir / s, nodes, truth.e_subject[i]);
    write_edges(tdir / f, nodes, truth.subject_network(i));
    write_csv(tdir / c, nodes.labels(), truth.precisions[i].theta());
    subj.push_back(s);
    full.push_back(f);
    prec.push_back(c);
  }
  doc["e_subject"] = subj;
  doc["subject_network"] = full;
  doc["precision"] = prec;
  write_json(tdir / "truth.json", doc);
}

void export_simulation(Run& run, const SimCohort& sim) {
  const auto ids = subject_ids(sim.data.num_subjects());
  json extra;
  extra["simulation"] = run.config;
  extra["seed"] = run.globals.seed;
  export_cohort(run.out, sim.data.nodes(), sim.data.subjects(), ids, extra.dump());
  write_truth(run.out, sim.data.nodes(), sim.truth, ids);
  run.summary["subjects"] = ids.size();
  run.summary["population_edges"] = sim.truth.e_pop.size();
  run.summary["variance_edges"] = sim.truth.e_tilde.size();
}

// ---- MNS results ----

void write_mns_set(const fs::path& dir, const NodeSet& nodes, const std::vector<std::string>& ids,
                   const MnsResult& res, const AlphaLambda& al) {
  write_edges(dir / "population.tsv", nodes, res.population, &res.population_weights);
  write_edges(dir / "variance.tsv", nodes, res.variance, &res.variance_weights);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    write_edges(dir / ("subject_" + ids[i] + ".tsv"), nodes, res.subject_specific[i],
                &res.subject_specific_weights[i]);
    write_edges(dir / ("subject_full_" + ids[i] + ".tsv"), nodes, res.subject_full[i]);
  }
  json doc;
  doc["alpha"] = al.alpha;
  doc["lambda"] = al.lambda;
  doc["lambda1"] = res.config.lambda1;
  doc["lambda2"] = res.config.lambda2;
  doc["rule"] = to_string(res.config.rule);
  doc["converged"] = res.all_converged();
  doc["population_edges"] = res.population.size();
  doc["variance_edges"] = res.variance.size();
  json node_info = json::array();
  for (const auto& f : res.node_fits) {
    node_info.push_back({{"node", nodes.label(static_cast<std::size_t>(f.node))},
                         {"em_iterations", f.em_iterations},
                         {"converged", f.converged},
                         {"m_step_converged", f.m_step_converged},
                         {"sigma2", f.sigma2}});
  }
  doc["nodes"] = node_info;
  write_json(dir / "result.json", doc);
}

// Path index consumed by `evaluate`. Each target maps to a list of
// {lambda, file} or {lambda, files} entries.
json path_index(const std::string& method, const CohortData& data) {
  json doc;
  doc["method"] = method;
  doc["p"] = data.p();
  doc["nodes"] = data.nodes().labels();
  doc["subjects"] = data.subject_ids();
  doc["targets"] = json::object();
  return doc;
}

void index_mns_set(json& index, const std::string& set, const std::vector<std::string>& ids,
                   double lambda) {
  auto& t = index["targets"];
  t["population"].push_back({{"lambda", lambda}, {"file", set + "/population.tsv"}});
  t["variance"].push_back({{"lambda", lambda}, {"file", set + "/variance.tsv"}});
  json subj = json::array();
  json full = json::array();
  for (const auto& id : ids) {
    subj.push_back(set + "/subject_" + id + ".tsv");
    full.push_back(set + "/subject_full_" + id + ".tsv");
  }
  t["subject"].push_back({{"lambda", lambda}, {"files", subj}});
  t["subject_full"].push_back({{"lambda", lambda}, {"files", full}});
}

MnsConfig mns_config(const Globals& g, double em_tol, int em_max_iter) {
  MnsConfig cfg;
  cfg.rule = parse_rule_flag(g.rule);
  cfg.threads = g.threads;
  cfg.em_tol = em_tol;
  cfg.em_max_iter = em_max_iter;
  return cfg;
}

struct EmFlags {
  double tol = 1e-4;
  int max_iter = 200;
};

void add_em_flags(CLI::App* cmd, EmFlags& em) {
  cmd->add_option("--em-tol", em.tol, "EM convergence tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--em-max-iter", em.max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
}

struct GridFlags {
  std::optional<double> lambda;
  std::size_t count = 25;
  double min_ratio = 0.01;
};

void add_grid_flags(CLI::App* cmd, GridFlags& grid) {
  auto* single = cmd->add_option("--lambda", grid.lambda, "Single penalty level")->check(CLI::NonNegativeNumber);
  cmd->add_option("--lambda-grid", grid.count, "Number of log-spaced penalty levels")
      ->check(CLI::PositiveNumber)
      ->excludes(single);
  cmd->add_option("--lambda-min-ratio", grid.min_ratio, "Smallest level as a fraction of the largest")
      ->check(CLI::Range(1e-6, 1.0));
}

std::vector<double> make_grid(const GridFlags& flags, double hi) {
  if (flags.lambda) return {*flags.lambda};
  std::vector<double> out;
  as_usage([&] { out = log_grid(hi, flags.count, flags.min_ratio); });
  return out;
}

// ---- evaluate ----

struct TruthSet {
  NodeSet nodes;
  std::vector<std::string> ids;
  EdgeSet e_pop;
  EdgeSet e_tilde;
  std::vector<EdgeSet> e_subject;
  std::vector<EdgeSet> networks;
};

fs::path locate(const fs::path& p, const std::string& name) {
  if (fs::is_directory(p)) {
    if (fs::exists(p / name)) return p / name;
    if (fs::exists(p / "truth" / name)) return p / "truth" / name;
  }
  if (fs::exists(p) && !fs::is_directory(p)) return p;
  throw Error("'" + name + "' not found under '" + p.string() + "'");
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

template <class T>
T field(const json& doc, const char* key, const fs::path& source) {
  if (!doc.contains(key)) throw ParseError(source.string() + ": missing field '" + key + "'");
  try {
    return doc[key].get<T>();
  } catch (const json::exception&) {
    throw ParseError(source.string() + ": field '" + key + "' has the wrong type");
  }
}

TruthSet load_truth(Run& run, const fs::path& where) {
  const fs::path index = locate(where, "truth.json");
  run.inputs[index.generic_string()] = file_digest(index);
  const json doc = read_json(index);
  const fs::path dir = index.parent_path();
  TruthSet t{NodeSet(field<std::vector<std::string>>(doc, "nodes", index)), {}, {}, {}, {}, {}};
  t.ids = field<std::vector<std::string>>(doc, "subjects", index);
  auto edges = [&](const std::string& file) {
    run.inputs[(dir / file).generic_string()] = file_digest(dir / file);
    return read_edges(dir / file, t.nodes);
  };
  t.e_pop = edges(field<std::string>(doc, "e_pop", index));
  t.e_tilde = edges(field<std::string>(doc, "e_tilde", index));
  for (const auto& f : field<std::vector<std::string>>(doc, "e_subject", index)) t.e_subject.push_back(edges(f));
  for (const auto& f : field<std::vector<std::string>>(doc, "subject_network", index)) {
    t.networks.push_back(edges(f));
  }
  if (t.e_subject.size() != t.ids.size() || t.networks.size() != t.ids.size()) {
    throw ParseError(index.string() + ": one subject file per subject id required");
  }
  return t;
}

void write_roc(const fs::path& path, const RocCurve& roc, const char* level) {
  std::string buf = std::string(level) + "\tfpr\ttpr\n";
  char line[96];
  for (const auto& pt : roc.points) {
    std::snprintf(line, sizeof line, "%.17g\t%.17g\t%.17g\n", pt.lambda, pt.fpr, pt.tpr);
    buf += line;
  }
  write_text(path, buf);
}

// ---- commands ----

int cmd_simulate(Run& run, SimConfig cfg) {
  cfg.seed = run.globals.seed;
  as_usage([&] { cfg.validate(); });
  run.out = require_out_dir(run.globals);
  run.config = {{"p", cfg.p}, {"subjects", cfg.subjects}, {"n", cfg.n}, {"e_ran", cfg.e_ran},
                {"tau", cfg.tau}, {"r", cfg.r}, {"ba_m", cfg.ba_m}};
  export_simulation(run, simulate_cohort(cfg));
  return kExitOk;
}

int cmd_simulate_components(Run& run, int p, int n, int subjects) {
  if (p < 10) throw UsageError("--p must be at least 10 for the component layout");
  if (n < 2) throw UsageError("--n must be at least 2");
  if (subjects < 2) throw UsageError("--subjects must be at least 2");
  run.out = require_out_dir(run.globals);
  run.config = {{"p", p}, {"n", n}, {"subjects", subjects}, {"layout", "components"}};
  export_simulation(run, simulate_component_cohort(p, n, run.globals.seed, subjects));
  return kExitOk;
}

int cmd_fit(Run& run, const CohortInput& in, double alpha, const GridFlags& gf, const EmFlags& em) {
  MnsConfig base = mns_config(run.globals, em.tol, em.max_iter);
  as_usage([&] {
    AlphaLambda{alpha, 0.0}.validate();
    base.validate();
  });
  run.out = require_out_dir(run.globals);
  const CohortData data = load_cohort(run, in);
  const CohortGram gram = CohortGram::from(data);
  const double lmax = lambda_max(gram);
  const auto lambdas = make_grid(gf, lmax);
  run.config.update({{"alpha", alpha}, {"lambdas", lambdas}, {"lambda_max", lmax},
                     {"em_tol", em.tol}, {"em_max_iter", em.max_iter}});

  json index = path_index("mns", data);
  index["alpha"] = alpha;
  index["lambda_max"] = lmax;
  int unconverged = 0;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    MnsConfig cfg = base;
    std::tie(cfg.lambda1, cfg.lambda2) = to_penalties({alpha, lambdas[k]});
    const MnsResult res = fit_all(gram, cfg);
    const std::string set = "fit_" + pad(k, 3);
    write_mns_set(run.out / set, data.nodes(), data.subject_ids(), res, {alpha, lambdas[k]});
    index_mns_set(index, set, data.subject_ids(), lambdas[k]);
    if (!res.all_converged()) ++unconverged;
  }
  write_json(run.out / "path.json", index);
  run.summary["result_sets"] = lambdas.size();
  run.summary["unconverged_sets"] = unconverged;
  return kExitOk;
}

int cmd_glasso(Run& run, const CohortInput& in, const GridFlags& gf, const std::string& mode) {
  run.out = require_out_dir(run.globals);
  const CohortData data = load_cohort(run, in);
  json index = path_index("glasso", data);
  const GlassoOptions opts{};
  std::size_t sets = 0;
  if (mode == "pooled" || mode == "both") {
    const Eigen::MatrixXd s = sample_covariance(data.pooled());
    const auto lambdas = make_grid(gf, glasso_lambda_max(s));
    const auto path = glasso_path(s, lambdas, opts);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      const std::string file = "pooled_" + pad(k, 3) + ".tsv";
      write_edges(run.out / file, data.nodes(), path[k]);
      index["targets"]["population"].push_back({{"lambda", lambdas[k]}, {"file", file}});
    }
    run.config["pooled_lambdas"] = lambdas;
    sets += lambdas.size();
  }
  if (mode == "independent" || mode == "both") {
    double hi = 0.0;
    for (const auto& x : data.subjects()) hi = std::max(hi, glasso_lambda_max(sample_covariance(x)));
    const auto lambdas = make_grid(gf, hi);
    std::vector<std::vector<EdgeSet>> paths;
    for (const auto& x : data.subjects()) paths.push_back(glasso_path(sample_covariance(x), lambdas, opts));
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      json files = json::array();
      for (std::size_t i = 0; i < paths.size(); ++i) {
        const std::string file = "independent_" + pad(k, 3) + "/subject_" + data.subject_ids()[i] + ".tsv";
        write_edges(run.out / file, data.nodes(), paths[i][k]);
        files.push_back(file);
      }
      index["targets"]["subject_full"].push_back({{"lambda", lambdas[k]}, {"files", files}});
    }
    run.config["independent_lambdas"] = lambdas;
    sets += lambdas.size();
  }
  run.config["mode"] = mode;
  write_json(run.out / "path.json", index);
  run.summary["result_sets"] = sets;
  return kExitOk;
}

int cmd_stability(Run& run, const CohortInput& in, StabilityConfig cfg) {
  cfg.seed = run.globals.seed;
  cfg.threads = run.globals.threads;
  as_usage([&] { cfg.validate(); });
  run.out = require_out_dir(run.globals);
  const CohortData data = load_cohort(run, in);
  run.config.update({{"B", cfg.B}, {"c", cfg.c}, {"stars_beta", cfg.stars_beta},
                     {"stars_subsamples", cfg.stars_subsamples}, {"stars_grid", cfg.stars_grid}});
  const StabilityResult res = run_stability(data, cfg);
  const NodeSet& nodes = data.nodes();
  write_matrix_tsv(run.out / "mu_pop.tsv", nodes, res.mu_pop);
  write_matrix_tsv(run.out / "rho_pop.tsv", nodes, res.rho_pop);
  write_matrix_tsv(run.out / "rho_raw.tsv", nodes, res.rho_raw);
  for (std::size_t i = 0; i < data.num_subjects(); ++i) {
    write_matrix_tsv(run.out / ("frequency_" + data.subject_ids()[i] + ".tsv"), nodes, res.per_subject_freq[i]);
  }
  json summary;
  summary["lambdas"] = res.lambdas;
  summary["lambda_max"] = res.lambda_max;
  summary["effective_B"] = res.effective_B;
  summary["stars_crossed"] = res.stars_crossed;
  summary["clamped_draws"] = res.clamped_draws;
  summary["degenerate_entries"] = res.degenerate.count();
  write_json(run.out / "summary.json", summary);

  json index = path_index("stability", data);
  index["scores"] = {{"population", "mu_pop.tsv"}, {"variance", "rho_pop.tsv"}};
  write_json(run.out / "path.json", index);
  run.summary["clamped_draws"] = res.clamped_draws;
  return kExitOk;
}

int cmd_cv(Run& run, const CohortInput& in, double alpha, const GridFlags& gf, int folds,
           const EmFlags& em) {
  MnsConfig base = mns_config(run.globals, em.tol, em.max_iter);
  as_usage([&] {
    AlphaLambda{alpha, 0.0}.validate();
    base.validate();
  });
  if (folds < 2) throw UsageError("--folds must be at least 2");
  run.out = require_out_dir(run.globals);
  const CohortData data = load_cohort(run, in);
  const CohortGram gram = CohortGram::from(data);
  const double lmax = lambda_max(gram);
  const auto lambdas = make_grid(gf, lmax);
  std::vector<AlphaLambda> grid;
  for (double l : lambdas) grid.push_back({alpha, l});
  run.config.update({{"alpha", alpha}, {"lambdas", lambdas}, {"folds", folds},
                     {"em_tol", em.tol}, {"em_max_iter", em.max_iter}});

  const CvReport cv = cross_validate(data, grid, folds, base);
  json doc;
  doc["alpha"] = alpha;
  doc["lambdas"] = lambdas;
  doc["folds"] = cv.folds;
  doc["mse"] = std::vector<double>(cv.mse.data(), cv.mse.data() + cv.mse.size());
  json fold_mse = json::array();
  for (Eigen::Index k = 0; k < cv.fold_mse.rows(); ++k) {
    fold_mse.push_back(std::vector<double>(cv.fold_mse.cols()));
    for (Eigen::Index g = 0; g < cv.fold_mse.cols(); ++g) fold_mse.back()[static_cast<std::size_t>(g)] = cv.fold_mse(k, g);
  }
  doc["fold_mse"] = fold_mse;
  doc["best_index"] = cv.best_index;
  doc["best_lambda"] = cv.best.lambda;
  write_json(run.out / "cv.json", doc);

  MnsConfig cfg = base;
  std::tie(cfg.lambda1, cfg.lambda2) = to_penalties(cv.best);
  const MnsResult res = fit_all(gram, cfg);
  write_mns_set(run.out / "fit_best", data.nodes(), data.subject_ids(), res, cv.best);
  json index = path_index("mns", data);
  index["alpha"] = alpha;
  index_mns_set(index, "fit_best", data.subject_ids(), cv.best.lambda);
  write_json(run.out / "path.json", index);
  run.summary["best_lambda"] = cv.best.lambda;
  return kExitOk;
}

int cmd_evaluate(Run& run, const std::string& results, const std::string& truth_path) {
  run.out = require_out_dir(run.globals);
  const fs::path index_path = locate(results, "path.json");
  const fs::path base = index_path.parent_path();
  const json index = read_json(index_path);
  const TruthSet truth = load_truth(run, truth_path);
  const auto p = field<int>(index, "p", index_path);
  const NodeSet nodes(field<std::vector<std::string>>(index, "nodes", index_path));
  if (static_cast<std::size_t>(p) != truth.nodes.size() || nodes.size() != truth.nodes.size()) {
    throw DimensionError("results have p=" + std::to_string(p) + " but the truth has p=" +
                         std::to_string(truth.nodes.size()));
  }
  if (nodes.labels() != truth.nodes.labels()) throw DimensionError("result and truth node labels differ");
  const auto ids = field<std::vector<std::string>>(index, "subjects", index_path);
  run.config = {{"results", results}, {"truth", truth_path}, {"method", index.value("method", "")}};

  const std::map<std::string, const EdgeSet*> single{{"population", &truth.e_pop},
                                                     {"variance", &truth.e_tilde}};
  auto truths_for = [&](const std::string& target) -> const std::vector<EdgeSet>& {
    if (ids.size() != truth.ids.size()) {
      throw DimensionError("results have " + std::to_string(ids.size()) + " subjects but the truth has " +
                           std::to_string(truth.ids.size()));
    }
    return target == "subject" ? truth.e_subject : truth.networks;
  };

  json report;
  report["method"] = index.value("method", "");
  report["targets"] = json::object();
  auto record = [&](const std::string& target, const RocCurve& roc, const char* level) {
    write_roc(run.out / ("roc_" + target + ".tsv"), roc, level);
    report["targets"][target] = {{"auc", roc.auc}, {"points", roc.points.size()}};
    run.summary[target + "_auc"] = roc.auc;
  };

  if (index.contains("scores")) {
    for (const auto& [target, file] : index["scores"].items()) {
      if (!single.count(target)) throw ParseError(index_path.string() + ": unknown score target '" + target + "'");
      const Eigen::MatrixXd scores = read_matrix_tsv(base / file.get<std::string>(), nodes);
      record(target, roc_from_scores(scores, *single.at(target)), "threshold");
    }
  }
  if (index.contains("targets")) {
    for (const auto& [target, entries] : index["targets"].items()) {
      std::vector<double> lambdas;
      if (single.count(target)) {
        std::vector<EdgeSet> est;
        for (const auto& e : entries) {
          lambdas.push_back(e.at("lambda").get<double>());
          est.push_back(read_edges(base / e.at("file").get<std::string>(), nodes));
        }
        record(target, roc_sweep(lambdas, est, *single.at(target)), "lambda");
      } else if (target == "subject" || target == "subject_full") {
        const auto& truths = truths_for(target);
        std::vector<std::vector<EdgeSet>> est;
        for (const auto& e : entries) {
          lambdas.push_back(e.at("lambda").get<double>());
          est.emplace_back();
          for (const auto& f : e.at("files")) est.back().push_back(read_edges(base / f.get<std::string>(), nodes));
          if (est.back().size() != truths.size()) throw DimensionError("subject count differs from the truth");
        }
        record(target, roc_sweep(lambdas, est, truths), "lambda");
      } else {
        throw ParseError(index_path.string() + ": unknown target '" + target + "'");
      }
    }
  }
  write_json(run.out / "evaluation.json", report);
  return kExitOk;
}

int cmd_replay(const std::string& manifest_path, const std::string& out_dir, unsigned threads,
               std::ostream& out, std::ostream& err) {
  const json m = read_json(manifest_path);
  auto args = field<std::vector<std::string>>(m, "argv", manifest_path);
  const auto outputs = field<json>(m, "outputs", manifest_path);
  std::vector<std::string> replay;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out-dir" || args[i] == "--threads") {
      ++i;
      continue;
    }
    if (args[i].rfind("--out-dir=", 0) == 0 || args[i].rfind("--threads=", 0) == 0) continue;
    replay.push_back(args[i]);
  }
  replay.insert(replay.begin(), {"--out-dir", out_dir, "--threads", std::to_string(threads)});
  const int code = run(replay, out, err);
  if (code != kExitOk) return code;
  const json now = output_digests(out_dir);
  std::size_t mismatched = 0;
  for (const auto& [file, digest] : outputs.items()) {
    if (!now.contains(file) || now[file] != digest) {
      err << "replay: " << file << " differs from the recorded run\n";
      ++mismatched;
    }
  }
  if (mismatched) return kExitFailure;
  out << "replay: " << outputs.size() << " outputs reproduced\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mixed neighborhood selection for multi-subject graphical models", "mns"};
  app.set_version_flag("--version", MNS_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--threads", g.threads, "Worker thread cap (0 = hardware)");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--rule", g.rule, "Neighborhood symmetrization")
      ->check(CLI::IsMember({"and", "or"}, CLI::ignore_case));

  SimConfig sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a multi-subject cohort with ground truth");
  simulate->add_option("--p", sim.p, "Number of nodes");
  simulate->add_option("--subjects", sim.subjects, "Number of subjects");
  simulate->add_option("--n", sim.n, "Observations per subject");
  simulate->add_option("--e-ran", sim.e_ran, "Edges in the variance network");
  simulate->add_option("--tau", sim.tau, "Subject edge inclusion probability")->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--r", sim.r, "Edge weight magnitude bound")->check(CLI::PositiveNumber);
  simulate->add_option("--ba-m", sim.ba_m, "Preferential attachment edges per new node");

  int comp_p = 100;
  int comp_n = 200;
  int comp_subjects = 3;
  auto* components = app.add_subcommand("simulate-components", "Simulate the ten-component cohort");
  components->add_option("--p", comp_p, "Number of nodes");
  components->add_option("--n", comp_n, "Observations per subject");
  components->add_option("--subjects", comp_subjects, "Number of subjects");

  CohortInput fit_in;
  double fit_alpha = 0.25;
  GridFlags fit_grid;
  EmFlags fit_em;
  auto* fit = app.add_subcommand("fit", "Fit MNS along a penalty path");
  add_cohort_flags(fit, fit_in);
  fit->add_option("--alpha", fit_alpha, "Share of the penalty on fixed effects")->check(CLI::Range(0.0, 1.0));
  add_grid_flags(fit, fit_grid);
  add_em_flags(fit, fit_em);

  CohortInput gl_in;
  GridFlags gl_grid;
  std::string gl_mode = "both";
  auto* glasso = app.add_subcommand("glasso", "Graphical lasso baselines");
  add_cohort_flags(glasso, gl_in);
  add_grid_flags(glasso, gl_grid);
  glasso->add_option("--mode", gl_mode, "pooled, independent or both")
      ->check(CLI::IsMember({"pooled", "independent", "both"}));

  CohortInput st_in;
  StabilityConfig st_cfg;
  auto* stability = app.add_subcommand("stability", "Bootstrap stability baseline");
  add_cohort_flags(stability, st_in);
  stability->add_option("--B", st_cfg.B, "Bootstrap replicates per subject");
  stability->add_option("--c", st_cfg.c, "Penalty randomization strength");
  stability->add_option("--stars-beta", st_cfg.stars_beta, "StARS instability threshold");
  stability->add_option("--stars-subsamples", st_cfg.stars_subsamples, "StARS subsamples");
  stability->add_option("--stars-grid", st_cfg.stars_grid, "StARS grid size");

  CohortInput cv_in;
  double cv_alpha = 0.25;
  GridFlags cv_grid;
  int cv_folds = 5;
  EmFlags cv_em;
  auto* cv = app.add_subcommand("cv", "Select the penalty by blocked cross-validation");
  add_cohort_flags(cv, cv_in);
  cv->add_option("--alpha", cv_alpha, "Share of the penalty on fixed effects")->check(CLI::Range(0.0, 1.0));
  add_grid_flags(cv, cv_grid);
  cv->add_option("--folds", cv_folds, "Number of contiguous folds");
  add_em_flags(cv, cv_em);

  std::string ev_results;
  std::string ev_truth;
  auto* evaluate = app.add_subcommand("evaluate", "Score results against a simulated truth");
  evaluate->add_option("--results", ev_results, "Result directory holding path.json")->required();
  evaluate->add_option("--truth", ev_truth, "Simulation directory or truth.json")->required();

  std::string rp_manifest;
  auto* replay = app.add_subcommand("replay", "Re-run a recorded command and compare outputs");
  replay->add_option("--manifest", rp_manifest, "run_manifest.json to replay")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Run r;
  r.command = app.get_subcommands().front()->get_name();
  r.args = args;
  r.globals = g;
  r.started = utc_now();
  try {
    int code = kExitOk;
    auto* cmd = app.get_subcommands().front();
    if (cmd == replay) {
      if (g.out_dir.empty()) throw UsageError("--out-dir is required");
      return cmd_replay(rp_manifest, g.out_dir, g.threads, out, err);
    }
    if (cmd == simulate) code = cmd_simulate(r, sim);
    else if (cmd == components) code = cmd_simulate_components(r, comp_p, comp_n, comp_subjects);
    else if (cmd == fit) code = cmd_fit(r, fit_in, fit_alpha, fit_grid, fit_em);
    else if (cmd == glasso) code = cmd_glasso(r, gl_in, gl_grid, gl_mode);
    else if (cmd == stability) code = cmd_stability(r, st_in, st_cfg);
    else if (cmd == cv) code = cmd_cv(r, cv_in, cv_alpha, cv_grid, cv_folds, cv_em);
    else if (cmd == evaluate) code = cmd_evaluate(r, ev_results, ev_truth);
    write_manifest(r);
    for (const auto& [key, value] : r.summary.items()) out << key << ": " << value.dump() << "\n";
    return code;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << "run 'mns " << r.command << " --help' for usage\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mns::cli
