#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "topk/assignment.hpp"
#include "topk/eval.hpp"
#include "topk/io.hpp"

namespace topk::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* preflib_schema =
    "Ballot files: preflib strict incomplete orders, either the 2021 layout\n"
    "  # NUMBER ALTERNATIVES: m\n"
    "  # ALTERNATIVE NAME i: label\n"
    "  <count>: a,b,c\n"
    "or the legacy layout (m, m name lines, voters line, then <count>,a,b,c).\n"
    "Ties ({...}), duplicates and empty ballots are rejected.\n";

constexpr const char* covariate_schema =
    "Covariates: CSV with header agent_id,item_id,<feature>...; agent_id is the\n"
    "1-based record position in the ballot file. Missing pairs are zero.\n";

std::string timestamp_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

Dataset load_data(const std::string& path, const std::string& covariates, bool allow_empty,
                  std::ostream& err) {
  ParseReport report;
  Dataset data = parse_preflib(fs::path(path), &report, ParseOptions{allow_empty});
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  if (!covariates.empty()) {
    CovariateReport cr;
    data.covariates = load_covariates(fs::path(covariates), data.universe, data.size(), &cr);
    if (cr.missing > 0) {
      err << "warning: " << cr.missing << " (agent, item) covariate pairs missing; filled with 0\n";
    }
  }
  return data;
}

void add_fit_flags(CLI::App* cmd, FitConfig& cfg) {
  cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--beta1", cfg.beta1, "Adam beta1")->capture_default_str();
  cmd->add_option("--beta2", cfg.beta2, "Adam beta2")->capture_default_str();
  cmd->add_option("--eps", cfg.epsilon, "Adam epsilon")->capture_default_str();
  cmd->add_option("--lambda-l2", cfg.lambda_l2, "l2 penalty strength")->capture_default_str();
  cmd->add_option("--lambda-laplacian", cfg.lambda_laplacian, "Laplacian penalty strength")
      ->capture_default_str();
  cmd->add_option("--K", cfg.K, "number of strata (c-ld, a-s)")->capture_default_str();
  cmd->add_option("--max-epochs", cfg.max_epochs)->capture_default_str();
  cmd->add_option("--tol", cfg.tol, "stop when |F_t - F_{t-1}| < tol")->capture_default_str();
  cmd->add_option("--batch-size", cfg.batch_size, "0 = full batch")->capture_default_str();
  cmd->add_option("--seed", cfg.seed)->capture_default_str();
  cmd->add_option("--workers", cfg.workers, "OpenMP threads for the objective")
      ->capture_default_str();
  cmd->add_flag("--weight-decay", cfg.l2_as_weight_decay,
                "apply l2 as Adam weight decay instead of an objective term");
}

void check_model_flags(ModelKind kind, const std::string& covariates) {
  if (requires_covariates(kind) && covariates.empty()) {
    throw InputError("--model c-ci requires --covariates");
  }
}

void require_compatible(const Model& model, const Dataset& data, const std::string& source) {
  if (model.m() != data.m()) {
    throw InputError(source + ": model has m=" + std::to_string(model.m()) + " but data has m=" +
                     std::to_string(data.m()));
  }
  if (model.uses_covariates()) {
    if (!data.covariates) throw InputError(source + ": model needs --covariates");
    if (data.covariates->features() != model.d()) {
      throw InputError(source + ": covariate width does not match the model");
    }
  }
}

std::vector<std::string> alternative_labels(const Universe& u) {
  std::vector<std::string> out;
  for (AltId a = 1; a <= u.size(); ++a) out.push_back(u.label(a));
  return out;
}

// ---- subcommands -----------------------------------------------------------

struct StatsArgs {
  std::string data;
  std::string out;
  bool allow_empty = false;
};

int cmd_stats(const StatsArgs& a, std::ostream& out, std::ostream& err) {
  const Dataset data = load_data(a.data, "", a.allow_empty, err);
  const SummaryStats s = summary_stats(data);
  write_summary(s, out);
  if (!a.out.empty()) {
    auto f = open_out(a.out);
    write_summary(s, f);
  }
  return ok;
}

struct FitArgs {
  std::string data, covariates, model, out;
  FitConfig cfg;
  bool timestamp = false;
  bool allow_empty = false;
};

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  const ModelKind kind = parse_model_kind(a.model);
  check_model_flags(kind, a.covariates);
  a.cfg.validate();
  const Dataset data = load_data(a.data, a.covariates, a.allow_empty, err);
  const fs::path dir(a.out);
  ensure_dir(dir);
  try {
    const FitResult r = fit(kind, data, a.cfg);
    Checkpoint ckpt{r.model, data.universe.labels(), a.cfg,
                    {dataset_hash(data), a.cfg.seed, a.timestamp ? timestamp_now() : ""}};
    save_checkpoint(ckpt, dir / "checkpoint.json");
    auto trace = open_out(dir / "trace.csv");
    write_trace(r.trace, trace);
    out << "model " << a.model << ": epochs " << r.epochs_run << ", converged "
        << (r.converged ? "yes" : "no") << ", objective "
        << format_double(r.trace.back().objective) << "\n";
  } catch (const DivergenceError& e) {
    auto trace = open_out(dir / "trace.csv");
    write_trace(e.trace(), trace);
    throw;
  }
  return ok;
}

struct EvalArgs {
  std::vector<std::string> ckpts;
  std::string data, covariates, out, groups;
  std::size_t reps = 100;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  int workers = 1;
  bool no_empty = false;
  bool condition_nonempty = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const Dataset data = load_data(a.data, a.covariates, true, err);
  std::vector<std::string> groups;
  if (!a.groups.empty()) groups = load_groups(a.groups, data.universe);
  EvalReport report;
  report.alternatives = alternative_labels(data.universe);
  for (std::size_t i = 0; i < a.ckpts.size(); ++i) {
    const Checkpoint ckpt = load_checkpoint(a.ckpts[i]);
    require_compatible(ckpt.model, data, a.ckpts[i]);
    std::string name(to_string(ckpt.model.kind()));
    for (const auto& m : report.models) {
      if (m.name == name) name += "_" + std::to_string(i + 1);
    }
    const std::size_t n = a.n > 0 ? a.n : data.size();
    const CovariateTensor* x = data.covariates ? &*data.covariates : nullptr;
    const auto reps =
        replicate_sample(ckpt.model, n, a.reps, a.seed, x, {a.no_empty, a.workers});
    report.models.push_back(
        evaluate_model(name, ckpt.model, data, reps, {a.condition_nonempty}));
  }
  emit_plot_data(report, a.out, groups.empty() ? nullptr : &groups);
  out << "model,test_nll,impossible,n,synthetic_mean_length,true_mean_length\n";
  for (const auto& m : report.models) {
    out << m.name << "," << format_double(m.nll.nll) << "," << m.nll.impossible << ","
        << m.nll.n << "," << format_double(m.length.mean_of_means) << ","
        << format_double(m.length.truth.mean) << "\n";
  }
  return ok;
}

struct SampleArgs {
  std::string ckpt, covariates, out;
  std::size_t n = 0;
  std::size_t reps = 1;
  std::uint64_t seed = 0;
  int workers = 1;
  bool no_empty = false;
};

std::string replicate_name(std::size_t r, std::size_t reps) {
  const std::size_t width = std::max<std::size_t>(3, std::to_string(reps - 1).size());
  std::string digits = std::to_string(r);
  return "rep_" + std::string(width - digits.size(), '0') + digits + ".txt";
}

int cmd_sample(const SampleArgs& a, std::ostream& out, std::ostream&) {
  if (a.n == 0) throw InputError("--n must be at least 1");
  if (a.reps == 0) throw InputError("--reps must be at least 1");
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  std::optional<CovariateTensor> x;
  if (ckpt.model.uses_covariates()) {
    if (a.covariates.empty()) throw InputError("this model needs --covariates");
    x = load_covariates(fs::path(a.covariates), Universe(ckpt.model.m()), a.n);
  }
  const auto reps = replicate_sample(ckpt.model, a.n, a.reps, a.seed, x ? &*x : nullptr,
                                     {a.no_empty, a.workers});
  const fs::path dir(a.out);
  ensure_dir(dir);
  for (std::size_t r = 0; r < reps.size(); ++r) {
    Dataset d = reps[r];
    if (ckpt.labels.size() == d.m()) d.universe = Universe(d.m(), ckpt.labels);
    write_dataset(d, dir / replicate_name(r, a.reps));
  }
  out << "wrote " << reps.size() << " replicate files to " << dir.string() << "\n";
  return ok;
}

struct CvArgs {
  std::string data, covariates, model, grid = "K=1;lapl=0", out;
  std::size_t folds = 5;
  FitConfig cfg;
};

int cmd_cv(const CvArgs& a, std::ostream& out, std::ostream& err) {
  const ModelKind kind = parse_model_kind(a.model);
  check_model_flags(kind, a.covariates);
  const GridSpec grid = parse_grid(a.grid);
  a.cfg.validate();
  const Dataset data = load_data(a.data, a.covariates, false, err);
  const GridResult r = grid_search(kind, data, grid.points, a.cfg, a.folds);
  std::ostringstream table;
  table << "K,lambda_laplacian";
  for (std::size_t f = 1; f <= a.folds; ++f) table << ",fold_" << f;
  table << ",mean_nll\n";
  for (const auto& row : r.table) {
    table << row.point.K << "," << format_double(row.point.lambda_laplacian);
    for (double v : row.fold_nll) table << "," << format_double(v);
    table << "," << format_double(row.mean_nll) << "\n";
  }
  table << "best K=" << r.best.K << ";lapl=" << format_double(r.best.lambda_laplacian) << "\n";
  out << table.str();
  if (!a.out.empty()) {
    auto f = open_out(a.out);
    f << table.str();
  }
  return ok;
}

struct AssignArgs {
  std::string preferences, capacities, synthetic_from, covariates, out;
  std::uint64_t seed = 0;
  std::size_t reps = 100;
  int workers = 1;
  bool no_empty = false;
};

int cmd_assign(const AssignArgs& a, std::ostream& out, std::ostream& err) {
  const Dataset prefs = load_data(a.preferences, "", true, err);
  const auto caps = load_capacities(a.capacities, prefs.m());
  std::vector<std::vector<PartialOrder>> sets{prefs.orders};
  if (!a.synthetic_from.empty()) {
    const Checkpoint ckpt = load_checkpoint(a.synthetic_from);
    if (ckpt.model.m() != prefs.m()) throw InputError("checkpoint and preferences differ in m");
    std::optional<CovariateTensor> x;
    if (ckpt.model.uses_covariates()) {
      if (a.covariates.empty()) throw InputError("this model needs --covariates");
      x = load_covariates(fs::path(a.covariates), prefs.universe, prefs.size());
    }
    for (auto& d : replicate_sample(ckpt.model, prefs.size(), a.reps, a.seed,
                                    x ? &*x : nullptr, {a.no_empty, a.workers})) {
      sets.push_back(std::move(d.orders));
    }
  }
  const auto rates = assign_many(sets, caps, a.seed, a.workers);
  std::ostringstream table;
  table << "source,replicate,top1,top3,any\n";
  for (std::size_t i = 0; i < rates.size(); ++i) {
    table << (i == 0 ? std::string("true,") : "synthetic," + std::to_string(i - 1)) << ","
          << format_double(rates[i].top1) << "," << format_double(rates[i].top3) << ","
          << format_double(rates[i].any) << "\n";
  }
  out << table.str();
  if (!a.out.empty()) {
    auto f = open_out(a.out);
    f << table.str();
  }
  return ok;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

}  // namespace

GridSpec parse_grid(const std::string& text) {
  std::vector<std::size_t> ks{1};
  std::vector<double> lapl{0.0};
  bool saw_k = false, saw_l = false;
  auto bad = [&](const std::string& why) {
    return InputError("malformed --grid '" + text + "': " + why);
  };
  if (strip(text).empty()) throw bad("empty");
  for (const auto& part : split_list(text, ';')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw bad("expected key=values");
    const std::string key = strip(part.substr(0, eq));
    const auto values = split_list(part.substr(eq + 1), ',');
    if (values.empty()) throw bad("no values for " + key);
    if (key == "K") {
      if (saw_k) throw bad("K given twice");
      saw_k = true;
      ks.clear();
      for (const auto& v : values) {
        const std::string t = strip(v);
        std::size_t used = 0;
        long long k = 0;
        try {
          k = std::stoll(t, &used);
        } catch (const std::exception&) {
          throw bad("K value '" + t + "'");
        }
        if (used != t.size() || k < 1) throw bad("K value '" + t + "'");
        ks.push_back(static_cast<std::size_t>(k));
      }
    } else if (key == "lapl") {
      if (saw_l) throw bad("lapl given twice");
      saw_l = true;
      lapl.clear();
      for (const auto& v : values) {
        const std::string t = strip(v);
        std::size_t used = 0;
        double x = 0;
        try {
          x = std::stod(t, &used);
        } catch (const std::exception&) {
          throw bad("lapl value '" + t + "'");
        }
        if (used != t.size() || !(x >= 0.0) || !std::isfinite(x)) {
          throw bad("lapl value '" + t + "'");
        }
        lapl.push_back(x);
      }
    } else {
      throw bad("unknown key '" + key + "'");
    }
  }
  GridSpec g;
  for (std::size_t k : ks) {
    for (double l : lapl) g.points.push_back({k, l});
  }
  return g;
}

std::string fit_flags(const FitConfig& c) {
  std::ostringstream s;
  s << "--lr " << format_double(c.learning_rate) << " --beta1 " << format_double(c.beta1)
    << " --beta2 " << format_double(c.beta2) << " --eps " << format_double(c.epsilon)
    << " --lambda-l2 " << format_double(c.lambda_l2) << " --lambda-laplacian "
    << format_double(c.lambda_laplacian) << " --K " << c.K << " --max-epochs " << c.max_epochs
    << " --tol " << format_double(c.tol) << " --batch-size " << c.batch_size << " --seed "
    << c.seed << " --workers " << c.workers;
  if (c.l2_as_weight_decay) s << " --weight-decay";
  return s.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fit, evaluate and sample statistical models of top-k partial orders", "topk"};
  app.require_subcommand(1, 1);
  app.footer(std::string(preflib_schema) +
             "Exit codes: 0 success, 2 input error, 3 numeric failure.");

  StatsArgs stats;
  auto* s = app.add_subcommand("stats", "dataset summary: n, m, mean length, length histogram");
  s->add_option("--data", stats.data, "ballot file")->required()->check(CLI::ExistingFile);
  s->add_option("--out", stats.out, "also write the summary to this file");
  s->add_flag("--allow-empty", stats.allow_empty, "accept empty ballots");
  s->footer("Output: key,value lines n, m, mean_length, then length,count rows.");

  FitArgs fita;
  auto* f = app.add_subcommand("fit", "fit a model by regularized maximum likelihood");
  f->add_option("--data", fita.data, "ballot file")->required()->check(CLI::ExistingFile);
  f->add_option("--model", fita.model, "c-i | c-ci | c-ld | a | a-pd | a-s")->required();
  f->add_option("--covariates", fita.covariates, "covariate CSV")->check(CLI::ExistingFile);
  f->add_option("--out", fita.out, "output directory (checkpoint.json, trace.csv)")->required();
  f->add_flag("--timestamp", fita.timestamp, "record the wall-clock time in the checkpoint");
  f->add_flag("--allow-empty", fita.allow_empty, "accept empty ballots (augmented models)");
  add_fit_flags(f, fita.cfg);
  f->footer(std::string(covariate_schema) +
            "checkpoint.json: versioned JSON with model_type, m, d, K, params by role,\n"
            "fit_config and provenance. trace.csv: epoch,objective,grad_norm (row 0 is the\n"
            "initial objective).");

  EvalArgs eva;
  auto* e = app.add_subcommand("eval", "test NLL, synthetic replicates and plot data");
  e->add_option("--model-ckpt", eva.ckpts, "checkpoint (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  e->add_option("--data", eva.data, "held-out ballot file")->required()->check(CLI::ExistingFile);
  e->add_option("--covariates", eva.covariates, "covariate CSV for --data")
      ->check(CLI::ExistingFile);
  e->add_option("--out", eva.out, "output directory")->required();
  e->add_option("--reps", eva.reps, "synthetic replicates per model")->capture_default_str();
  e->add_option("--n", eva.n, "orders per replicate (0 = size of --data)")->capture_default_str();
  e->add_option("--seed", eva.seed)->capture_default_str();
  e->add_option("--workers", eva.workers)->capture_default_str();
  e->add_option("--groups", eva.groups, "item_id,group_label mapping")->check(CLI::ExistingFile);
  e->add_flag("--no-empty", eva.no_empty, "resample empty synthetic lists");
  e->add_flag("--condition-nonempty", eva.condition_nonempty,
              "augmented NLL conditioned on a non-empty list");
  e->footer(
      "Writes nll_by_model.csv (model,test_nll,impossible,n),\n"
      "length_stats_by_model.csv (model,source,replicate,mean,std,mean_of_stds,tv_length) and\n"
      "demand_by_alternative.csv (model,source,replicate,alternative,first_share,overall_share).");

  SampleArgs sa;
  auto* sm = app.add_subcommand("sample", "draw synthetic datasets from a checkpoint");
  sm->add_option("--model-ckpt", sa.ckpt)->required()->check(CLI::ExistingFile);
  sm->add_option("--n", sa.n, "orders per replicate")->required();
  sm->add_option("--reps", sa.reps, "number of replicates")->capture_default_str();
  sm->add_option("--seed", sa.seed, "replicate r uses the seed derived from (seed, r)")
      ->capture_default_str();
  sm->add_option("--covariates", sa.covariates, "covariate CSV with agents 1..n")
      ->check(CLI::ExistingFile);
  sm->add_option("--workers", sa.workers)->capture_default_str();
  sm->add_option("--out", sa.out, "output directory (rep_000.txt, ...)")->required();
  sm->add_flag("--no-empty", sa.no_empty, "resample empty augmented draws");

  CvArgs cva;
  auto* c = app.add_subcommand("cv", "k-fold grid search over (K, lambda_laplacian)");
  c->add_option("--data", cva.data)->required()->check(CLI::ExistingFile);
  c->add_option("--model", cva.model)->required();
  c->add_option("--covariates", cva.covariates)->check(CLI::ExistingFile);
  c->add_option("--folds", cva.folds)->capture_default_str();
  c->add_option("--grid", cva.grid, "e.g. \"K=1,5,10;lapl=0,0.001\"")->capture_default_str();
  c->add_option("--out", cva.out, "also write the table to this file");
  add_fit_flags(c, cva.cfg);
  c->footer("Output: K,lambda_laplacian,fold_1..fold_k,mean_nll rows, then the argmin.");

  AssignArgs asg;
  auto* a = app.add_subcommand("assign", "deferred acceptance on true and synthetic lists");
  a->add_option("--preferences", asg.preferences, "ballot file of student lists")
      ->required()
      ->check(CLI::ExistingFile);
  a->add_option("--capacities", asg.capacities, "program_id,capacity CSV")
      ->required()
      ->check(CLI::ExistingFile);
  a->add_option("--seed", asg.seed, "priority and sampling seed")->capture_default_str();
  a->add_option("--synthetic-from", asg.synthetic_from, "checkpoint to sample lists from")
      ->check(CLI::ExistingFile);
  a->add_option("--covariates", asg.covariates)->check(CLI::ExistingFile);
  a->add_option("--reps", asg.reps)->capture_default_str();
  a->add_option("--workers", asg.workers)->capture_default_str();
  a->add_option("--out", asg.out, "also write the table to this file");
  a->add_flag("--no-empty", asg.no_empty);
  a->footer("Output: source,replicate,top1,top3,any rows.");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& pe) {
    return app.exit(pe, out, err) == 0 ? ok : input_error;
  }

  try {
    if (*s) return cmd_stats(stats, out, err);
    if (*f) return cmd_fit(fita, out, err);
    if (*e) return cmd_eval(eva, out, err);
    if (*sm) return cmd_sample(sa, out, err);
    if (*c) return cmd_cv(cva, out, err);
    if (*a) return cmd_assign(asg, out, err);
  } catch (const InputError& ex) {
    err << "error: " << ex.what() << "\n";
    return input_error;
  } catch (const NumericError& ex) {
    err << "numeric error: " << ex.what() << "\n";
    return numeric_error;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return failure;
  }
  return failure;
}

}  // namespace topk::cli
