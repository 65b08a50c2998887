#include "topk/eval.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>

#include "topk/io.hpp"

namespace topk {

NllResult test_nll(const Model& model, const Dataset& data, NllOptions opts) {
  if (data.size() == 0) throw InputError("test set is empty");
  NllResult r;
  r.n = data.size();
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const AgentCovariates x = data.agent(i);
    double lp = model.log_prob(data.orders[i], x);
    if (opts.condition_nonempty && !is_composite(model.kind())) {
      lp -= std::log1p(-std::exp(model.empty_log_prob(x)));
    }
    if (lp == neg_inf) {
      ++r.impossible;
    } else {
      s -= lp;
    }
  }
  r.nll = r.impossible > 0 ? std::numeric_limits<double>::infinity()
                           : s / static_cast<double>(r.n);
  return r;
}

namespace {

constexpr std::size_t max_rejections = 1'000'000;

Dataset draw_replicate(const Model& model, std::size_t n, std::uint64_t seed,
                       const CovariateTensor* covariates, bool no_empty,
                       const Universe& universe) {
  Dataset out;
  out.universe = universe;
  out.orders.reserve(n);
  Rng rng(seed);
  std::vector<double> rows;
  const std::size_t block = covariates ? covariates->items() * covariates->features() : 0;
  for (std::size_t i = 0; i < n; ++i) {
    AgentCovariates x;
    if (covariates) {
      const std::size_t a = i % covariates->agents();
      x = agent_covariates(*covariates, a);
      const auto src = covariates->values().subspan(a * block, block);
      rows.insert(rows.end(), src.begin(), src.end());
    }
    PartialOrder q = model.sample(x, rng);
    for (std::size_t tries = 0; no_empty && q.empty(); ++tries) {
      if (tries == max_rejections) {
        throw NumericError("--no-empty: the model almost surely emits empty lists");
      }
      q = model.sample(x, rng);
    }
    out.orders.push_back(std::move(q));
  }
  if (covariates) {
    out.covariates.emplace(n, covariates->items(), covariates->features(), std::move(rows));
  }
  return out;
}

}  // namespace

std::vector<Dataset> replicate_sample(const Model& model, std::size_t n, std::size_t reps,
                                      std::uint64_t seed, const CovariateTensor* covariates,
                                      ReplicateOptions opts) {
  if (model.uses_covariates()) {
    if (!covariates || covariates->agents() == 0) {
      throw InputError("sampling a covariate model requires covariates");
    }
    if (covariates->items() != model.m() || covariates->features() != model.d()) {
      throw InputError("covariate shape does not match the model");
    }
  } else {
    covariates = nullptr;
  }
  const Universe universe(model.m());
  std::vector<Dataset> out(reps);
  std::vector<std::exception_ptr> errors(reps);
  const int workers = std::max(1, opts.workers);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
  for (std::size_t r = 0; r < reps; ++r) {
    try {
      out[r] = draw_replicate(model, n, derive_seed(seed, r), covariates, opts.no_empty,
                              universe);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

LengthMoments length_moments(const Dataset& data) {
  if (data.size() == 0) return {};
  double s = 0.0, ss = 0.0;
  for (const auto& q : data.orders) s += static_cast<double>(q.length());
  const double n = static_cast<double>(data.size());
  const double mean = s / n;
  for (const auto& q : data.orders) {
    const double d = static_cast<double>(q.length()) - mean;
    ss += d * d;
  }
  return {mean, std::sqrt(ss / n)};
}

std::vector<double> length_pmf(const Dataset& data) {
  std::vector<double> p(data.m() + 1, 0.0);
  for (const auto& q : data.orders) p[q.length()] += 1.0;
  for (double& v : p) v /= static_cast<double>(data.size());
  return p;
}

LengthStats length_stats(const std::vector<Dataset>& replicates, const Dataset& truth) {
  if (replicates.empty()) throw InputError("no replicates");
  LengthStats s;
  s.truth = length_moments(truth);
  s.true_pmf = length_pmf(truth);
  s.pooled_pmf.assign(truth.m() + 1, 0.0);
  double total = 0.0;
  for (const auto& rep : replicates) {
    if (rep.m() != truth.m()) throw InputError("replicate universe differs from the data");
    s.replicates.push_back(length_moments(rep));
    for (const auto& q : rep.orders) s.pooled_pmf[q.length()] += 1.0;
    total += static_cast<double>(rep.size());
  }
  for (double& v : s.pooled_pmf) v /= total;
  const double N = static_cast<double>(replicates.size());
  for (const auto& r : s.replicates) {
    s.mean_of_means += r.mean / N;
    s.mean_of_stds += r.std / N;
  }
  if (replicates.size() > 1) {
    double ss = 0.0;
    for (const auto& r : s.replicates) ss += (r.mean - s.mean_of_means) * (r.mean - s.mean_of_means);
    s.std_of_means = std::sqrt(ss / (N - 1.0));
  }
  s.tv = tv_distance(s.true_pmf, s.pooled_pmf);
  return s;
}

DemandShares demand_shares(const Dataset& data) {
  if (data.size() == 0) throw InputError("demand shares of an empty dataset");
  const std::size_t m = data.m();
  DemandShares d;
  d.first.assign(m, 0.0);
  d.overall.assign(m, 0.0);
  double entries = 0.0, empties = 0.0;
  for (const auto& q : data.orders) {
    if (q.empty()) {
      empties += 1.0;
      continue;
    }
    d.first[q[0] - 1] += 1.0;
    for (AltId a : q) d.overall[a - 1] += 1.0;
    entries += static_cast<double>(q.length());
  }
  const double n = static_cast<double>(data.size());
  for (double& v : d.first) v /= n;
  d.empty = empties / n;
  if (entries > 0.0) {
    for (double& v : d.overall) v /= entries;
  }
  return d;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("tv distance: support mismatch");
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6) {
    throw InputError("tv distance: arguments must sum to 1");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

ModelEval evaluate_model(const std::string& name, const Model& model, const Dataset& test,
                         const std::vector<Dataset>& replicates, NllOptions opts) {
  ModelEval e;
  e.name = name;
  e.nll = test_nll(model, test, opts);
  e.length = length_stats(replicates, test);
  e.true_demand = demand_shares(test);
  for (const auto& r : replicates) e.replicate_demand.push_back(demand_shares(r));
  return e;
}

std::vector<std::string> load_groups(const std::filesystem::path& path, const Universe& u) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::string> groups(u.size());
  for (AltId a = 1; a <= u.size(); ++a) groups[a - 1] = u.label(a);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(lineno) +
                       ": expected item_id,group_label");
    }
    const std::string id_text = line.substr(0, comma);
    if (lineno == 1 && id_text == "item_id") continue;
    std::size_t id = 0;
    try {
      std::size_t used = 0;
      id = std::stoul(id_text, &used);
      if (used != id_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": bad item_id '" +
                       id_text + "'");
    }
    if (id < 1 || id > u.size()) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": unknown item_id " +
                       id_text);
    }
    groups[id - 1] = line.substr(comma + 1);
  }
  return groups;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

struct Bucketed {
  std::vector<std::string> labels;
  std::vector<std::size_t> bucket;  // per alternative
};

Bucketed bucket(const std::vector<std::string>& alternatives,
                const std::vector<std::string>* groups) {
  Bucketed b;
  const auto& names = groups ? *groups : alternatives;
  for (const auto& name : names) {
    std::size_t k = 0;
    while (k < b.labels.size() && b.labels[k] != name) ++k;
    if (k == b.labels.size()) b.labels.push_back(name);
    b.bucket.push_back(k);
  }
  return b;
}

void write_demand_rows(std::ostream& out, const std::string& model, const std::string& source,
                       const std::string& replicate, const DemandShares& d, const Bucketed& b) {
  std::vector<double> first(b.labels.size(), 0.0), overall(b.labels.size(), 0.0);
  for (std::size_t a = 0; a < d.first.size(); ++a) {
    first[b.bucket[a]] += d.first[a];
    overall[b.bucket[a]] += d.overall[a];
  }
  for (std::size_t k = 0; k < b.labels.size(); ++k) {
    out << model << "," << source << "," << replicate << "," << b.labels[k] << ","
        << format_double(first[k]) << "," << format_double(overall[k]) << "\n";
  }
  if (d.empty > 0.0) {
    out << model << "," << source << "," << replicate << ",(empty),"
        << format_double(d.empty) << ",0\n";
  }
}

}  // namespace

void emit_plot_data(const EvalReport& report, const std::filesystem::path& dir,
                    const std::vector<std::string>* groups) {
  if (report.models.empty()) throw InputError("no models in the report");
  for (const auto& m : report.models) {
    if (m.length.replicates.empty() || m.replicate_demand.empty()) {
      throw InputError("no replicates");
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());

  {
    auto out = open_csv(dir / "nll_by_model.csv");
    out << "model,test_nll,impossible,n\n";
    for (const auto& m : report.models) {
      out << m.name << "," << format_double(m.nll.nll) << "," << m.nll.impossible << ","
          << m.nll.n << "\n";
    }
  }
  {
    auto out = open_csv(dir / "length_stats_by_model.csv");
    out << "model,source,replicate,mean,std,mean_of_stds,tv_length\n";
    for (const auto& m : report.models) {
      const auto& s = m.length;
      out << m.name << ",true,," << format_double(s.truth.mean) << ","
          << format_double(s.truth.std) << ",,\n";
      for (std::size_t r = 0; r < s.replicates.size(); ++r) {
        out << m.name << ",replicate," << r << "," << format_double(s.replicates[r].mean) << ","
            << format_double(s.replicates[r].std) << ",,\n";
      }
      out << m.name << ",aggregate,," << format_double(s.mean_of_means) << ","
          << format_double(s.std_of_means) << "," << format_double(s.mean_of_stds) << ","
          << format_double(s.tv) << "\n";
    }
  }
  {
    const Bucketed b = bucket(report.alternatives, groups);
    auto out = open_csv(dir / "demand_by_alternative.csv");
    out << "model,source,replicate,alternative,first_share,overall_share\n";
    for (const auto& m : report.models) {
      write_demand_rows(out, m.name, "true", "", m.true_demand, b);
      for (std::size_t r = 0; r < m.replicate_demand.size(); ++r) {
        write_demand_rows(out, m.name, "replicate", std::to_string(r), m.replicate_demand[r], b);
      }
    }
  }
}

}  // namespace topk
