#include "topk/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

namespace topk {

void FitConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InputError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (!(tol > 0.0)) throw InputError("tolerance must be positive");
  if (!(lambda_l2 >= 0.0) || !(lambda_laplacian >= 0.0)) {
    throw InputError("regularization strengths must be non-negative");
  }
  if (K == 0) throw InputError("K must be at least 1");
  if (max_epochs == 0) throw InputError("max_epochs must be at least 1");
  if (workers < 1) throw InputError("workers must be at least 1");
}

Adam::Adam(std::size_t size, double lr, double beta1, double beta2, double epsilon,
           double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(epsilon), weight_decay_(weight_decay),
      m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i] + weight_decay_ * params[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

double nll(const Dataset& data, const Model& model) {
  if (data.size() == 0) throw InputError("NLL of an empty dataset");
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double lp = model.log_prob(data.orders[i], data.agent(i));
    if (!std::isfinite(lp)) {
      throw NumericError("record " + std::to_string(i + 1) +
                         " has zero probability under the model (non-finite loss)");
    }
    s += lp;
  }
  return -s / static_cast<double>(data.size());
}

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_inputs(ModelKind kind, const Dataset& data) {
  if (data.size() == 0) throw InputError("cannot fit an empty dataset");
  validate_dataset(data, !is_composite(kind));
  if (requires_covariates(kind) && !data.covariates) {
    throw InputError("model c-ci requires covariates");
  }
}

}  // namespace

FitResult fit(ModelKind kind, const Dataset& data, const FitConfig& cfg) {
  cfg.validate();
  check_inputs(kind, data);
  const std::size_t d = data.covariates ? data.covariates->features() : 0;
  FitResult result{Model(kind, data.m(), d, cfg.K), {}, false, 0};
  Model& model = result.model;
  const Penalties pen = cfg.penalties();
  const std::size_t P = model.params().size();

  const ObjectivePlan full = make_plan(model.layout(), data);
  std::vector<double> grad(P, 0.0);
  auto evaluate = [&](std::size_t epoch) {
    const ObjectiveParts parts = objective_parallel(model, full, pen, grad, cfg.workers);
    const double f = parts.total();
    result.trace.push_back({epoch, f, norm(grad)});
    if (!std::isfinite(f) || !std::isfinite(result.trace.back().grad_norm)) {
      throw DivergenceError("objective became non-finite at epoch " + std::to_string(epoch),
                            result.trace);
    }
    return f;
  };

  Adam adam(P, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon,
            cfg.l2_as_weight_decay ? cfg.lambda_l2 : 0.0);
  const bool minibatch = cfg.batch_size > 0 && cfg.batch_size < data.size();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(cfg.seed, 0));
  std::vector<double> batch_grad(P, 0.0);

  double prev = evaluate(0);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (!minibatch) {
      adam.step(model.params(), grad);
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
        const std::span<const std::size_t> batch(order.data() + start, stop - start);
        const ObjectivePlan plan = make_plan(model.layout(), data, batch);
        objective_parallel(model, plan, pen, batch_grad, cfg.workers);
        adam.step(model.params(), batch_grad);
      }
    }
    result.epochs_run = epoch;
    const double f = evaluate(epoch);
    if (std::abs(f - prev) < cfg.tol) {
      result.converged = true;
      break;
    }
    prev = f;
  }
  return result;
}

void write_trace(const std::vector<TraceRow>& trace, std::ostream& out) {
  out << "epoch,objective,grad_norm\n";
  char buf[96];
  for (const auto& row : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", row.epoch, row.objective,
                  row.grad_norm);
    out << buf;
  }
}

std::vector<std::vector<std::size_t>> stratify_by_length(const Dataset& data,
                                                         std::size_t K) {
  if (K == 0) throw InputError("K must be at least 1");
  std::vector<std::vector<std::size_t>> strata(K);
  for (std::size_t i = 0; i < data.size(); ++i) {
    strata[stratum_index(data.orders[i].length(), K)].push_back(i);
  }
  return strata;
}

std::vector<std::vector<ChoiceEvent>> stratify_by_rank(const Dataset& data, std::size_t K) {
  if (K == 0) throw InputError("K must be at least 1");
  const std::size_t m = data.m();
  std::vector<std::vector<ChoiceEvent>> strata(K);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& q = data.orders[i];
    std::vector<char> used(m + 1, 0);
    const std::size_t last = q.length() < m ? q.length() + 1 : q.length();
    for (std::size_t j = 1; j <= last; ++j) {
      ChoiceEvent e;
      e.record = i;
      e.position = j;
      e.chosen = j <= q.length() ? q[j - 1] : 0;
      for (AltId a = 1; a <= m; ++a) {
        if (!used[a]) e.available.push_back(a);
      }
      if (e.chosen != 0) used[e.chosen] = 1;
      strata[stratum_index(j, K)].push_back(std::move(e));
    }
  }
  return strata;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out;
  out.universe = data.universe;
  out.orders.reserve(indices.size());
  for (std::size_t i : indices) out.orders.push_back(data.orders.at(i));
  if (data.covariates) {
    const auto& x = *data.covariates;
    const std::size_t block = x.items() * x.features();
    std::vector<double> values;
    values.reserve(indices.size() * block);
    for (std::size_t i : indices) {
      const auto src = x.values().subspan(i * block, block);
      values.insert(values.end(), src.begin(), src.end());
    }
    out.covariates.emplace(indices.size(), x.items(), x.features(), std::move(values));
  }
  return out;
}

std::vector<Fold> kfold_split(const Dataset& data, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw InputError("need at least 2 folds");
  if (data.size() < folds) {
    throw InputError("cannot split " + std::to_string(data.size()) + " records into " +
                     std::to_string(folds) + " folds");
  }
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x6b666f6c64ULL));
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<Fold> out;
  const std::size_t n = perm.size();
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t begin = n * f / folds, end = n * (f + 1) / folds;
    std::vector<std::size_t> test(perm.begin() + begin, perm.begin() + end);
    std::vector<std::size_t> train;
    train.reserve(n - test.size());
    train.insert(train.end(), perm.begin(), perm.begin() + begin);
    train.insert(train.end(), perm.begin() + end, perm.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    out.push_back({subset(data, train), subset(data, test), test});
  }
  return out;
}

namespace {

double held_out_nll(const Dataset& data, const Model& model) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    s -= model.log_prob(data.orders[i], data.agent(i));
  }
  return s / static_cast<double>(data.size());
}

}  // namespace

GridResult grid_search(ModelKind kind, const Dataset& data,
                       std::span<const GridPoint> grid, const FitConfig& cfg,
                       std::size_t folds) {
  if (grid.empty()) throw InputError("empty hyperparameter grid");
  const auto splits = kfold_split(data, folds, cfg.seed);
  GridResult result;
  double best = std::numeric_limits<double>::infinity();
  for (const GridPoint& point : grid) {
    FitConfig c = cfg;
    c.K = point.K;
    c.lambda_laplacian = point.lambda_laplacian;
    GridRow row{point, {}, 0.0};
    for (const auto& fold : splits) {
      const FitResult fitted = fit(kind, fold.train, c);
      row.fold_nll.push_back(held_out_nll(fold.test, fitted.model));
    }
    row.mean_nll = std::accumulate(row.fold_nll.begin(), row.fold_nll.end(), 0.0) /
                   static_cast<double>(row.fold_nll.size());
    if (result.table.empty() || row.mean_nll < best) {
      best = row.mean_nll;
      result.best = point;
    }
    result.table.push_back(std::move(row));
  }
  return result;
}

}  // namespace topk
