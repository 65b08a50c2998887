#include "topk/model.hpp"

#include <stdexcept>

namespace topk {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ci: return "c-i";
    case ModelKind::cci: return "c-ci";
    case ModelKind::cld: return "c-ld";
    case ModelKind::a: return "a";
    case ModelKind::apd: return "a-pd";
    case ModelKind::as: return "a-s";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view tag) {
  for (ModelKind k : all_model_kinds) {
    if (to_string(k) == tag) return k;
  }
  throw InputError("unknown model type '" + std::string(tag) +
                   "' (expected c-i, c-ci, c-ld, a, a-pd or a-s)");
}

bool is_composite(ModelKind kind) {
  return kind == ModelKind::ci || kind == ModelKind::cci || kind == ModelKind::cld;
}

bool is_stratified(ModelKind kind) { return kind == ModelKind::cld || kind == ModelKind::as; }

bool requires_covariates(ModelKind kind) { return kind == ModelKind::cci; }

Layout Layout::make(ModelKind kind, std::size_t m, std::size_t d, std::size_t K) {
  if (m == 0) throw InputError("model needs m >= 1");
  if (K == 0) throw InputError("model needs K >= 1");
  if (requires_covariates(kind) && d == 0) throw InputError("c-ci requires covariates (d >= 1)");
  Layout l;
  l.kind = kind;
  l.m = m;
  l.d = d;
  l.K = is_stratified(kind) ? K : 1;
  switch (kind) {
    case ModelKind::ci:
    case ModelKind::cld:
      l.length_size = m;
      l.bank_width = m;
      break;
    case ModelKind::cci:
      l.length_size = d + 1;
      l.bank_width = m;
      break;
    case ModelKind::a:
    case ModelKind::as:
      l.bank_width = m + 1;
      break;
    case ModelKind::apd:
      l.bank_width = m;
      l.gamma_size = m;
      break;
  }
  l.bank_count = l.K;
  return l;
}

std::vector<ParamBlock> param_blocks(const Layout& l) {
  std::vector<ParamBlock> out;
  if (l.length_size > 0) {
    out.push_back({l.kind == ModelKind::cci ? "rate_weights" : "length_logits", -1, 0,
                   l.length_size});
  }
  const bool banked = is_stratified(l.kind);
  const bool has_end = l.kind == ModelKind::a || l.kind == ModelKind::as;
  for (std::size_t b = 0; b < l.bank_count; ++b) {
    const int tag = banked ? static_cast<int>(b) : -1;
    const std::size_t off = l.bank_offset(b);
    out.push_back({"delta", tag, off, l.m});
    if (has_end) out.push_back({"end", tag, off + l.m, 1});
    if (l.d > 0) out.push_back({"beta", tag, off + l.bank_width, l.d});
  }
  if (l.gamma_size > 0) out.push_back({"gamma", -1, l.gamma_offset(), l.gamma_size});
  return out;
}

namespace {

template <class T>
std::span<T> slice(std::span<T> v, std::size_t off, std::size_t n) {
  return v.subspan(off, n);
}

template <class T>
BasicPLParams<T> pl_bank(const Layout& l, std::span<T> v, std::size_t b) {
  const std::size_t off = l.bank_offset(b);
  return {slice(v, off, l.m), slice(v, off + l.bank_width, l.d)};
}

template <class T>
BasicAugmentedNaiveParams<T> aug_bank(const Layout& l, std::span<T> v, std::size_t b) {
  const std::size_t off = l.bank_offset(b);
  return {slice(v, off, l.m + 1), slice(v, off + l.bank_width, l.d)};
}

void check_size(const Layout& l, std::size_t n) {
  if (n != l.size()) throw std::invalid_argument("parameter buffer does not match layout");
}

}  // namespace

CompositeModel composite_view(const Layout& l, std::span<const double> v) {
  if (!is_composite(l.kind)) throw std::invalid_argument("not a composite model");
  check_size(l, v.size());
  CompositeModel c;
  c.variant = l.kind == ModelKind::ci    ? CompositeVariant::ci
              : l.kind == ModelKind::cci ? CompositeVariant::cci
                                         : CompositeVariant::cld;
  c.m = l.m;
  if (l.kind == ModelKind::cci) {
    c.poisson = {slice(v, 0, l.length_size), l.m};
  } else {
    c.categorical = {slice(v, 0, l.length_size)};
  }
  for (std::size_t b = 0; b < l.bank_count; ++b) c.ranking.banks.push_back(pl_bank(l, v, b));
  return c;
}

CompositeGradient composite_gradient_view(const Layout& l, std::span<double> g) {
  check_size(l, g.size());
  CompositeGradient c;
  c.length = slice(g, 0, l.length_size);
  for (std::size_t b = 0; b < l.bank_count; ++b) c.banks.push_back(pl_bank(l, g, b));
  return c;
}

AugmentedModel augmented_view(const Layout& l, std::span<const double> v) {
  if (is_composite(l.kind)) throw std::invalid_argument("not an augmented model");
  check_size(l, v.size());
  AugmentedModel a;
  a.m = l.m;
  switch (l.kind) {
    case ModelKind::a:
      a.variant = AugmentedVariant::a;
      a.naive = aug_bank(l, v, 0);
      break;
    case ModelKind::apd: {
      a.variant = AugmentedVariant::apd;
      const auto bank = pl_bank(l, v, 0);
      a.positional = {bank.delta, slice(v, l.gamma_offset(), l.gamma_size), bank.beta};
      break;
    }
    default:
      a.variant = AugmentedVariant::as;
      for (std::size_t b = 0; b < l.bank_count; ++b) {
        a.stratified.banks.push_back(aug_bank(l, v, b));
      }
  }
  return a;
}

AugmentedGradient augmented_gradient_view(const Layout& l, std::span<double> g) {
  check_size(l, g.size());
  AugmentedGradient a;
  switch (l.kind) {
    case ModelKind::a:
      a.naive = aug_bank(l, g, 0);
      break;
    case ModelKind::apd: {
      const auto bank = pl_bank(l, g, 0);
      a.positional = {bank.delta, slice(g, l.gamma_offset(), l.gamma_size), bank.beta};
      break;
    }
    default:
      for (std::size_t b = 0; b < l.bank_count; ++b) a.banks.push_back(aug_bank(l, g, b));
  }
  return a;
}

std::span<const double> bank_span(const Layout& l, std::span<const double> params,
                                  std::size_t b) {
  return params.subspan(l.bank_offset(b), l.bank_stride());
}

Model::Model(ModelKind kind, std::size_t m, std::size_t d, std::size_t K)
    : Model(Layout::make(kind, m, d, K)) {}

Model::Model(Layout layout) : layout_(layout), params_(layout.size(), 0.0) {}

std::span<double> Model::length_block() {
  return std::span(params_).first(layout_.length_size);
}

std::span<double> Model::bank_utilities(std::size_t b) {
  return std::span(params_).subspan(layout_.bank_offset(b), layout_.bank_width);
}

std::span<double> Model::bank_beta(std::size_t b) {
  return std::span(params_).subspan(layout_.bank_offset(b) + layout_.bank_width, layout_.d);
}

std::span<double> Model::gamma() {
  return std::span(params_).subspan(layout_.gamma_offset(), layout_.gamma_size);
}

std::span<const double> Model::length_block() const {
  return std::span(params_).first(layout_.length_size);
}

std::span<const double> Model::bank_utilities(std::size_t b) const {
  return std::span(params_).subspan(layout_.bank_offset(b), layout_.bank_width);
}

std::span<const double> Model::bank_beta(std::size_t b) const {
  return std::span(params_).subspan(layout_.bank_offset(b) + layout_.bank_width, layout_.d);
}

std::span<const double> Model::gamma() const {
  return std::span(params_).subspan(layout_.gamma_offset(), layout_.gamma_size);
}

AgentCovariates Model::effective(const AgentCovariates& x) const {
  if (!uses_covariates()) return {};
  if (x.empty()) {
    throw InputError("model '" + std::string(to_string(kind())) +
                     "' uses covariates but none were supplied");
  }
  return x;
}

double Model::log_prob(const PartialOrder& q, const AgentCovariates& x) const {
  const AgentCovariates ex = effective(x);
  if (is_composite(kind())) return composite_log_prob(q, composite(), ex);
  return augmented_log_prob(q, augmented(), ex);
}

PartialOrder Model::sample(const AgentCovariates& x, Rng& rng) const {
  const AgentCovariates ex = effective(x);
  if (is_composite(kind())) return sample_composite(composite(), ex, rng);
  return sample_augmented(augmented(), ex, rng);
}

double Model::empty_log_prob(const AgentCovariates& x) const {
  if (is_composite(kind())) return neg_inf;
  return augmented_log_prob(PartialOrder{}, augmented(), effective(x));
}

}  // namespace topk
