#pragma once

// A fitted or explicit model of any of the six kinds. Parameters live in one
// flat vector described by a Layout; the typed views used by the composite
// and augmented modules are spans into it. Gradients use the same layout.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topk/augmented.hpp"
#include "topk/composite.hpp"

namespace topk {

enum class ModelKind { ci, cci, cld, a, apd, as };

inline constexpr ModelKind all_model_kinds[] = {ModelKind::ci, ModelKind::cci,
                                                ModelKind::cld, ModelKind::a,
                                                ModelKind::apd, ModelKind::as};

// Tags: c-i, c-ci, c-ld, a, a-pd, a-s.
std::string_view to_string(ModelKind kind);
// Throws InputError on an unknown tag.
ModelKind parse_model_kind(std::string_view tag);

bool is_composite(ModelKind kind);
bool is_stratified(ModelKind kind);
bool requires_covariates(ModelKind kind);

// Flat parameter layout:
//   [length block][bank 0]...[bank B-1][gamma]
// Each bank is [utilities (m, or m+1 with END last)][beta (d)].
struct Layout {
  ModelKind kind = ModelKind::ci;
  std::size_t m = 1;
  std::size_t d = 0;
  std::size_t K = 1;

  std::size_t length_size = 0;  // m logits, d+1 rate weights, or 0
  std::size_t bank_width = 0;   // utilities per bank
  std::size_t bank_count = 1;
  std::size_t gamma_size = 0;

  static Layout make(ModelKind kind, std::size_t m, std::size_t d, std::size_t K);

  std::size_t bank_stride() const { return bank_width + d; }
  std::size_t bank_offset(std::size_t b) const { return length_size + b * bank_stride(); }
  std::size_t gamma_offset() const { return bank_offset(bank_count); }
  std::size_t size() const { return gamma_offset() + gamma_size; }
};

// A named contiguous parameter block; bank < 0 for unbanked roles.
struct ParamBlock {
  std::string role;
  int bank = -1;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Roles: length_logits, rate_weights, delta, end, gamma, beta.
std::vector<ParamBlock> param_blocks(const Layout& layout);

CompositeModel composite_view(const Layout& layout, std::span<const double> params);
CompositeGradient composite_gradient_view(const Layout& layout, std::span<double> grad);
AugmentedModel augmented_view(const Layout& layout, std::span<const double> params);
AugmentedGradient augmented_gradient_view(const Layout& layout, std::span<double> grad);

// Bank b as one span (utilities followed by beta); used by the Laplacian.
std::span<const double> bank_span(const Layout& layout, std::span<const double> params,
                                  std::size_t b);

class Model {
 public:
  Model(ModelKind kind, std::size_t m, std::size_t d = 0, std::size_t K = 1);
  explicit Model(Layout layout);

  const Layout& layout() const noexcept { return layout_; }
  ModelKind kind() const noexcept { return layout_.kind; }
  std::size_t m() const noexcept { return layout_.m; }
  std::size_t d() const noexcept { return layout_.d; }
  std::size_t K() const noexcept { return layout_.K; }
  bool uses_covariates() const noexcept { return layout_.d > 0; }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> block(const ParamBlock& b) { return std::span(params_).subspan(b.offset, b.size); }

  // Direct role accessors (mutable, for building explicit models).
  std::span<double> length_block();
  std::span<double> bank_utilities(std::size_t b);
  std::span<double> bank_beta(std::size_t b);
  std::span<double> gamma();
  std::span<const double> length_block() const;
  std::span<const double> bank_utilities(std::size_t b) const;
  std::span<const double> bank_beta(std::size_t b) const;
  std::span<const double> gamma() const;

  CompositeModel composite() const { return composite_view(layout_, params_); }
  AugmentedModel augmented() const { return augmented_view(layout_, params_); }

  // x is ignored when the model has no covariates; required otherwise.
  double log_prob(const PartialOrder& q, const AgentCovariates& x = {}) const;
  PartialOrder sample(const AgentCovariates& x, Rng& rng) const;

  // Probability mass of the empty list (augmented models; 0 for composite).
  double empty_log_prob(const AgentCovariates& x = {}) const;

  friend bool operator==(const Model& a, const Model& b) {
    return a.layout_.kind == b.layout_.kind && a.layout_.m == b.layout_.m &&
           a.layout_.d == b.layout_.d && a.layout_.K == b.layout_.K &&
           a.params_ == b.params_;
  }

 private:
  AgentCovariates effective(const AgentCovariates& x) const;

  Layout layout_;
  std::vector<double> params_;
};

}  // namespace topk
