#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "hqo/spectral.hpp"

namespace hqo {

/// Per-element values of the eigenfunction residual indicator.
struct IndicatorField {
  Eigen::VectorXd values;
  int i_star = 0;
  int extra = 0;
  ElementFamily family;

  double total() const { return values.sum(); }
};

struct IndicatorOptions {
  /// Add the normal flux on Neumann boundary edges. The indicator integrates
  /// over the element boundary minus the domain boundary, so by default all
  /// boundary edges are skipped.
  bool include_neumann = false;
};

/// eta_K = (1/i*) sum_{i=1}^{i*+extra} ( h_K^2 ||Lap e_i + lambda_i e_i||_K^2
///          + sum over interior edges of K of (h_K/2) ||[[grad e_i . n]]||_e^2 ).
/// Requires i* >= 1 and at least i*+extra eigenpairs.
IndicatorField residual_indicator(const EigenSet& e, int i_star, int extra,
                                  const IndicatorOptions& opts = {});

/// Elements with eta_K > max(eta) / 2; empty when eta vanishes.
std::vector<int> mark_half_max(const IndicatorField& eta);

/// Smallest set of largest indicators whose sum reaches theta * total.
std::vector<int> mark_dorfler(const IndicatorField& eta, double theta);

/// `element_id,eta` rows.
std::string indicator_csv(const IndicatorField& eta);

}  // namespace hqo
