#ifndef SUFFICE_RISK_HPP
#define SUFFICE_RISK_HPP

#include <cstddef>
#include <vector>

#include "suffice/dataset.hpp"
#include "suffice/model.hpp"

namespace suffice {

enum class RiskVariant { kIrmV1, kRex };

/// How the invariance gradient penalty is taken: against a dummy scalar
/// multiplier on the logits (the canonical form), or against the full last
/// layer's parameters.
enum class PenaltyForm { kDummyScalar, kLastLayer };

struct RiskConfig {
  RiskVariant variant = RiskVariant::kIrmV1;
  double lambda = 1.0;
  std::size_t eval_batch = 1024;  // outer mini-batch size drawn by the caller
  PenaltyForm penalty_form = PenaltyForm::kDummyScalar;
};

struct RiskValue {
  double total = 0.0;
  std::vector<double> env_losses;  // indexed by group id
  double penalty = 0.0;
};

/// Mean cross-entropy per group over the idx rows. Environments are the
/// sensitive groups; every group of `ds` must occur in idx.
std::vector<double> env_losses(const ModelParams& params, const Dataset& ds,
                               const std::vector<std::size_t>& idx);

/// Sum over groups of the squared derivative, at t = 1, of the group's mean
/// cross-entropy when logits are scaled by a dummy multiplier t. The
/// per-group derivative is mean[(sigmoid(z_i) - y_i) * z_i].
double irmv1_penalty(const ModelParams& params, const Dataset& ds,
                     const std::vector<std::size_t>& idx,
                     PenaltyForm form = PenaltyForm::kDummyScalar);

/// IRMv1: sum of group losses + lambda * gradient penalty.
/// REx:   sum of group losses + lambda * population variance of the losses.
RiskValue compute_risk(const ModelParams& params, const Dataset& ds,
                       const std::vector<std::size_t>& idx, const RiskConfig& cfg);

/// Population variance (1/E) * sum (x - mean)^2.
double population_variance(const std::vector<double>& values);

/// Value and exact parameter gradient of the directly regularized objective
/// sum_e L_e + lambda * dummy-scalar penalty, differentiated through the
/// model (the penalty's dependence on the logits included).
std::pair<double, Gradients> irm_objective_backward(const ModelParams& params,
                                                    const Dataset& ds,
                                                    const std::vector<std::size_t>& idx,
                                                    double lambda);

}  // namespace suffice

#endif  // SUFFICE_RISK_HPP
