#ifndef VCFAM_BASELINES_HPP
#define VCFAM_BASELINES_HPP

// Comparison models, all fitted with the same penalized-GLS/AIC machinery:
//   VCFLM  y = b0(t) + sum_k xi_k b_k(t)          (t-splines, shared lambda_t)
//   FAM1   y = sum_k f_k(zeta_k) + h(t)           (lambda_f, lambda_h)
//   FAM2   y = sum_k f_k(zeta_k)                  (lambda_f)
//   FLM    y = sum_k xi_k beta_k                  (ridge lambda)
// VCFLM and FLM use the raw scores, FAM1/FAM2 the CDF-transformed ones.

#include <vector>

#include "model.hpp"

namespace vcfam {

inline ModelFit fit_vcflm(const TrainingSet& data, const VcfamConfig& config, const std::vector<double>& lambda_t_grid) {
  return fit_model(ModelKind::vcflm, data, config, {lambda_t_grid});
}

inline ModelFit fit_fam1(const TrainingSet& data, const VcfamConfig& config, const std::vector<double>& lambda_f_grid,
                         const std::vector<double>& lambda_h_grid) {
  return fit_model(ModelKind::fam1, data, config, {lambda_f_grid, lambda_h_grid});
}

inline ModelFit fit_fam2(const TrainingSet& data, const VcfamConfig& config, const std::vector<double>& lambda_grid) {
  return fit_model(ModelKind::fam2, data, config, {lambda_grid});
}

inline ModelFit fit_flm(const TrainingSet& data, const std::vector<double>& ridge_grid,
                        const VcfamConfig& config = {}) {
  return fit_model(ModelKind::flm, data, config, {ridge_grid});
}

} // namespace vcfam

#endif
