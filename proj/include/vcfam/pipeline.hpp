#ifndef VCFAM_PIPELINE_HPP
#define VCFAM_PIPELINE_HPP

// Raw curves -> smoothed functional data -> centered sample -> FPCA.

#include "fdata.hpp"
#include "fpca.hpp"

namespace vcfam {

struct PreprocessOptions {
  double curve_penalty = default_curve_penalty;
  double variance_threshold = 0.99;
  int max_components = 20;
  int fixed_q = 0; // > 0 overrides the variance rule
};

/// Centers `sample`, picks q (fixed or by cumulative variance) and fits FPCA.
inline FpcaModel fpca_for(const FunctionalSample& sample, const PreprocessOptions& options) {
  const FunctionalSample centered = center(sample);
  int q = options.fixed_q;
  if (q <= 0) {
    const Vector spectrum = fpca_spectrum(centered);
    const int cap = static_cast<int>(std::min<Eigen::Index>({static_cast<Eigen::Index>(options.max_components),
                                                             centered.size() - 1, spectrum.size()}));
    q = select_components(spectrum, options.variance_threshold, cap);
  }
  return fit_fpca(centered, q);
}

struct Preprocessed {
  FunctionalSample curves; // smoothed, uncentered
  FpcaModel fpca;
};

inline Preprocessed preprocess(const RawCurves& raw, const BasisSpec& curve_basis, const PreprocessOptions& options) {
  Preprocessed out;
  out.curves = smooth_curves(raw, curve_basis, options.curve_penalty);
  out.fpca = fpca_for(out.curves, options);
  return out;
}

} // namespace vcfam

#endif
