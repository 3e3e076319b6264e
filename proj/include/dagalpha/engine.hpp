#pragma once

#include "dagalpha/expr.hpp"
#include "dagalpha/matrix.hpp"
#include "dagalpha/panel.hpp"

namespace dagalpha {

/// A factor's evaluated values on the panel's date x asset grid. Warmup cells
/// and numerical pathologies are NaN.
using FactorMatrix = Matrix;

/// Numerical conventions of the operator set.
struct EvalOptions {
  /// Guard for Div, Inv, TsRatio, TsPctChange, TsIr denominators and the Log shift.
  double eps = 1e-8;
  /// Delta degrees of freedom for TsStd, TsVar, TsCov and TsIr.
  int ddof = 1;
};

/// Evaluates `expr` over `panel`. Never throws on numerical problems: every
/// non-finite intermediate becomes NaN. Rolling windows need a full window of
/// valid observations, except TsEMA which only needs a first observation.
FactorMatrix evaluate(const Expr& expr, const Panel& panel, const EvalOptions& options = {});

/// Cross-sectional average rank of one row mapped to [0, 1]; NaN stays NaN.
void rank_row(std::span<const double> in, std::span<double> out);

}  // namespace dagalpha
