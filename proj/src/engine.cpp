#include "dagalpha/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dagalpha/kernels.hpp"

namespace dagalpha {

namespace {

double median_of(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

class Evaluator {
 public:
  Evaluator(const Panel& panel, const EvalOptions& options)
      : panel_(panel),
        opt_(options),
        k_(kernels::active()),
        rows_(panel.num_dates()),
        cols_(panel.num_assets()) {}

  Matrix eval(const Expr& e) {
    switch (e.kind()) {
      case Expr::Kind::feature: {
        Matrix m = panel_.feature(e.feature_id());
        k_.sanitize(m.data(), m.size());
        return m;
      }
      case Expr::Kind::int_const:
        return Matrix(rows_, cols_, static_cast<double>(e.int_value()));
      case Expr::Kind::float_const:
        return Matrix(rows_, cols_, e.float_value());
      case Expr::Kind::unary:
        return finish(unary(e.op(), eval(e.child(0))));
      case Expr::Kind::binary:
        return finish(binary(e.op(), eval(e.child(0)), eval(e.child(1))));
      case Expr::Kind::rolling1:
        return finish(rolling1(e.op(), eval(e.child(0)), static_cast<std::size_t>(e.window())));
      case Expr::Kind::rolling2:
        return finish(rolling2(e.op(), eval(e.child(0)), eval(e.child(1)),
                               static_cast<std::size_t>(e.window())));
    }
    return Matrix(rows_, cols_);
  }

 private:
  Matrix finish(Matrix m) {
    k_.sanitize(m.data(), m.size());
    return m;
  }

  Matrix unary(Op op, Matrix x) {
    Matrix out(rows_, cols_);
    const std::size_t n = x.size();
    switch (op) {
      case Op::Abs:
        k_.abs(x.data(), out.data(), n);
        break;
      case Op::Sign:
        k_.sign(x.data(), out.data(), n);
        break;
      case Op::Inv: {
        const std::vector<double> ones(n, 1.0);
        k_.div_guarded(ones.data(), x.data(), opt_.eps, out.data(), n);
        break;
      }
      case Op::Log:
        for (std::size_t i = 0; i < n; ++i) {
          const double v = x.data()[i] + opt_.eps;
          out.data()[i] = v > 0.0 ? std::log(v) : kNaN;
        }
        break;
      case Op::SLog1p:
        for (std::size_t i = 0; i < n; ++i) {
          const double v = x.data()[i];
          if (std::isnan(v)) continue;
          const double mag = std::log1p(std::fabs(v));
          out.data()[i] = v > 0.0 ? mag : (v < 0.0 ? -mag : 0.0);
        }
        break;
      case Op::Rank:
        for (std::size_t t = 0; t < rows_; ++t) rank_row(x.row(t), out.row(t));
        break;
      default:
        break;
    }
    return out;
  }

  Matrix binary(Op op, const Matrix& a, const Matrix& b) {
    Matrix out(rows_, cols_);
    const std::size_t n = a.size();
    switch (op) {
      case Op::Add:
        k_.add(a.data(), b.data(), out.data(), n);
        break;
      case Op::Sub:
        k_.sub(a.data(), b.data(), out.data(), n);
        break;
      case Op::Mul:
        k_.mul(a.data(), b.data(), out.data(), n);
        break;
      case Op::Div:
        k_.div_guarded(a.data(), b.data(), opt_.eps, out.data(), n);
        break;
      case Op::Greater:
        k_.greater(a.data(), b.data(), out.data(), n);
        break;
      case Op::Less:
        k_.less(a.data(), b.data(), out.data(), n);
        break;
      case Op::GetGreater:
        k_.max(a.data(), b.data(), out.data(), n);
        break;
      case Op::GetLess:
        k_.min(a.data(), b.data(), out.data(), n);
        break;
      case Op::Pow:
        for (std::size_t i = 0; i < n; ++i) {
          const double base = a.data()[i];
          const double exponent = b.data()[i];
          if (std::isnan(base) || std::isnan(exponent)) continue;
          out.data()[i] = std::pow(base, exponent);
        }
        break;
      default:
        break;
    }
    return out;
  }

  // Rolling mean of rows [t-d+1, t] into `mean`.
  void window_mean(const Matrix& x, std::size_t t, std::size_t d, double* mean) {
    std::fill_n(mean, cols_, 0.0);
    for (std::size_t j = t + 1 - d; j <= t; ++j) k_.acc_add(mean, x.row(j).data(), cols_);
    k_.div_scalar(mean, static_cast<double>(d), mean, cols_);
  }

  void window_extreme(const Matrix& x, std::size_t t, std::size_t d, bool want_max, double* out) {
    std::copy_n(x.row(t + 1 - d).data(), cols_, out);
    for (std::size_t j = t + 2 - d; j <= t; ++j) {
      if (want_max) {
        k_.max(out, x.row(j).data(), out, cols_);
      } else {
        k_.min(out, x.row(j).data(), out, cols_);
      }
    }
  }

  // Window values of one asset, oldest first; false if any is missing.
  bool gather(const Matrix& x, std::size_t t, std::size_t d, std::size_t a, std::vector<double>& w) {
    w.clear();
    for (std::size_t j = t + 1 - d; j <= t; ++j) {
      const double v = x(j, a);
      if (std::isnan(v)) return false;
      w.push_back(v);
    }
    return true;
  }

  Matrix rolling1(Op op, const Matrix& x, std::size_t d) {
    Matrix out(rows_, cols_);
    const double fd = static_cast<double>(d);
    std::vector<double> mean(cols_), acc(cols_), acc3(cols_), acc4(cols_), tmp(cols_), w;

    if (op == Op::TsEMA) {
      const double alpha = 2.0 / (fd + 1.0);
      std::vector<double> state(cols_, kNaN);
      for (std::size_t t = 0; t < rows_; ++t) {
        for (std::size_t a = 0; a < cols_; ++a) {
          const double v = x(t, a);
          if (std::isnan(state[a])) {
            state[a] = v;
          } else if (!std::isnan(v)) {
            state[a] = alpha * v + (1.0 - alpha) * state[a];
          }
          out(t, a) = state[a];
        }
      }
      return out;
    }

    // Lagged operators only need x[t - d].
    if (op == Op::Ref || op == Op::TsDelta || op == Op::TsRatio || op == Op::TsPctChange) {
      for (std::size_t t = d; t < rows_; ++t) {
        const double* now = x.row(t).data();
        const double* then = x.row(t - d).data();
        double* o = out.row(t).data();
        switch (op) {
          case Op::Ref:
            std::copy_n(then, cols_, o);
            break;
          case Op::TsDelta:
            k_.sub(now, then, o, cols_);
            break;
          case Op::TsRatio:
            k_.div_guarded(now, then, opt_.eps, o, cols_);
            break;
          default:
            k_.div_guarded(now, then, opt_.eps, o, cols_);
            k_.sub_scalar(o, 1.0, o, cols_);
            break;
        }
      }
      return out;
    }

    for (std::size_t t = d - 1; t < rows_; ++t) {
      double* o = out.row(t).data();
      const double* now = x.row(t).data();
      switch (op) {
        case Op::TsSum:
          std::fill_n(o, cols_, 0.0);
          for (std::size_t j = t + 1 - d; j <= t; ++j) k_.acc_add(o, x.row(j).data(), cols_);
          break;
        case Op::TsMean:
          window_mean(x, t, d, o);
          break;
        case Op::TsVar:
        case Op::TsStd:
        case Op::TsIr: {
          window_mean(x, t, d, mean.data());
          std::fill(acc.begin(), acc.end(), 0.0);
          for (std::size_t j = t + 1 - d; j <= t; ++j) {
            k_.acc_sq_dev(acc.data(), x.row(j).data(), mean.data(), cols_);
          }
          const double dof = fd - static_cast<double>(opt_.ddof);
          if (dof <= 0.0) break;  // stays NaN
          k_.div_scalar(acc.data(), dof, acc.data(), cols_);
          if (op == Op::TsVar) {
            std::copy(acc.begin(), acc.end(), o);
            break;
          }
          for (std::size_t a = 0; a < cols_; ++a) acc[a] = std::sqrt(acc[a]);
          if (op == Op::TsStd) {
            std::copy(acc.begin(), acc.end(), o);
          } else {
            k_.div_guarded(mean.data(), acc.data(), opt_.eps, o, cols_);
          }
          break;
        }
        case Op::TsMin:
          window_extreme(x, t, d, false, o);
          break;
        case Op::TsMax:
          window_extreme(x, t, d, true, o);
          break;
        case Op::TsMinMaxDiff:
          window_extreme(x, t, d, true, acc.data());
          window_extreme(x, t, d, false, tmp.data());
          k_.sub(acc.data(), tmp.data(), o, cols_);
          break;
        case Op::TsMaxDiff:
          window_extreme(x, t, d, true, acc.data());
          k_.sub(now, acc.data(), o, cols_);
          break;
        case Op::TsMinDiff:
          window_extreme(x, t, d, false, acc.data());
          k_.sub(now, acc.data(), o, cols_);
          break;
        case Op::TsSkew:
        case Op::TsKurt: {
          window_mean(x, t, d, mean.data());
          std::fill(acc.begin(), acc.end(), 0.0);
          std::fill(acc3.begin(), acc3.end(), 0.0);
          std::fill(acc4.begin(), acc4.end(), 0.0);
          for (std::size_t j = t + 1 - d; j <= t; ++j) {
            k_.acc_dev_moments(acc.data(), acc3.data(), acc4.data(), x.row(j).data(), mean.data(), cols_);
          }
          for (std::size_t a = 0; a < cols_; ++a) o[a] = op == Op::TsSkew
                                                              ? skewness(acc[a], acc3[a], fd)
                                                              : kurtosis(acc[a], acc4[a], fd);
          break;
        }
        case Op::TsWMA: {
          std::fill_n(o, cols_, 0.0);
          double weight = 1.0;
          for (std::size_t j = t + 1 - d; j <= t; ++j, weight += 1.0) {
            k_.acc_add_scaled(o, x.row(j).data(), weight, cols_);
          }
          k_.div_scalar(o, fd * (fd + 1.0) / 2.0, o, cols_);
          break;
        }
        case Op::TsMed:
        case Op::TsMad:
        case Op::TsRank:
          for (std::size_t a = 0; a < cols_; ++a) {
            if (!gather(x, t, d, a, w)) continue;
            o[a] = order_statistic(op, w, now[a]);
          }
          break;
        default:
          break;
      }
    }
    return out;
  }

  static double skewness(double s2, double s3, double n) {
    if (n < 3.0) return kNaN;
    const double m2 = s2 / n;
    const double m3 = s3 / n;
    if (!(m2 > 0.0)) return kNaN;
    const double g1 = m3 / (m2 * std::sqrt(m2));
    return g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
  }

  static double kurtosis(double s2, double s4, double n) {
    if (n < 4.0) return kNaN;
    const double m2 = s2 / n;
    const double m4 = s4 / n;
    if (!(m2 > 0.0)) return kNaN;
    const double g2 = m4 / (m2 * m2) - 3.0;
    return ((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0));
  }

  static double order_statistic(Op op, std::vector<double>& w, double today) {
    if (op == Op::TsRank) {
      const auto n = static_cast<double>(w.size());
      if (w.size() == 1) return 0.5;
      double less = 0.0, equal = 0.0;
      for (double v : w) {
        if (v < today) less += 1.0;
        if (v == today) equal += 1.0;
      }
      const double rank = less + (equal + 1.0) / 2.0;
      return (rank - 1.0) / (n - 1.0);
    }
    const double med = median_of(w);
    if (op == Op::TsMed) return med;
    for (double& v : w) v = std::fabs(v - med);
    return median_of(w);
  }

  Matrix rolling2(Op op, const Matrix& x, const Matrix& y, std::size_t d) {
    Matrix out(rows_, cols_);
    const double fd = static_cast<double>(d);
    std::vector<double> mx(cols_), my(cols_), sxy(cols_), sxx(cols_), syy(cols_);
    for (std::size_t t = d - 1; t < rows_; ++t) {
      double* o = out.row(t).data();
      window_mean(x, t, d, mx.data());
      window_mean(y, t, d, my.data());
      std::fill(sxy.begin(), sxy.end(), 0.0);
      for (std::size_t j = t + 1 - d; j <= t; ++j) {
        k_.acc_cross_dev(sxy.data(), x.row(j).data(), mx.data(), y.row(j).data(), my.data(), cols_);
      }
      if (op == Op::TsCov) {
        const double dof = fd - static_cast<double>(opt_.ddof);
        if (dof > 0.0) k_.div_scalar(sxy.data(), dof, o, cols_);
        continue;
      }
      std::fill(sxx.begin(), sxx.end(), 0.0);
      std::fill(syy.begin(), syy.end(), 0.0);
      for (std::size_t j = t + 1 - d; j <= t; ++j) {
        k_.acc_sq_dev(sxx.data(), x.row(j).data(), mx.data(), cols_);
        k_.acc_sq_dev(syy.data(), y.row(j).data(), my.data(), cols_);
      }
      for (std::size_t a = 0; a < cols_; ++a) {
        if (sxx[a] > 0.0 && syy[a] > 0.0) o[a] = sxy[a] / std::sqrt(sxx[a] * syy[a]);
      }
    }
    return out;
  }

  const Panel& panel_;
  EvalOptions opt_;
  const kernels::KernelTable& k_;
  std::size_t rows_;
  std::size_t cols_;
};

}  // namespace

void rank_row(std::span<const double> in, std::span<double> out) {
  std::vector<std::size_t> idx;
  idx.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = kNaN;
    if (!std::isnan(in[i])) idx.push_back(i);
  }
  const std::size_t n = idx.size();
  if (n == 0) return;
  if (n == 1) {
    out[idx[0]] = 0.5;
    return;
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return in[a] < in[b]; });
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && in[idx[j + 1]] == in[idx[i]]) ++j;
    // 1-based average rank of the tie group [i, j].
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    const double scaled = (avg - 1.0) / static_cast<double>(n - 1);
    for (std::size_t k = i; k <= j; ++k) out[idx[k]] = scaled;
    i = j + 1;
  }
}

FactorMatrix evaluate(const Expr& expr, const Panel& panel, const EvalOptions& options) {
  if (panel.num_dates() == 0 || panel.num_assets() == 0) {
    return FactorMatrix(panel.num_dates(), panel.num_assets());
  }
  return Evaluator(panel, options).eval(expr);
}

}  // namespace dagalpha
