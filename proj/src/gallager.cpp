#include "bioexp/gallager.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "bioexp/errors.hpp"
#include "bioexp/optim.hpp"

namespace bioexp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Online log-sum-exp accumulator; the inner objectives run millions of times
// inside nested searches, so they must not allocate.
struct Lse {
  double m = kNegInf;
  double s = 0.0;

  void add(double v) {
    if (v == kNegInf) return;
    if (v <= m) {
      s += std::exp(v - m);
    } else {
      s = (m == kNegInf ? 0.0 : s * std::exp(m - v)) + 1.0;
      m = v;
    }
  }
  double value() const { return m == kNegInf ? kNegInf : m + std::log(s); }
};

struct LogModel {
  std::vector<double> log_px;                // -inf off support
  std::vector<std::vector<double>> log_pxy;  // [y][x], -inf off support
  std::size_t nx = 0, ny = 0;
};

LogModel log_model(const SourceModel& model) {
  LogModel lm;
  lm.nx = model.nx();
  lm.ny = model.ny();
  lm.log_px.resize(lm.nx);
  for (std::size_t x = 0; x < lm.nx; ++x)
    lm.log_px[x] = model.px()[x] > 0.0 ? std::log(model.px()[x]) : kNegInf;
  lm.log_pxy.assign(lm.ny, std::vector<double>(lm.nx, kNegInf));
  for (std::size_t y = 0; y < lm.ny; ++y)
    for (std::size_t x = 0; x < lm.nx; ++x)
      if (model.joint().at(x, y) > 0.0)
        lm.log_pxy[y][x] = std::log(model.joint().at(x, y));
  return lm;
}

std::vector<double> log_of(const std::vector<double>& w) {
  std::vector<double> lw(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    lw[i] = w[i] > 0.0 ? std::log(w[i]) : kNegInf;
  return lw;
}

// Coordinate tolerance for the nested golden-section searches: the value
// error near a smooth optimum is quadratic in the bracket width, so the
// square root of the requested value tolerance suffices per coordinate.
double coord_tol(const GallagerConfig& cfg) { return std::sqrt(cfg.inner_tol); }

// Inner dual objective as a function of the auxiliary log-law; returns -inf
// (as a plain double marker) when the law puts zero mass on needed support.
double inner_objective_raw(const LogModel& lm, const std::vector<double>& log_w,
                           double rho, double lambda) {
  Lse outer;
  for (std::size_t y = 0; y < lm.ny; ++y) {
    Lse inner;
    for (std::size_t x = 0; x < lm.nx; ++x) {
      double lpxy = lm.log_pxy[y][x];
      if (lpxy == kNegInf) continue;
      if (rho > 0.0 && log_w[x] == kNegInf) return kNegInf;
      double lw_term = rho != 0.0 ? rho * log_w[x] : 0.0;
      inner.add((lpxy + (rho + lambda) * lm.log_px[x] - lw_term) /
                (1.0 + lambda));
    }
    outer.add((1.0 + lambda) * inner.value());
  }
  return -outer.value();
}

struct WSolve {
  std::vector<double> w;
  double f = 0.0;
};

// Maximize a concave functional of a probability vector on the X simplex.
// Binary alphabets use golden-section on the single free coordinate, larger
// ones a multi-start downhill simplex in pinned softmax coordinates.
WSolve maximize_over_pmf(const std::function<double(const std::vector<double>&)>& eval,
                         std::size_t nx, const GallagerConfig& cfg,
                         std::uint64_t seed) {
  if (nx == 2) {
    std::vector<double> w(2, 0.0);
    ScalarOpt r = golden_max(
        [&](double w0) {
          w[0] = w0;
          w[1] = 1.0 - w0;
          return eval(w);
        },
        1e-12, 1.0 - 1e-12, coord_tol(cfg));
    return WSolve{{r.x, 1.0 - r.x}, r.f};
  }
  std::size_t dim = nx - 1;
  auto assemble = [&](const std::vector<double>& z) {
    std::vector<double> full(nx, 0.0);
    for (std::size_t i = 0; i < dim; ++i) full[i + 1] = z[i];
    return softmax(full);
  };
  auto neg = [&](const std::vector<double>& z) { return -eval(assemble(z)); };

  std::vector<std::vector<double>> starts;
  starts.emplace_back(dim, 0.0);  // uniform
  std::mt19937_64 rng(seed);
  for (int k = 1; k < std::max(1, cfg.w_starts); ++k) {
    std::vector<double> p = dirichlet1(rng, nx);
    std::vector<double> z = softmax_seed(p, 1e-9);
    starts.emplace_back(z.begin() + 1, z.end());
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_z(dim, 0.0);
  for (const auto& z0 : starts) {
    NelderMeadResult nr = nelder_mead(neg, z0, {});
    if (nr.f < best) {
      best = nr.f;
      best_z = nr.x;
    }
  }
  return WSolve{assemble(best_z), -best};
}

WSolve solve_w(const LogModel& lm, double rho, double lambda,
               const GallagerConfig& cfg) {
  if (rho == 0.0) {
    // The auxiliary law drops out of the objective entirely.
    std::vector<double> w(lm.nx, 1.0 / double(lm.nx));
    return WSolve{w, inner_objective_raw(lm, log_of(w), 0.0, lambda)};
  }
  std::vector<double> lw_buf;
  return maximize_over_pmf(
      [&](const std::vector<double>& w) {
        lw_buf.resize(w.size());
        for (std::size_t i = 0; i < w.size(); ++i)
          lw_buf[i] = w[i] > 0.0 ? std::log(w[i]) : kNegInf;
        return inner_objective_raw(lm, lw_buf, rho, lambda);
      },
      lm.nx, cfg, 0x57a275u);
}

// sup over rho >= 0 with a doubling cap: accept once the argmax sits interior
// by a 10% margin or the value has stopped moving between cap levels.
struct RhoSolve {
  double rho = 0.0;
  double value = kNegInf;
  bool converged = true;
};

RhoSolve maximize_over_rho(const std::function<double(double)>& value_at,
                           const GallagerConfig& cfg) {
  double cap = cfg.rho_initial_cap;
  double prev = kNegInf;
  while (true) {
    ScalarOpt r = golden_max(value_at, 0.0, cap, coord_tol(cfg));
    if (r.x <= 0.9 * cap) return {r.x, r.f, true};
    if (std::abs(r.f - prev) < 1e-9) return {r.x, r.f, true};
    if (cap >= cfg.rho_hard_cap) return {r.x, r.f, false};
    prev = r.f;
    cap *= cfg.bracket_growth;
  }
}

struct MismatchedLogs {
  std::vector<std::vector<double>> log_pp;  // [y][x] log of decoder law
  bool support_violation = false;           // source support where law is zero
};

MismatchedLogs mismatched_logs(const SourceModel& model, const ConditionalPmf& pp) {
  if (!(pp.given_alphabet() == model.py().alphabet()) ||
      !(pp.out_alphabet() == model.px().alphabet()))
    throw InputError("mismatched law must condition on Y and emit X");
  MismatchedLogs ml;
  ml.log_pp.assign(model.ny(), std::vector<double>(model.nx(), kNegInf));
  for (std::size_t y = 0; y < model.ny(); ++y)
    for (std::size_t x = 0; x < model.nx(); ++x) {
      double v = pp.row(y)[x];
      if (v > 0.0) ml.log_pp[y][x] = std::log(v);
      else if (model.joint().at(x, y) > 0.0) ml.support_violation = true;
    }
  return ml;
}

// Fixed-rate mismatched exponent integrand at parameters (s, t), t <= s.
// At t == 0 the reweighting exponents are exactly zero, so every alphabet
// symbol contributes a unit term (the Chernoff bound at parameter zero);
// restricting those sums to the decoder-law support would overstate the
// exponent.
double mm_fixed_raw(const LogModel& lm, const MismatchedLogs& ml, double rw,
                    double s, double t) {
  if (s == 0.0) return 0.0;
  Lse outer;
  for (std::size_t y = 0; y < lm.ny; ++y) {
    double log_a;
    if (t == 0.0) {
      log_a = std::log(double(lm.nx));
    } else {
      Lse a;
      for (std::size_t x = 0; x < lm.nx; ++x)
        if (ml.log_pp[y][x] != kNegInf) a.add((t / s) * ml.log_pp[y][x]);
      log_a = a.value();
    }
    Lse b;
    for (std::size_t x = 0; x < lm.nx; ++x) {
      if (lm.log_pxy[y][x] == kNegInf) continue;
      if (ml.log_pp[y][x] == kNegInf) {
        if (t > 0.0) return kNegInf;  // reweighting sum diverges
        b.add(lm.log_pxy[y][x]);
      } else {
        b.add(lm.log_pxy[y][x] - t * ml.log_pp[y][x]);
      }
    }
    outer.add(s * log_a + b.value());
  }
  return -outer.value() + s * rw;
}

// Variable-rate mismatched integrand at (s, t, lambda) with auxiliary log-law.
double mm_variable_raw(const LogModel& lm, const MismatchedLogs& ml, double e0,
                       double s, double t, double lambda,
                       const std::vector<double>& log_w) {
  if (s == 0.0) {
    if (lambda != 0.0)
      throw InputError("variable mismatched integrand: s == 0 needs lambda == 0");
    return 0.0;
  }
  double mu = lambda / s;
  Lse outer;
  for (std::size_t y = 0; y < lm.ny; ++y) {
    Lse c;
    for (std::size_t x = 0; x < lm.nx; ++x) {
      if (lm.log_px[x] == kNegInf) continue;  // zero source weight
      if (t > 0.0 && ml.log_pp[y][x] == kNegInf) continue;
      if (mu > 0.0 && log_w[x] == kNegInf) return kNegInf;  // tilt diverges
      double pp_term = t > 0.0 ? (t / s) * ml.log_pp[y][x] : 0.0;
      double w_term = mu != 0.0 ? mu * log_w[x] : 0.0;
      c.add(pp_term + (1.0 + mu) * lm.log_px[x] - w_term);
    }
    Lse b;
    for (std::size_t x = 0; x < lm.nx; ++x) {
      if (lm.log_pxy[y][x] == kNegInf) continue;
      if (ml.log_pp[y][x] == kNegInf) {
        if (t > 0.0) return kNegInf;
        b.add(lm.log_pxy[y][x]);
      } else {
        b.add(lm.log_pxy[y][x] - t * ml.log_pp[y][x]);
      }
    }
    outer.add(s * c.value() + b.value());
  }
  return -outer.value() - (lambda + s) * e0;
}

double clamp01_open(double v) {
  return std::min(1.0 - 1e-9, std::max(1e-9, v));
}

double logit(double v) {
  v = clamp01_open(v);
  return std::log(v / (1.0 - v));
}

double sigma(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

ExtReal dual_inner_objective(const SourceModel& model, const Pmf& w, double rho,
                             double lambda) {
  if (!(rho >= 0.0) || !(lambda >= 0.0))
    throw InputError("dual_inner_objective: rho and lambda must be >= 0");
  if (w.size() != model.nx())
    throw InputError("dual_inner_objective: w must live on the X alphabet");
  double v = inner_objective_raw(log_model(model), log_of(w.probs()), rho, lambda);
  return v == kNegInf ? ExtReal::neg_inf() : ExtReal(v);
}

bool symmetric_uniform_source(const SourceModel& model) {
  std::size_t nx = model.nx();
  for (std::size_t x = 0; x < nx; ++x)
    if (std::abs(model.px()[x] - 1.0 / double(nx)) > 1e-12) return false;

  std::vector<std::size_t> live;
  for (std::size_t y = 0; y < model.ny(); ++y)
    if (model.py()[y] > 0.0) live.push_back(y);
  if (live.empty()) return false;

  const Pmf& ref = model.x_given_y().row(live[0]);
  std::vector<std::vector<std::size_t>> perms;
  for (std::size_t y : live) {
    const Pmf& col = model.x_given_y().row(y);
    std::vector<std::size_t> perm(nx, nx);
    std::vector<bool> used(nx, false);
    for (std::size_t i = 0; i < nx; ++i) {
      bool found = false;
      for (std::size_t j = 0; j < nx; ++j) {
        if (!used[j] && std::abs(col[i] - ref[j]) <= 1e-12) {
          perm[i] = j;
          used[j] = true;
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
    perms.push_back(std::move(perm));
  }
  // Conservative check: the matched permutations must be closed under
  // composition, so averaging over them fixes the uniform law.
  auto member = [&](const std::vector<std::size_t>& p) {
    return std::find(perms.begin(), perms.end(), p) != perms.end();
  };
  for (const auto& a : perms)
    for (const auto& b : perms) {
      std::vector<std::size_t> c(nx);
      for (std::size_t i = 0; i < nx; ++i) c[i] = a[b[i]];
      if (!member(c)) return false;
    }
  return true;
}

TradeoffPoint fr_fixed_exponent_at_rate(const SourceModel& model, double r_w,
                                        const GallagerConfig& cfg) {
  if (!std::isfinite(r_w) || !(r_w >= 0.0))
    throw InputError("fr_fixed_exponent_at_rate: r_w must be >= 0");
  LogModel lm = log_model(model);

  auto g = [&](double rho) {
    Lse outer;
    for (std::size_t y = 0; y < lm.ny; ++y) {
      Lse inner;
      for (std::size_t x = 0; x < lm.nx; ++x)
        if (lm.log_pxy[y][x] != kNegInf)
          inner.add(lm.log_pxy[y][x] / (1.0 + rho));
      outer.add((1.0 + rho) * inner.value());
    }
    return -outer.value() + rho * r_w;
  };
  ScalarOpt r = golden_max(g, 0.0, 1.0, cfg.inner_tol);

  TradeoffPoint p;
  p.value = std::max(0.0, r.f);
  p.solver_tag = "gallager-fixed";
  DualWitness dw;
  dw.rho = r.x;
  p.dual_witness = dw;
  return p;
}

TradeoffPoint fr_fixed_dual(const SourceModel& model, double e0,
                            const GallagerConfig& cfg) {
  if (!(e0 >= 0.0)) throw InputError("fr_fixed_dual: e0 must be >= 0");
  HelperRateResult rw = max_helper_rate_fixed(model, e0, cfg.helper_rate);
  TradeoffPoint p = fr_fixed_exponent_at_rate(model, rw.value, cfg);
  p.e0 = e0;
  if (rw.lambda.finite())
    p.dual_witness->lambda = rw.lambda.value();
  else
    p.dual_witness->lambda_unbounded = true;
  return p;
}

TradeoffPoint fr_variable_dual(const SourceModel& model, double e0,
                               const GallagerConfig& cfg) {
  if (!(e0 >= 0.0)) throw InputError("fr_variable_dual: e0 must be >= 0");
  LogModel lm = log_model(model);
  bool symmetric = symmetric_uniform_source(model);
  std::vector<double> log_uniform(lm.nx, -std::log(double(lm.nx)));

  auto value_at = [&](double lambda, double rho) {
    double f = symmetric ? inner_objective_raw(lm, log_uniform, rho, lambda)
                         : solve_w(lm, rho, lambda, cfg).f;
    return f - (rho + lambda) * e0;
  };
  auto best_over_rho = [&](double lambda) {
    return maximize_over_rho([&](double rho) { return value_at(lambda, rho); },
                             cfg);
  };

  ScalarOpt lam = golden_max(
      [&](double lambda) { return best_over_rho(lambda).value; }, 0.0, 1.0,
      coord_tol(cfg));
  RhoSolve rho = best_over_rho(lam.x);

  TradeoffPoint p;
  p.e0 = e0;
  p.value = std::max(0.0, rho.value);
  p.solver_tag = "gallager-variable";
  p.converged = rho.converged;
  DualWitness dw;
  dw.lambda = lam.x;
  dw.rho = rho.rho;
  if (symmetric)
    dw.w = Pmf::uniform(model.px().alphabet());
  else
    dw.w = Pmf(model.px().alphabet(), solve_w(lm, rho.rho, lam.x, cfg).w);
  p.dual_witness = dw;
  return p;
}

double mismatched_objective_fixed(const SourceModel& model,
                                  const ConditionalPmf& p_prime, double rw,
                                  double s, double t) {
  return mm_fixed_raw(log_model(model), mismatched_logs(model, p_prime), rw, s, t);
}

double mismatched_objective_variable(const SourceModel& model,
                                     const ConditionalPmf& p_prime, double e0,
                                     double s, double t, double lambda,
                                     const Pmf& w) {
  return mm_variable_raw(log_model(model), mismatched_logs(model, p_prime), e0,
                         s, t, lambda, log_of(w.probs()));
}

TradeoffPoint fr_fixed_mismatched(const SourceModel& model,
                                  const ConditionalPmf& p_prime, double e0,
                                  const GallagerConfig& cfg) {
  if (!(e0 >= 0.0)) throw InputError("fr_fixed_mismatched: e0 must be >= 0");
  HelperRateResult rw = max_helper_rate_fixed(model, e0, cfg.helper_rate);
  LogModel lm = log_model(model);
  MismatchedLogs ml = mismatched_logs(model, p_prime);

  auto value = [&](double s, double u) {
    return mm_fixed_raw(lm, ml, rw.value, s, s * u);
  };

  TradeoffPoint p;
  p.e0 = e0;
  p.solver_tag = "gallager-fixed-mismatched";
  DualWitness dw;

  if (ml.support_violation) {
    // Any t > 0 diverges, so only the s coordinate remains.
    ScalarOpt r = golden_max([&](double s) { return value(s, 0.0); }, 0.0, 1.0,
                             coord_tol(cfg));
    p.value = std::max(0.0, r.f);
    p.converged = true;
    dw.s = r.x;
    dw.t = 0.0;
    p.dual_witness = dw;
    return p;
  }

  // Coarse box scan over (s, u = t/s), then simplex descent in logit space.
  const int kGrid = 17;
  double best = kNegInf, bs = 0.0, bu = 0.0;
  for (int i = 0; i < kGrid; ++i)
    for (int j = 0; j < kGrid; ++j) {
      double s = double(i) / (kGrid - 1), u = double(j) / (kGrid - 1);
      double v = value(s, u);
      if (v > best) {
        best = v;
        bs = s;
        bu = u;
      }
    }
  NelderMeadResult nr = nelder_mead(
      [&](const std::vector<double>& z) { return -value(sigma(z[0]), sigma(z[1])); },
      {logit(bs), logit(bu)}, {});
  double fs = sigma(nr.x[0]), fu = sigma(nr.x[1]);
  double refined = value(fs, fu);
  if (refined >= best) {
    p.value = std::max(0.0, refined);
    dw.s = fs;
    dw.t = fs * fu;
  } else {
    p.value = std::max(0.0, best);
    dw.s = bs;
    dw.t = bs * bu;
  }
  p.converged = nr.converged;
  p.dual_witness = dw;
  return p;
}

TradeoffPoint fr_variable_mismatched(const SourceModel& model,
                                     const ConditionalPmf& p_prime, double e0,
                                     const GallagerConfig& cfg) {
  if (!(e0 >= 0.0)) throw InputError("fr_variable_mismatched: e0 must be >= 0");
  LogModel lm = log_model(model);
  MismatchedLogs ml = mismatched_logs(model, p_prime);

  // Search over s in (0,1], u = t/s in [0,1] (pinned to 0 when the decoder
  // law misses source support), and mu = lambda/s >= 0 compactified through
  // mtilde = mu/(1+mu); the auxiliary law is solved innermost.
  auto w_solve = [&](double s, double u, double mu) -> WSolve {
    double t = s * u;
    std::vector<double> lw_buf;
    auto f_at = [&](const std::vector<double>& w) {
      lw_buf.resize(w.size());
      for (std::size_t i = 0; i < w.size(); ++i)
        lw_buf[i] = w[i] > 0.0 ? std::log(w[i]) : kNegInf;
      return mm_variable_raw(lm, ml, e0, s, t, mu * s, lw_buf);
    };
    if (mu == 0.0) {
      std::vector<double> w(lm.nx, 1.0 / double(lm.nx));
      return WSolve{w, f_at(w)};
    }
    return maximize_over_pmf(f_at, lm.nx, cfg, 0x57a276u);
  };
  auto value = [&](double s, double u, double mtilde) {
    if (s <= 0.0) return 0.0;
    return w_solve(s, u, mtilde / (1.0 - mtilde)).f;
  };

  const int kS = 9, kU = 9, kM = 9;
  double best = kNegInf, bs = 0.5, bu = 0.0, bm = 0.0;
  for (int i = 0; i < kS; ++i)
    for (int j = 0; j < (ml.support_violation ? 1 : kU); ++j)
      for (int k = 0; k < kM; ++k) {
        double s = double(i) / (kS - 1);
        double u = double(j) / (kU - 1);
        double mt = 0.96 * double(k) / (kM - 1);
        double v = value(s, u, mt);
        if (v > best) {
          best = v;
          bs = s;
          bu = u;
          bm = mt;
        }
      }

  auto neg = [&](const std::vector<double>& z) {
    double u = ml.support_violation ? 0.0 : sigma(z[1]);
    return -value(sigma(z[0]), u, 0.999 * sigma(z[2]));
  };
  NelderMeadResult nr =
      nelder_mead(neg, {logit(bs), logit(bu), logit(bm / 0.999)}, {});
  double fs = sigma(nr.x[0]);
  double fu = ml.support_violation ? 0.0 : sigma(nr.x[1]);
  double fm = 0.999 * sigma(nr.x[2]);

  TradeoffPoint p;
  p.e0 = e0;
  p.solver_tag = "gallager-variable-mismatched";
  p.converged = nr.converged;
  DualWitness dw;
  double refined = value(fs, fu, fm);
  double sfin, ufin, mfin;
  if (refined >= best) {
    p.value = std::max(0.0, refined);
    sfin = fs;
    ufin = fu;
    mfin = fm;
  } else {
    p.value = std::max(0.0, best);
    sfin = bs;
    ufin = bu;
    mfin = bm;
  }
  double mu = mfin / (1.0 - mfin);
  dw.s = sfin;
  dw.t = sfin * ufin;
  dw.lambda = mu * sfin;
  if (sfin > 0.0) dw.w = Pmf(model.px().alphabet(), w_solve(sfin, ufin, mu).w);
  p.dual_witness = dw;
  return p;
}

}  // namespace bioexp
