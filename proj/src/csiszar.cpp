#include "bioexp/csiszar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "bioexp/errors.hpp"
#include "bioexp/optim.hpp"
#include "bioexp/parallel.hpp"
#include "simplex_solve.hpp"

namespace bioexp {

namespace {

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

// Joint support layout: the optimization runs over supp(P_XY) only, since
// any mass placed elsewhere makes the divergence term infinite.
struct JointSupport {
  std::vector<std::size_t> xs, ys;  // per support cell
  std::vector<double> log_pxy;
  std::vector<double> log_px;  // ln P_X(x) at the cell's x
  std::size_t nx = 0, ny = 0;
};

JointSupport joint_support(const SourceModel& model) {
  JointSupport s;
  s.nx = model.nx();
  s.ny = model.ny();
  for (std::size_t x = 0; x < s.nx; ++x)
    for (std::size_t y = 0; y < s.ny; ++y)
      if (model.joint().at(x, y) > 0.0) {
        s.xs.push_back(x);
        s.ys.push_back(y);
        s.log_pxy.push_back(std::log(model.joint().at(x, y)));
        s.log_px.push_back(std::log(model.px()[x]));
      }
  return s;
}

// Statistics of a support-restricted joint q needed by both FR objectives.
struct JointStats {
  double div = 0.0;        // D(Q||P_XY)
  double h_x_given_y = 0.0;
  double exp_log_loss = 0.0;  // E_Q ln 1/P_X
  double div_x = 0.0;      // D(Q_X||P_X)
};

JointStats joint_stats(const JointSupport& s, const SourceModel& model,
                       const std::vector<double>& q) {
  JointStats st;
  double h_xy = 0.0;
  std::vector<double> my(s.ny, 0.0), mx(s.nx, 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    double v = q[i];
    my[s.ys[i]] += v;
    mx[s.xs[i]] += v;
    st.exp_log_loss -= v * s.log_px[i];
    if (v > 0.0) {
      double lv = std::log(v);
      st.div += v * (lv - s.log_pxy[i]);
      h_xy -= v * lv;
    }
  }
  double h_y = 0.0;
  for (double v : my)
    if (v > 0.0) h_y -= v * std::log(v);
  st.h_x_given_y = h_xy - h_y;
  for (std::size_t x = 0; x < s.nx; ++x)
    if (mx[x] > 0.0) st.div_x += mx[x] * (std::log(mx[x]) - std::log(model.px()[x]));
  return st;
}

JointPmf expand_witness(const JointSupport& s, const SourceModel& model,
                        const std::vector<double>& q) {
  std::vector<double> flat(s.nx * s.ny, 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) flat[s.xs[i] * s.ny + s.ys[i]] = q[i];
  return JointPmf(model.joint().x_alphabet(), model.joint().y_alphabet(), flat);
}

// Conservative objective Lipschitz constant on the grid (L1 geometry):
// divergence and entropy gradients are bounded by ln(m) plus the largest
// |ln P| over the support, with a hinge doubling the entropy part.
double lipschitz_bound(const std::vector<double>& log_p, unsigned m) {
  double lp = 0.0;
  for (double v : log_p) lp = std::max(lp, std::abs(v));
  return 2.0 * (std::log(double(std::max(2u, m))) + lp + 2.0);
}

detail::SimplexSolveOptions to_solver_options(const PrimalOptions& o) {
  detail::SimplexSolveOptions so;
  so.grid_resolution = o.grid_resolution;
  so.preferred_resolution = o.preferred_resolution;
  so.max_grid_points = o.max_grid_points;
  so.refine_starts = o.refine_starts;
  so.refine = o.refine;
  return so;
}

}  // namespace

FaExponentResult fa_exponent(const SourceModel& model, FixedRates rates,
                             const PrimalOptions& opts) {
  if (!(rates.r_w >= 0.0) || !(rates.r_s >= 0.0))
    throw InputError("fa_exponent: rates must be >= 0");

  std::vector<std::size_t> sup;
  std::vector<double> log_px;
  for (std::size_t x = 0; x < model.nx(); ++x)
    if (model.px()[x] > 0.0) {
      sup.push_back(x);
      log_px.push_back(std::log(model.px()[x]));
    }

  auto objective = [&](const std::vector<double>& q) {
    double div = 0.0, h = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i] > 0.0) {
        double lv = std::log(q[i]);
        div += q[i] * (lv - log_px[i]);
        h -= q[i] * lv;
      }
    }
    return div + std::min(rates.r_s, positive_part(h - rates.r_w));
  };

  detail::SimplexSolveOptions so = to_solver_options(opts);
  if (so.grid_resolution == 0)
    so.grid_resolution = detail::auto_resolution(sup.size(), 2000, so.max_grid_points);
  detail::SimplexMin r = detail::minimize_on_simplex(sup.size(), objective, {}, so);

  std::vector<double> full(model.nx(), 0.0);
  for (std::size_t i = 0; i < sup.size(); ++i) full[sup[i]] = r.q[i];
  return FaExponentResult{
      r.value, Pmf(model.px().alphabet(), full),
      lipschitz_bound(log_px, r.grid_m) * 2.0 / double(r.grid_m)};
}

TradeoffPoint fr_fixed_primal(const SourceModel& model, double e0,
                              const PrimalOptions& opts) {
  if (!(e0 >= 0.0)) throw InputError("fr_fixed_primal: e0 must be >= 0");
  double rw = max_helper_rate_fixed(model, e0, opts.helper_rate).value;
  JointSupport s = joint_support(model);

  auto objective = [&](const std::vector<double>& q) {
    JointStats st = joint_stats(s, model, q);
    return st.div + positive_part(rw - st.h_x_given_y);
  };
  detail::SimplexMin r =
      detail::minimize_on_simplex(s.log_pxy.size(), objective, {}, to_solver_options(opts));

  TradeoffPoint p;
  p.e0 = e0;
  p.value = r.value;
  p.solver_tag = "csiszar-fixed";
  p.error_bound = lipschitz_bound(s.log_pxy, r.grid_m) * 2.0 / double(r.grid_m);
  p.converged = r.converged;
  p.q_witness = expand_witness(s, model, r.q);
  return p;
}

TradeoffPoint fr_variable_primal(const SourceModel& model, double e0,
                                 const PrimalOptions& opts) {
  if (!(e0 >= 0.0)) throw InputError("fr_variable_primal: e0 must be >= 0");
  JointSupport s = joint_support(model);

  TradeoffPoint p;
  p.e0 = e0;
  p.solver_tag = "csiszar-variable";

  if (e0 == 0.0) {
    // The marginal constraint pins Q_X = P_X exactly; optimize the
    // conditional rows only. E_Q ln 1/P_X is then H(P_X), a constant.
    double h_px = entropy(model.px());
    std::vector<std::size_t> live_x;
    for (std::size_t x = 0; x < model.nx(); ++x)
      if (model.px()[x] > 0.0) live_x.push_back(x);
    std::size_t blocks = live_x.size();
    std::size_t ny = model.ny();

    auto assemble = [&](const std::vector<double>& z) {
      // One softmax block of ny logits per live x row.
      std::vector<double> q(s.log_pxy.size(), 0.0);
      for (std::size_t b = 0; b < blocks; ++b) {
        std::vector<double> logits(z.begin() + b * ny, z.begin() + (b + 1) * ny);
        std::vector<double> row = softmax(logits);
        for (std::size_t i = 0; i < s.log_pxy.size(); ++i)
          if (s.xs[i] == live_x[b]) q[i] = model.px()[live_x[b]] * row[s.ys[i]];
      }
      return q;
    };
    auto objective_q = [&](const std::vector<double>& q) {
      JointStats st = joint_stats(s, model, q);
      // Mass on cells outside supp(P_XY) never arises here: q is assembled
      // on support cells only, but a conditional row may put weight on a y
      // that the row's P(.|x) excludes; penalize through the divergence.
      return st.div + positive_part(h_px - st.h_x_given_y);
    };
    auto objective_z = [&](const std::vector<double>& z) { return objective_q(assemble(z)); };

    // Seeds: the true conditional rows, uniform rows, and a few spread
    // starts from a fixed stream.
    std::vector<std::vector<double>> seeds;
    {
      std::vector<double> z(blocks * ny, 0.0);
      for (std::size_t b = 0; b < blocks; ++b) {
        const Pmf& row = model.y_given_x().row(live_x[b]);
        std::vector<double> zr = softmax_seed(row.probs(), 1e-9);
        std::copy(zr.begin(), zr.end(), z.begin() + b * ny);
      }
      seeds.push_back(z);
      seeds.push_back(std::vector<double>(blocks * ny, 0.0));
      std::mt19937_64 rng(0xb10e58u);
      for (int k = 0; k < 6; ++k) {
        std::vector<double> zr(blocks * ny);
        for (std::size_t b = 0; b < blocks; ++b) {
          std::vector<double> row = dirichlet1(rng, ny);
          std::vector<double> zb = softmax_seed(row, 1e-9);
          std::copy(zb.begin(), zb.end(), zr.begin() + b * ny);
        }
        seeds.push_back(zr);
      }
    }
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_q;
    bool converged = false;
    for (const auto& z0 : seeds) {
      NelderMeadResult nr = nelder_mead(objective_z, z0, {});
      if (nr.f < best) {
        best = nr.f;
        best_q = assemble(nr.x);
        converged = nr.converged;
      }
    }
    p.value = objective_q(best_q);
    p.converged = converged;
    p.error_bound = 1e-6;  // multi-start local refinement, no grid mesh
    p.q_witness = expand_witness(s, model, best_q);
    return p;
  }

  auto objective = [&](const std::vector<double>& q) {
    JointStats st = joint_stats(s, model, q);
    return st.div + positive_part(st.exp_log_loss - e0 - st.h_x_given_y);
  };
  auto constraint = [&](const std::vector<double>& q) {
    return joint_stats(s, model, q).div_x - e0;
  };
  detail::SimplexMin r = detail::minimize_on_simplex(s.log_pxy.size(), objective,
                                                     constraint, to_solver_options(opts));
  p.value = r.value;
  p.converged = r.converged && r.violation <= 1e-9;
  p.error_bound =
      lipschitz_bound(s.log_pxy, r.grid_m) * 2.0 / double(r.grid_m) + 10.0 * r.violation;
  p.q_witness = expand_witness(s, model, r.q);
  return p;
}

std::vector<SweepRow> sweep_primal(const SourceModel& model, const CurveSpec& spec,
                                   const PrimalOptions& opts) {
  if (spec.steps < 1) throw InputError("sweep_primal: steps must be >= 1");
  if (!(spec.e0_min >= 0.0) || !(spec.e0_max >= spec.e0_min))
    throw InputError("sweep_primal: need 0 <= e0_min <= e0_max");
  std::vector<SweepRow> rows(spec.steps);
  parallel_for(spec.steps, [&](std::size_t i) {
    double e0 = spec.steps == 1
                    ? spec.e0_min
                    : spec.e0_min + (spec.e0_max - spec.e0_min) * double(i) /
                                        double(spec.steps - 1);
    rows[i].e0 = e0;
    if (spec.mode != TradeMode::Variable) rows[i].fixed = fr_fixed_primal(model, e0, opts);
    if (spec.mode != TradeMode::Fixed)
      rows[i].variable = fr_variable_primal(model, e0, opts);
  });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto check = [&](const std::optional<TradeoffPoint>& a,
                     const std::optional<TradeoffPoint>& b, const char* tag) {
      if (a && b && b->value > a->value + 1e-6)
        throw NumericalConsistencyError(
            std::string("sweep_primal: ") + tag + " curve is not non-increasing");
    };
    check(rows[i - 1].fixed, rows[i].fixed, "fixed");
    check(rows[i - 1].variable, rows[i].variable, "variable");
  }
  return rows;
}

}  // namespace bioexp
