#include "bioexp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bioexp {

ScalarOpt golden_min(const std::function<double(double)>& f, double a, double b,
                     double x_tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > x_tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  ScalarOpt best{x1, f1};
  if (f2 < best.f) best = {x2, f2};
  // The optimum can sit exactly on an endpoint of the original interval.
  double fa = f(a), fb = f(b);
  if (fa < best.f) best = {a, fa};
  if (fb < best.f) best = {b, fb};
  return best;
}

ScalarOpt golden_max(const std::function<double(double)>& f, double a, double b,
                     double x_tol) {
  ScalarOpt r = golden_min([&](double x) { return -f(x); }, a, b, x_tol);
  return {r.x, -r.f};
}

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const NelderMeadOptions& opts) {
  const std::size_t n = x0.size();
  NelderMeadResult out;
  out.x = x0;
  if (n == 0) {
    out.f = f(x0);
    out.converged = true;
    out.evaluations = 1;
    return out;
  }

  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += opts.initial_step;
  int evals = 0;
  for (std::size_t i = 0; i <= n; ++i) fv[i] = (++evals, f(pts[i]));

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
  };

  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    sort_simplex();
    std::size_t best = order[0], worst = order[n], second = order[n - 1];

    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      spread = std::max(spread, std::abs(pts[worst][i] - pts[best][i]));
    if (spread < opts.x_tol && std::abs(fv[worst] - fv[best]) < opts.f_tol) {
      out.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
    }
    for (std::size_t j = 0; j < n; ++j) centroid[j] /= double(n);

    for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + (centroid[j] - pts[worst][j]);
    double fr = (++evals, f(xr));

    if (fr < fv[best]) {
      for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + 2.0 * (centroid[j] - pts[worst][j]);
      double fe = (++evals, f(xe));
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
    } else {
      bool outside = fr < fv[worst];
      const std::vector<double>& toward = outside ? xr : pts[worst];
      for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] + 0.5 * (toward[j] - centroid[j]);
      double fc = (++evals, f(xc));
      if (fc < (outside ? fr : fv[worst])) {
        pts[worst] = xc;
        fv[worst] = fc;
      } else {
        // Shrink toward the best vertex.
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < n; ++j)
            pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
          fv[i] = (++evals, f(pts[i]));
        }
      }
    }
  }

  sort_simplex();
  out.x = pts[order[0]];
  out.f = fv[order[0]];
  out.evaluations = evals;
  return out;
}

std::vector<double> softmax(const std::vector<double>& z) {
  double zmax = -std::numeric_limits<double>::infinity();
  for (double v : z) zmax = std::max(zmax, v);
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> softmax_seed(const std::vector<double>& p, double floor) {
  std::vector<double> z(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) z[i] = std::log(std::max(p[i], floor));
  double z0 = z[0];
  for (double& v : z) v -= z0;
  return z;
}

std::vector<double> dirichlet1(std::mt19937_64& rng, std::size_t k) {
  // Normalized unit exponentials.
  std::vector<double> p(k);
  double sum = 0.0;
  for (double& v : p) {
    // Inversion keeps this reproducible across standard libraries.
    double u = double(rng() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    v = -std::log(u);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over the combined stream id.
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace bioexp
