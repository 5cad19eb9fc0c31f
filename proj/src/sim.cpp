#include "bioexp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "bioexp/errors.hpp"
#include "bioexp/optim.hpp"
#include "bioexp/parallel.hpp"

namespace bioexp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t pow_checked(std::uint64_t base, unsigned n, std::uint64_t cap,
                          const char* what) {
  std::uint64_t v = 1;
  for (unsigned i = 0; i < n; ++i) {
    if (v > cap / std::max<std::uint64_t>(base, 1))
      throw InputError(std::string(what) + ": sequence space exceeds exact-mode cap");
    v *= base;
  }
  if (v > cap)
    throw InputError(std::string(what) + ": sequence space exceeds exact-mode cap");
  return v;
}

// Uniform draw in [0, k) by rejection; k == 1 consumes no randomness.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t k) {
  if (k <= 1) return 0;
  std::uint64_t threshold = (0 - k) % k;  // 2^64 mod k
  for (;;) {
    std::uint64_t u = rng();
    if (u >= threshold) return u % k;
  }
}

std::uint64_t binom_u64(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// |T(Q)|: sequences of length n with the given symbol counts.
std::uint64_t multinomial(const std::vector<unsigned>& counts) {
  std::uint64_t total = 0, r = 1;
  for (unsigned c : counts) {
    total += c;
    r *= binom_u64(total, c);
  }
  return r;
}

std::uint64_t integer_bin_count(double rate, unsigned n) {
  double raw = std::exp(double(n) * rate);
  if (!(raw < 1e15))
    throw InputError("bin count overflows the exact-mode table");
  return std::max<std::uint64_t>(1, std::uint64_t(std::llround(raw)));
}

void finalize_layout(CodeRealization& code) {
  std::size_t types = code.w_count.size();
  code.w_base.assign(types, 0);
  code.s_base.assign(types, 0);
  code.entry_base.assign(types, 0);
  if (code.regime == Regime::Fixed) {
    code.total_w = code.w_count[0];
    code.total_s = code.s_count[0];
    code.total_entries = code.w_count[0] * code.s_count[0];
  } else {
    std::uint64_t w = 0, s = 0, e = 0;
    for (std::size_t t = 0; t < types; ++t) {
      code.w_base[t] = w;
      code.s_base[t] = s;
      code.entry_base[t] = e;
      w += code.w_count[t];
      s += code.s_count[t];
      e += code.w_count[t] * code.s_count[t];
    }
    code.total_w = w;
    code.total_s = s;
    code.total_entries = e;
  }
  if (code.total_entries > kMaxBinTableEntries)
    throw InputError("bin table too large for exact mode; lower the rates or n");
}

// Enumerates all sequences, recording each one's type-lattice index.
void fill_types(const SourceModel& model, unsigned n, const SimplexGrid& grid,
                CodeRealization& code) {
  std::size_t nx = model.nx();
  std::uint64_t total =
      pow_checked(nx, n, kMaxExactSequences, "type enumeration");
  code.type_of.assign(total, 0);
  std::vector<unsigned> counts(nx, 0);
  auto rec = [&](auto&& self, unsigned pos, std::uint64_t idx) -> void {
    if (pos == n) {
      code.type_of[idx] = std::uint32_t(grid.index_of(counts));
      return;
    }
    for (std::size_t d = 0; d < nx; ++d) {
      ++counts[d];
      self(self, pos + 1, idx * nx + d);
      --counts[d];
    }
  };
  rec(rec, 0, 0);
}

void draw_maps(CodeRealization& code) {
  std::mt19937_64 rng(code.seed);
  std::size_t total = code.type_of.size();
  code.f_local.assign(total, 0);
  code.g_local.assign(total, 0);
  for (std::size_t x = 0; x < total; ++x) {
    std::uint32_t t = code.type_of[x];
    code.f_local[x] = std::uint32_t(bounded(rng, code.w_count[t]));
    code.g_local[x] = std::uint32_t(bounded(rng, code.s_count[t]));
  }
}

void validate_metric(const SourceModel& model, unsigned n,
                     const DecodingMetric& metric) {
  switch (metric.kind) {
    case DecodingMetric::Kind::Map:
      break;
    case DecodingMetric::Kind::Likelihood:
    case DecodingMetric::Kind::MinEntropy:
      if (!(metric.beta > 0.0)) throw InputError("metric: beta must be > 0");
      break;
    case DecodingMetric::Kind::Mismatched:
      if (!(metric.beta > 0.0)) throw InputError("metric: beta must be > 0");
      if (!metric.p_prime) throw InputError("mismatched metric needs a law");
      if (!(metric.p_prime->given_alphabet() == model.py().alphabet()) ||
          !(metric.p_prime->out_alphabet() == model.px().alphabet()))
        throw InputError("mismatched law must condition on Y and emit X");
      break;
    case DecodingMetric::Kind::VariableOptimal:
      if (!metric.rate_table)
        throw InputError("variable-optimal metric needs a rate table");
      if (!(metric.rate_table->grid.alphabet() == model.px().alphabet()) ||
          metric.rate_table->grid.resolution() != n)
        throw InputError(
            "variable-optimal rate table must live on the blocklength-n type "
            "lattice of the X alphabet");
      break;
  }
}

// Per-type additive offset n*R_w(Q) of the variable-optimal score, using the
// same integerized bin counts as code drawing (so a constant table shifts
// the min-entropy score by an exact constant).
std::vector<double> variable_optimal_offsets(const DecodingMetric& metric,
                                             unsigned n) {
  const RateFunctionTable& table = *metric.rate_table;
  std::vector<double> off(table.grid.size(), 0.0);
  for (std::size_t i = 0; i < table.grid.size(); ++i) {
    std::uint64_t cnt = table.feasible(i)
                            ? integer_bin_count(table.r_w[i].value(), n)
                            : multinomial(table.grid.counts(i));
    off[i] = std::log(double(cnt));
  }
  return off;
}

// Everything precomputed for one (model, code, metric) evaluation pass.
struct EvalContext {
  const SourceModel* model = nullptr;
  const CodeRealization* code = nullptr;
  DecodingMetric::Kind kind = DecodingMetric::Kind::Map;
  double beta = 1.0;
  const ConditionalPmf* score_law = nullptr;  // likelihood or mismatched
  std::vector<double> type_nrw;               // variable-optimal offsets
  std::vector<double> klnk;                   // k ln k, k = 0..n
  std::size_t nx = 0, ny = 0;
  unsigned n = 0;
  std::uint64_t x_total = 0, y_total = 0;
};

EvalContext make_context(const SourceModel& model, const CodeRealization& code,
                         const DecodingMetric& metric) {
  validate_metric(model, code.n, metric);
  EvalContext cx;
  cx.model = &model;
  cx.code = &code;
  cx.kind = metric.kind;
  cx.beta = metric.beta;
  cx.nx = model.nx();
  cx.ny = model.ny();
  cx.n = code.n;
  cx.x_total = pow_checked(cx.nx, cx.n, kMaxExactSequences, "exact pass");
  cx.y_total = pow_checked(cx.ny, cx.n, kMaxExactSequences, "exact pass");
  if (code.type_of.size() != cx.x_total)
    throw InputError("code was drawn for a different model or blocklength");
  if (metric.kind == DecodingMetric::Kind::Likelihood)
    cx.score_law = &model.x_given_y();
  if (metric.kind == DecodingMetric::Kind::Mismatched)
    cx.score_law = &*metric.p_prime;
  if (metric.kind == DecodingMetric::Kind::VariableOptimal)
    cx.type_nrw = variable_optimal_offsets(metric, cx.n);
  cx.klnk.resize(cx.n + 1);
  cx.klnk[0] = 0.0;
  for (unsigned k = 1; k <= cx.n; ++k)
    cx.klnk[k] = double(k) * std::log(double(k));
  return cx;
}

void decode_digits(std::uint64_t idx, std::size_t base, unsigned n,
                   std::vector<unsigned>& digits) {
  digits.resize(n);
  for (unsigned pos = n; pos-- > 0;) {
    digits[pos] = unsigned(idx % base);
    idx /= base;
  }
}

// Fills, for one observation sequence, the joint sequence probability and
// (when the decoder is stochastic) the score exponent n*a of every x.
// A -inf exponent marks zero decoder weight.
void fill_leaf_tables(const EvalContext& cx, const std::vector<unsigned>& yd,
                      bool need_scores, std::vector<double>& exps,
                      std::vector<double>& pxy) {
  const SourceModel& model = *cx.model;
  unsigned n = cx.n;
  std::size_t nx = cx.nx, ny = cx.ny;

  // Per-position lookup tables for this y sequence.
  std::vector<double> pj(std::size_t(n) * nx);
  std::vector<double> inc(std::size_t(n) * nx, 0.0);
  bool incremental_score = cx.kind == DecodingMetric::Kind::Likelihood ||
                           cx.kind == DecodingMetric::Kind::Mismatched;
  for (unsigned pos = 0; pos < n; ++pos)
    for (std::size_t d = 0; d < nx; ++d) {
      pj[pos * nx + d] = model.joint().at(d, yd[pos]);
      if (incremental_score) {
        double v = cx.score_law->row(yd[pos])[d];
        inc[pos * nx + d] = v > 0.0 ? cx.beta * std::log(v) : kNegInf;
      }
    }

  // Column-entropy part of n*H(X|Y) is fixed by the y sequence alone.
  double nh_const = 0.0;
  {
    std::vector<unsigned> ycnt(ny, 0);
    for (unsigned pos = 0; pos < n; ++pos) ++ycnt[yd[pos]];
    for (std::size_t y = 0; y < ny; ++y) nh_const += cx.klnk[ycnt[y]];
  }

  std::vector<unsigned> joint_counts(nx * ny, 0);

  auto rec = [&](auto&& self, unsigned pos, std::uint64_t idx, double prob,
                 double lsum, double sum_clnc) -> void {
    if (pos == n) {
      pxy[idx] = prob;
      if (need_scores) {
        switch (cx.kind) {
          case DecodingMetric::Kind::Likelihood:
          case DecodingMetric::Kind::Mismatched:
            exps[idx] = lsum;
            break;
          case DecodingMetric::Kind::MinEntropy:
            exps[idx] = -cx.beta * (nh_const - sum_clnc);
            break;
          case DecodingMetric::Kind::VariableOptimal:
            exps[idx] =
                cx.type_nrw[cx.code->type_of[idx]] - (nh_const - sum_clnc);
            break;
          case DecodingMetric::Kind::Map:
            // Bayes weights: the joint probability itself (normalization
            // over the bin cancels in the posterior).
            exps[idx] = prob > 0.0 ? std::log(prob) : kNegInf;
            break;
        }
      }
      return;
    }
    for (std::size_t d = 0; d < nx; ++d) {
      std::size_t cell = d * ny + yd[pos];
      unsigned c = joint_counts[cell];
      double delta = cx.klnk[c + 1] - cx.klnk[c];
      ++joint_counts[cell];
      self(self, pos + 1, idx * nx + d, prob * pj[pos * nx + d],
           lsum + inc[pos * nx + d], sum_clnc + delta);
      --joint_counts[cell];
    }
  };
  rec(rec, 0, 0, 1.0, 0.0, 0.0);
}

// Stamp-reset accumulation tables sized once per code.
struct ScratchTables {
  std::vector<double> nmax, nacc;  // online log-sum-exp per (w,s) entry
  std::vector<double> amat;        // plain sums per (w,s) entry
  std::vector<std::uint32_t> estamp;
  std::vector<double> zmax, zacc, wbest;  // per global helper index
  std::vector<std::uint32_t> wstamp;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> touched;  // (entry, w)
  std::vector<std::uint64_t> touched_w;
  std::uint32_t epoch = 0;

  explicit ScratchTables(const CodeRealization& code)
      : nmax(code.total_entries),
        nacc(code.total_entries),
        amat(code.total_entries),
        estamp(code.total_entries, 0),
        zmax(code.total_w),
        zacc(code.total_w),
        wbest(code.total_w),
        wstamp(code.total_w, 0) {}
};

double logsumexp_pair(double m, double acc) {
  return m == kNegInf ? kNegInf : m + std::log(acc);
}

void lse_update(double& m, double& acc, double e) {
  if (e == kNegInf) return;
  if (e <= m) {
    acc += std::exp(e - m);
  } else {
    acc = acc * std::exp(m - e) + 1.0;
    m = e;
  }
}

}  // namespace

DecodingMetric DecodingMetric::map() { return DecodingMetric{}; }

DecodingMetric DecodingMetric::likelihood(double beta) {
  DecodingMetric m;
  m.kind = Kind::Likelihood;
  m.beta = beta;
  return m;
}

DecodingMetric DecodingMetric::mismatched(ConditionalPmf p, double beta) {
  DecodingMetric m;
  m.kind = Kind::Mismatched;
  m.beta = beta;
  m.p_prime = std::move(p);
  return m;
}

DecodingMetric DecodingMetric::min_entropy(double beta) {
  DecodingMetric m;
  m.kind = Kind::MinEntropy;
  m.beta = beta;
  return m;
}

DecodingMetric DecodingMetric::variable_optimal(RateFunctionTable table) {
  DecodingMetric m;
  m.kind = Kind::VariableOptimal;
  m.rate_table = std::move(table);
  return m;
}

std::string DecodingMetric::tag() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Map: return "map";
    case Kind::Likelihood: os << "gld:" << beta; break;
    case Kind::Mismatched: os << "mismatched:" << beta; break;
    case Kind::MinEntropy: os << "minent:" << beta; break;
    case Kind::VariableOptimal: return "varopt";
  }
  return os.str();
}

CodeRealization draw_code(const SourceModel& model, unsigned n,
                          const FixedRates& rates, std::uint64_t seed) {
  if (n < 1) throw InputError("draw_code: n must be >= 1");
  if (!(rates.r_w >= 0.0) || !(rates.r_s >= 0.0))
    throw InputError("draw_code: rates must be >= 0");
  CodeRealization code;
  code.n = n;
  code.regime = Regime::Fixed;
  code.seed = seed;
  SimplexGrid grid(model.px().alphabet(), n);
  std::uint64_t w = integer_bin_count(rates.r_w, n);
  std::uint64_t s = integer_bin_count(rates.r_s, n);
  code.w_count.assign(grid.size(), w);
  code.s_count.assign(grid.size(), s);
  finalize_layout(code);
  fill_types(model, n, grid, code);
  draw_maps(code);
  return code;
}

CodeRealization draw_code(const SourceModel& model, unsigned n,
                          const RateFunctionTable& table, std::uint64_t seed) {
  if (n < 1) throw InputError("draw_code: n must be >= 1");
  if (!(table.grid.alphabet() == model.px().alphabet()) ||
      table.grid.resolution() != n)
    throw InputError(
        "draw_code: rate table must live on the blocklength-n type lattice");
  CodeRealization code;
  code.n = n;
  code.regime = Regime::Variable;
  code.seed = seed;
  std::size_t types = table.grid.size();
  code.w_count.resize(types);
  code.s_count.resize(types);
  for (std::size_t i = 0; i < types; ++i) {
    code.s_count[i] = integer_bin_count(table.r_s[i], n);
    code.w_count[i] = table.feasible(i)
                          ? integer_bin_count(table.r_w[i].value(), n)
                          : multinomial(table.grid.counts(i));
  }
  finalize_layout(code);
  fill_types(model, n, table.grid, code);
  draw_maps(code);
  return code;
}

CodeRealization fixture_code(const SourceModel& model, unsigned n,
                             std::uint64_t w_bins, std::uint64_t s_bins,
                             std::vector<std::uint32_t> f,
                             std::vector<std::uint32_t> g) {
  if (n < 1) throw InputError("fixture_code: n must be >= 1");
  if (w_bins < 1 || s_bins < 1)
    throw InputError("fixture_code: bin counts must be >= 1");
  CodeRealization code;
  code.n = n;
  code.regime = Regime::Fixed;
  code.seed = 0;
  SimplexGrid grid(model.px().alphabet(), n);
  code.w_count.assign(grid.size(), w_bins);
  code.s_count.assign(grid.size(), s_bins);
  finalize_layout(code);
  fill_types(model, n, grid, code);
  if (f.size() != code.type_of.size() || g.size() != code.type_of.size())
    throw InputError("fixture_code: maps must cover every sequence");
  for (std::size_t x = 0; x < f.size(); ++x)
    if (f[x] >= w_bins || g[x] >= s_bins)
      throw InputError("fixture_code: map value out of range");
  code.f_local = std::move(f);
  code.g_local = std::move(g);
  return code;
}

PosteriorResult gld_posterior(const SourceModel& model,
                              const CodeRealization& code,
                              const DecodingMetric& metric,
                              const std::vector<unsigned>& y_seq,
                              std::uint64_t w_global) {
  EvalContext cx = make_context(model, code, metric);
  if (y_seq.size() != code.n)
    throw InputError("gld_posterior: observation length mismatch");
  for (unsigned d : y_seq)
    if (d >= cx.ny) throw InputError("gld_posterior: symbol out of range");
  if (w_global >= code.total_w)
    throw InputError("gld_posterior: helper index out of range");

  // Identify the type owning this helper index (all types coincide in the
  // fixed regime).
  std::size_t t = 0;
  if (code.regime == Regime::Variable) {
    auto it = std::upper_bound(code.w_base.begin(), code.w_base.end(), w_global);
    t = std::size_t(it - code.w_base.begin()) - 1;
  }
  std::uint64_t s_bins = code.s_count[t];

  std::vector<double> exps(cx.x_total), pxy(cx.x_total);
  fill_leaf_tables(cx, y_seq, true, exps, pxy);

  std::vector<double> smax(s_bins, kNegInf), sacc(s_bins, 0.0);
  bool empty = true;
  for (std::uint64_t x = 0; x < cx.x_total; ++x) {
    if (code.w_global(x) != w_global) continue;
    empty = false;
    lse_update(smax[code.g_local[x]], sacc[code.g_local[x]], exps[x]);
  }
  double zm = kNegInf, za = 0.0;
  for (std::uint64_t s = 0; s < s_bins; ++s)
    lse_update(zm, za, logsumexp_pair(smax[s], sacc[s]));
  double log_z = logsumexp_pair(zm, za);

  Alphabet secrets = Alphabet::indexed("s", std::size_t(s_bins));
  if (empty || log_z == kNegInf)
    return PosteriorResult{Pmf::uniform(secrets), true};
  std::vector<double> probs(s_bins, 0.0);
  for (std::uint64_t s = 0; s < s_bins; ++s) {
    double ln = logsumexp_pair(smax[s], sacc[s]);
    probs[s] = ln == kNegInf ? 0.0 : std::exp(ln - log_z);
  }
  return PosteriorResult{Pmf(secrets, probs), false};
}

double fr_probability_exact(const SourceModel& model,
                            const CodeRealization& code,
                            const DecodingMetric& metric) {
  EvalContext cx = make_context(model, code, metric);
  ScratchTables st(code);
  std::vector<double> exps(cx.x_total), pxy(cx.x_total);
  std::vector<unsigned> yd;
  bool map_rule = metric.kind == DecodingMetric::Kind::Map;

  double correct = 0.0;
  for (std::uint64_t yi = 0; yi < cx.y_total; ++yi) {
    decode_digits(yi, cx.ny, cx.n, yd);
    bool dead = false;
    for (unsigned pos = 0; pos < cx.n; ++pos)
      if (model.py()[yd[pos]] <= 0.0) dead = true;
    if (dead) continue;  // zero joint mass: contributes nothing

    fill_leaf_tables(cx, yd, !map_rule, exps, pxy);
    ++st.epoch;
    st.touched.clear();
    st.touched_w.clear();

    if (map_rule) {
      // Deterministic rule: output the secret with the largest bin-joint
      // mass; credit is the per-helper maximum.
      for (std::uint64_t x = 0; x < cx.x_total; ++x) {
        if (pxy[x] <= 0.0) continue;
        std::uint64_t e = code.entry(x);
        if (st.estamp[e] != st.epoch) {
          st.estamp[e] = st.epoch;
          st.amat[e] = 0.0;
          st.touched.emplace_back(e, code.w_global(x));
        }
        st.amat[e] += pxy[x];
      }
      for (const auto& [e, w] : st.touched) {
        if (st.wstamp[w] != st.epoch) {
          st.wstamp[w] = st.epoch;
          st.wbest[w] = 0.0;
          st.touched_w.push_back(w);
        }
        st.wbest[w] = std::max(st.wbest[w], st.amat[e]);
      }
      for (std::uint64_t w : st.touched_w) correct += st.wbest[w];
      continue;
    }

    // Stochastic rule: accumulate score mass per (helper, secret) pair,
    // normalize per helper, then credit the true pair's posterior.
    for (std::uint64_t x = 0; x < cx.x_total; ++x) {
      if (exps[x] == kNegInf) continue;
      std::uint64_t e = code.entry(x);
      if (st.estamp[e] != st.epoch) {
        st.estamp[e] = st.epoch;
        st.nmax[e] = kNegInf;
        st.nacc[e] = 0.0;
        st.touched.emplace_back(e, code.w_global(x));
      }
      lse_update(st.nmax[e], st.nacc[e], exps[x]);
    }
    for (const auto& [e, w] : st.touched) {
      if (st.wstamp[w] != st.epoch) {
        st.wstamp[w] = st.epoch;
        st.zmax[w] = kNegInf;
        st.zacc[w] = 0.0;
        st.touched_w.push_back(w);
      }
      lse_update(st.zmax[w], st.zacc[w], logsumexp_pair(st.nmax[e], st.nacc[e]));
    }
    for (std::uint64_t x = 0; x < cx.x_total; ++x) {
      if (pxy[x] <= 0.0) continue;
      std::uint64_t e = code.entry(x);
      // Zero decoder weight on the true pair's secret counts as an error.
      if (st.estamp[e] != st.epoch) continue;
      std::uint64_t w = code.w_global(x);
      double log_n = logsumexp_pair(st.nmax[e], st.nacc[e]);
      double log_z = logsumexp_pair(st.zmax[w], st.zacc[w]);
      if (log_n == kNegInf || log_z == kNegInf) continue;
      correct += pxy[x] * std::exp(log_n - log_z);
    }
  }
  return std::min(1.0, std::max(0.0, 1.0 - correct));
}

double fa_probability_exact(const SourceModel& model,
                            const CodeRealization& code) {
  std::size_t nx = model.nx();
  std::uint64_t x_total =
      pow_checked(nx, code.n, kMaxExactSequences, "exact pass");
  if (code.type_of.size() != x_total)
    throw InputError("code was drawn for a different model or blocklength");

  ScratchTables st(code);
  ++st.epoch;
  auto rec = [&](auto&& self, unsigned pos, std::uint64_t idx,
                 double prob) -> void {
    if (pos == code.n) {
      std::uint64_t e = code.entry(idx);
      if (st.estamp[e] != st.epoch) {
        st.estamp[e] = st.epoch;
        st.amat[e] = 0.0;
        st.touched.emplace_back(e, code.w_global(idx));
      }
      st.amat[e] += prob;
      return;
    }
    for (std::size_t d = 0; d < nx; ++d)
      self(self, pos + 1, idx * nx + d, prob * model.px()[d]);
  };
  rec(rec, 0, 0, 1.0);

  for (const auto& [e, w] : st.touched) {
    if (st.wstamp[w] != st.epoch) {
      st.wstamp[w] = st.epoch;
      st.wbest[w] = 0.0;
      st.touched_w.push_back(w);
    }
    st.wbest[w] = std::max(st.wbest[w], st.amat[e]);
  }
  double p = 0.0;
  for (std::uint64_t w : st.touched_w) p += st.wbest[w];
  return std::min(1.0, std::max(0.0, p));
}

AuditResult imposter_audit(const SourceModel& model, const CodeRealization& code,
                           const DecodingMetric& metric) {
  EvalContext cx = make_context(model, code, metric);
  if (cx.x_total > (1u << 16) || cx.y_total > (1u << 16))
    throw InputError("imposter_audit: exhaustive search capped at 2^16 sequences");

  // Attacker guesses per realized helper bin: the secret with the largest
  // prior bin mass, ties toward the lowest local index; an all-zero bin
  // (every sequence in it has zero probability) defaults to index 0.
  struct Slot {
    std::uint64_t w = 0;
    std::uint32_t guess = 0;
    std::uint64_t s_bins = 0;
    std::size_t scratch_base = 0;
    bool found = false;
    double best_mass = 0.0;
    bool any = false;
  };
  std::unordered_map<std::uint64_t, std::size_t> slot_of;
  std::vector<Slot> slots;
  {
    std::vector<unsigned> xd;
    for (std::uint64_t x = 0; x < cx.x_total; ++x) {
      std::uint64_t w = code.w_global(x);
      auto [it, fresh] = slot_of.try_emplace(w, slots.size());
      if (fresh) {
        Slot s;
        s.w = w;
        s.s_bins = code.s_count[code.type_of[x]];
        slots.push_back(s);
      }
      Slot& sl = slots[it->second];
      decode_digits(x, cx.nx, cx.n, xd);
      double p = 1.0;
      for (unsigned pos = 0; pos < cx.n; ++pos) p *= model.px()[xd[pos]];
      std::uint32_t s = code.g_local[x];
      if (!sl.any || p > sl.best_mass || (p == sl.best_mass && s < sl.guess)) {
        sl.best_mass = p;
        sl.guess = s;
        sl.any = true;
      }
    }
    for (Slot& sl : slots)
      if (sl.best_mass <= 0.0) sl.guess = 0;
  }
  std::sort(slots.begin(), slots.end(),
            [](const Slot& a, const Slot& b) { return a.w < b.w; });
  slot_of.clear();
  std::size_t scratch_total = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    slots[i].scratch_base = scratch_total;
    scratch_total += std::size_t(slots[i].s_bins);
    slot_of[slots[i].w] = i;
  }

  // One pass per candidate observation; every unresolved bin's modal output
  // is evaluated from the shared score table.
  std::vector<double> exps(cx.x_total), pxy(cx.x_total);
  std::vector<double> smax(scratch_total), sacc(scratch_total);
  std::vector<std::uint32_t> sstamp(scratch_total, 0);
  std::vector<std::vector<std::uint32_t>> touched(slots.size());
  std::vector<unsigned> yd;
  std::uint32_t epoch = 0;
  std::size_t unresolved = slots.size();

  for (std::uint64_t yi = 0; yi < cx.y_total && unresolved > 0; ++yi) {
    decode_digits(yi, cx.ny, cx.n, yd);
    fill_leaf_tables(cx, yd, true, exps, pxy);
    ++epoch;
    for (auto& t : touched) t.clear();
    for (std::uint64_t x = 0; x < cx.x_total; ++x) {
      std::size_t si = slot_of[code.w_global(x)];
      Slot& sl = slots[si];
      if (sl.found) continue;
      std::size_t cell = sl.scratch_base + code.g_local[x];
      if (sstamp[cell] != epoch) {
        sstamp[cell] = epoch;
        smax[cell] = kNegInf;
        sacc[cell] = 0.0;
        touched[si].push_back(code.g_local[x]);
      }
      lse_update(smax[cell], sacc[cell], exps[x]);
    }
    for (std::size_t si = 0; si < slots.size(); ++si) {
      Slot& sl = slots[si];
      if (sl.found || touched[si].empty()) continue;
      // Modal decoder output: largest per-secret score mass, ties toward
      // the lowest local index; a weightless bin falls back to index 0.
      std::sort(touched[si].begin(), touched[si].end());
      double best_ln = kNegInf;
      std::uint32_t modal = 0;
      bool has = false;
      for (std::uint32_t s : touched[si]) {
        double ln = logsumexp_pair(smax[sl.scratch_base + s],
                                   sacc[sl.scratch_base + s]);
        if (ln == kNegInf) continue;
        if (!has || ln > best_ln) {
          best_ln = ln;
          modal = s;
          has = true;
        }
      }
      if (!has) modal = 0;
      if (modal == sl.guess) {
        sl.found = true;
        --unresolved;
      }
    }
  }

  AuditResult out;
  out.bins_checked = slots.size();
  for (const Slot& sl : slots)
    if (!sl.found) ++out.failures;
  return out;
}

namespace {

SimReport ensemble_core(const SourceModel& model, const CodeRealization& base,
                        const DecodingMetric& metric, unsigned num_codes,
                        std::uint64_t seed) {
  if (num_codes < 1) throw InputError("ensemble_estimate: need num_codes >= 1");
  SimReport rep;
  rep.n = base.n;
  rep.num_codes = num_codes;
  rep.regime = base.regime;
  rep.seed = seed;
  rep.metric_tag = metric.tag();
  rep.per_code_fr.assign(num_codes, 0.0);
  rep.per_code_fa.assign(num_codes, 0.0);

  parallel_for(num_codes, [&](std::size_t c) {
    CodeRealization code = base;
    code.seed = split_seed(seed, c);
    draw_maps(code);
    rep.per_code_fr[c] = fr_probability_exact(model, code, metric);
    rep.per_code_fa[c] = fa_probability_exact(model, code);
  });

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
  };
  rep.p_fr = mean(rep.per_code_fr);
  rep.p_fa = mean(rep.per_code_fa);

  // Percentile bootstrap over codes; deterministic resampling stream.
  const int kResamples = 1000;
  std::mt19937_64 rng(split_seed(seed, 1ull << 62));
  std::vector<double> bfr(kResamples), bfa(kResamples);
  for (int b = 0; b < kResamples; ++b) {
    double sfr = 0.0, sfa = 0.0;
    for (unsigned i = 0; i < num_codes; ++i) {
      std::uint64_t j = bounded(rng, num_codes);
      sfr += rep.per_code_fr[j];
      sfa += rep.per_code_fa[j];
    }
    bfr[b] = sfr / num_codes;
    bfa[b] = sfa / num_codes;
  }
  std::sort(bfr.begin(), bfr.end());
  std::sort(bfa.begin(), bfa.end());
  rep.fr_ci = Interval{bfr[24], bfr[975]};
  rep.fa_ci = Interval{bfa[24], bfa[975]};

  auto exponent = [&](double p) {
    return p > 0.0 ? ExtReal(-std::log(p) / double(rep.n)) : ExtReal::pos_inf();
  };
  rep.fr_exponent = exponent(rep.p_fr);
  rep.fa_exponent = exponent(rep.p_fa);
  auto exp_d = [&](double p) {
    return p > 0.0 ? -std::log(p) / double(rep.n)
                   : std::numeric_limits<double>::infinity();
  };
  rep.fr_exponent_ci = Interval{exp_d(rep.fr_ci.hi), exp_d(rep.fr_ci.lo)};
  rep.fa_exponent_ci = Interval{exp_d(rep.fa_ci.hi), exp_d(rep.fa_ci.lo)};
  return rep;
}

}  // namespace

SimReport ensemble_estimate(const SourceModel& model, unsigned n,
                            const FixedRates& rates,
                            const DecodingMetric& metric, unsigned num_codes,
                            std::uint64_t seed) {
  CodeRealization base = draw_code(model, n, rates, seed);
  return ensemble_core(model, base, metric, num_codes, seed);
}

SimReport ensemble_estimate(const SourceModel& model, unsigned n,
                            const RateFunctionTable& table,
                            const DecodingMetric& metric, unsigned num_codes,
                            std::uint64_t seed) {
  CodeRealization base = draw_code(model, n, table, seed);
  return ensemble_core(model, base, metric, num_codes, seed);
}

}  // namespace bioexp
