#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bioexp/extreal.hpp"
#include "bioexp/prob.hpp"
#include "bioexp/rates.hpp"

namespace bioexp {

// Exact small-blocklength simulation of the enrollment/authentication
// protocol: random bin maps over the full sequence space, stochastic
// posterior-sampling decoders, and the helper-only attack.

enum class Regime { Fixed, Variable };

// Score function a(.) of the joint empirical distribution that tilts the
// stochastic decoder's posterior.
struct DecodingMetric {
  enum class Kind { Map, Likelihood, Mismatched, MinEntropy, VariableOptimal };

  Kind kind = Kind::Map;
  double beta = 1.0;
  std::optional<ConditionalPmf> p_prime;        // Mismatched
  std::optional<RateFunctionTable> rate_table;  // VariableOptimal

  static DecodingMetric map();
  static DecodingMetric likelihood(double beta);
  static DecodingMetric mismatched(ConditionalPmf p, double beta = 1.0);
  static DecodingMetric min_entropy(double beta);
  static DecodingMetric variable_optimal(RateFunctionTable table);

  std::string tag() const;  // canonical short description for reports
};

// One draw of the random bin maps. Helper and secret indices are stored as
// a local index within the sequence's type plus per-type global offsets, so
// variable-rate codes (type-dependent bin counts) and fixed-rate codes (all
// offsets zero) share one representation.
struct CodeRealization {
  unsigned n = 1;
  Regime regime = Regime::Fixed;
  std::uint64_t seed = 0;

  // Per-type layout, in the enumeration order of the blocklength-n type
  // lattice over the X alphabet.
  std::vector<std::uint64_t> w_count, s_count;   // bins per type
  std::vector<std::uint64_t> w_base, s_base;     // global index offsets
  std::vector<std::uint64_t> entry_base;         // offsets into flat (w,s) tables
  std::uint64_t total_w = 0, total_s = 0, total_entries = 0;

  // Per enumerated sequence (base-|X| integer encoding, digit 0 = position 0).
  std::vector<std::uint32_t> type_of;
  std::vector<std::uint32_t> f_local, g_local;

  std::uint64_t w_global(std::size_t x_index) const {
    return w_base[type_of[x_index]] + f_local[x_index];
  }
  std::uint64_t s_global(std::size_t x_index) const {
    return s_base[type_of[x_index]] + g_local[x_index];
  }
  std::uint64_t entry(std::size_t x_index) const {
    std::uint32_t t = type_of[x_index];
    return entry_base[t] + std::uint64_t(f_local[x_index]) * s_count[t] +
           g_local[x_index];
  }
};

inline constexpr std::uint64_t kMaxExactSequences = 1ull << 24;
inline constexpr std::uint64_t kMaxBinTableEntries = 1ull << 24;

// Fixed-rate draw: one bin-count pair for every type.
CodeRealization draw_code(const SourceModel& model, unsigned n,
                          const FixedRates& rates, std::uint64_t seed);
// Variable-rate draw: the table's grid must be the blocklength-n type
// lattice; infeasible types get one bin per sequence of the type.
CodeRealization draw_code(const SourceModel& model, unsigned n,
                          const RateFunctionTable& table, std::uint64_t seed);
// Hand-built fixed-rate code for enumeration fixtures; maps are 0-based.
CodeRealization fixture_code(const SourceModel& model, unsigned n,
                             std::uint64_t w_bins, std::uint64_t s_bins,
                             std::vector<std::uint32_t> f,
                             std::vector<std::uint32_t> g);

struct PosteriorResult {
  Pmf posterior;        // over the secret indices of the helper bin's type
  bool empty_bin = false;
};

// Decoder posterior over secret indices given an observation sequence and a
// global helper index. Empty helper bins yield the uniform law plus a flag.
PosteriorResult gld_posterior(const SourceModel& model,
                              const CodeRealization& code,
                              const DecodingMetric& metric,
                              const std::vector<unsigned>& y_seq,
                              std::uint64_t w_global);

// Pr{decoded secret != true secret}, exact sum over all sequence pairs.
double fr_probability_exact(const SourceModel& model,
                            const CodeRealization& code,
                            const DecodingMetric& metric);

// Pr{helper-only attack estimates the true secret}, exact; ties toward the
// lowest secret index.
double fa_probability_exact(const SourceModel& model,
                            const CodeRealization& code);

struct AuditResult {
  std::uint64_t bins_checked = 0;
  std::uint64_t failures = 0;  // bins with no observation realizing the guess
};

// For every realized helper bin, exhaustively search for an observation
// sequence that makes the decoder's modal output equal the attacker's guess.
AuditResult imposter_audit(const SourceModel& model, const CodeRealization& code,
                           const DecodingMetric& metric);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double half_width() const { return 0.5 * (hi - lo); }
};

struct SimReport {
  unsigned n = 1;
  unsigned num_codes = 1;
  bool exact = true;  // per-code probabilities are exact sums, not sampled
  Regime regime = Regime::Fixed;
  std::uint64_t seed = 0;
  std::string metric_tag;

  double p_fr = 0.0, p_fa = 0.0;       // ensemble averages over codes
  Interval fr_ci, fa_ci;               // bootstrap 95% percentile intervals
  ExtReal fr_exponent{0.0}, fa_exponent{0.0};  // -(1/n) ln of the averages
  Interval fr_exponent_ci, fa_exponent_ci;     // transformed interval

  std::vector<double> per_code_fr, per_code_fa;
};

// Averages exact per-code probabilities over independently seeded codes and
// attaches nonparametric bootstrap intervals (1000 resamples).
SimReport ensemble_estimate(const SourceModel& model, unsigned n,
                            const FixedRates& rates,
                            const DecodingMetric& metric, unsigned num_codes,
                            std::uint64_t seed);
SimReport ensemble_estimate(const SourceModel& model, unsigned n,
                            const RateFunctionTable& table,
                            const DecodingMetric& metric, unsigned num_codes,
                            std::uint64_t seed);

}  // namespace bioexp
