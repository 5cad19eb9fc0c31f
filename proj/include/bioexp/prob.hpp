#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bioexp/extreal.hpp"

namespace bioexp {

// All information quantities are in nats.

struct Alphabet {
  std::vector<std::string> labels;

  std::size_t size() const { return labels.size(); }

  // Labels "prefix0", "prefix1", ... for a k-ary alphabet.
  static Alphabet indexed(const std::string& prefix, std::size_t k);
};

bool operator==(const Alphabet& a, const Alphabet& b);

// Probability vector over an alphabet. Entries are clamped to [0,1] at
// construction (tiny negative dust up to -1e-15 is zeroed), must sum to 1
// within 1e-9, and are renormalized so downstream sums are exact.
class Pmf {
 public:
  Pmf(Alphabet alphabet, std::vector<double> p);

  static Pmf uniform(Alphabet alphabet);
  static Pmf point_mass(Alphabet alphabet, std::size_t i);

  const Alphabet& alphabet() const { return alphabet_; }
  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& probs() const { return p_; }

 private:
  Alphabet alphabet_;
  std::vector<double> p_;
};

// Joint distribution over X x Y, stored row-major with x as the row index.
class JointPmf {
 public:
  JointPmf(Alphabet x, Alphabet y, std::vector<double> row_major);
  JointPmf(Alphabet x, Alphabet y, const std::vector<std::vector<double>>& rows);

  const Alphabet& x_alphabet() const { return x_; }
  const Alphabet& y_alphabet() const { return y_; }
  std::size_t nx() const { return x_.size(); }
  std::size_t ny() const { return y_.size(); }
  double at(std::size_t ix, std::size_t iy) const { return p_[ix * y_.size() + iy]; }
  const std::vector<double>& flat() const { return p_; }

  Pmf x_marginal() const;
  Pmf y_marginal() const;

 private:
  Alphabet x_, y_;
  std::vector<double> p_;
};

// One pmf over `out` per symbol of `given`. Rows whose conditioning symbol
// has zero mass in the source joint are uniform placeholders and flagged.
class ConditionalPmf {
 public:
  ConditionalPmf(Alphabet given, Alphabet out, std::vector<Pmf> rows,
                 std::vector<bool> degenerate = {});

  const Alphabet& given_alphabet() const { return given_; }
  const Alphabet& out_alphabet() const { return out_; }
  const Pmf& row(std::size_t i) const { return rows_[i]; }
  bool degenerate(std::size_t i) const { return degenerate_[i]; }
  std::size_t rows() const { return rows_.size(); }

 private:
  Alphabet given_, out_;
  std::vector<Pmf> rows_;
  std::vector<bool> degenerate_;
};

// Memoryless source (X, Y) ~ P_XY with cached marginals and conditionals.
class SourceModel {
 public:
  explicit SourceModel(JointPmf joint);

  const JointPmf& joint() const { return joint_; }
  const Pmf& px() const { return px_; }
  const Pmf& py() const { return py_; }
  const ConditionalPmf& x_given_y() const { return x_given_y_; }
  const ConditionalPmf& y_given_x() const { return y_given_x_; }
  std::size_t nx() const { return joint_.nx(); }
  std::size_t ny() const { return joint_.ny(); }

 private:
  JointPmf joint_;
  Pmf px_, py_;
  ConditionalPmf x_given_y_, y_given_x_;
};

// All compositions (c_0,...,c_{k-1}) of `resolution` into k parts, i.e. the
// type lattice at denominator m. Points are enumerated in lexicographic
// order of the count vectors and materialized on demand.
class SimplexGrid {
 public:
  // Throws when the point count would exceed `max_points`.
  SimplexGrid(Alphabet alphabet, unsigned resolution,
              std::uint64_t max_points = 1u << 24);

  const Alphabet& alphabet() const { return alphabet_; }
  unsigned resolution() const { return m_; }
  std::size_t size() const { return counts_.size(); }
  const std::vector<unsigned>& counts(std::size_t i) const { return counts_[i]; }
  Pmf point(std::size_t i) const;
  // Index of a count vector in enumeration order; throws if it is not a
  // composition of `resolution`.
  std::size_t index_of(const std::vector<unsigned>& counts) const;

  static std::uint64_t point_count(std::size_t cells, unsigned resolution);

 private:
  Alphabet alphabet_;
  unsigned m_;
  std::vector<std::vector<unsigned>> counts_;
};

// --- information measures (nats) ---

double entropy(const Pmf& p);
ExtReal divergence(const Pmf& q, const Pmf& p);
ExtReal divergence(const JointPmf& q, const JointPmf& p);
double joint_entropy(const JointPmf& q);
// H(X|Y): entropy of the row variable given the column variable.
double conditional_entropy(const JointPmf& q);
double mutual_information(const JointPmf& q);
// sum_x q_marg(x) D(q_cond(.|x) || p_cond(.|x)); zero-weight rows are skipped.
ExtReal weighted_divergence(const ConditionalPmf& q_cond,
                            const ConditionalPmf& p_cond, const Pmf& q_marg);
// E_Q[ln 1/P(X)] = H(Q) + D(Q||P); +inf when Q puts mass off supp(P).
ExtReal expected_log_loss(const Pmf& q, const Pmf& p);

}  // namespace bioexp
