#include "bioexp/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bioexp {

namespace {

constexpr double kNegativeDust = -1e-15;
constexpr double kSumTolerance = 1e-9;

// Shared validation for probability vectors: zero out negative dust, reject
// real negatives and bad sums, then rescale to an exact unit sum.
std::vector<double> sanitize(std::vector<double> p, const char* what) {
  double sum = 0.0;
  for (double& v : p) {
    if (v < 0.0) {
      if (v < kNegativeDust)
        throw std::invalid_argument(std::string(what) + ": negative entry");
      v = 0.0;
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw std::invalid_argument(std::string(what) + ": entries do not sum to 1");
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace

Alphabet Alphabet::indexed(const std::string& prefix, std::size_t k) {
  Alphabet a;
  a.labels.reserve(k);
  for (std::size_t i = 0; i < k; ++i) a.labels.push_back(prefix + std::to_string(i));
  return a;
}

bool operator==(const Alphabet& a, const Alphabet& b) { return a.labels == b.labels; }

Pmf::Pmf(Alphabet alphabet, std::vector<double> p) : alphabet_(std::move(alphabet)) {
  if (alphabet_.size() == 0) throw std::invalid_argument("Pmf: empty alphabet");
  if (p.size() != alphabet_.size())
    throw std::invalid_argument("Pmf: size mismatch with alphabet");
  p_ = sanitize(std::move(p), "Pmf");
}

Pmf Pmf::uniform(Alphabet alphabet) {
  std::size_t k = alphabet.size();
  return Pmf(std::move(alphabet), std::vector<double>(k, 1.0 / double(k)));
}

Pmf Pmf::point_mass(Alphabet alphabet, std::size_t i) {
  std::size_t k = alphabet.size();
  if (i >= k) throw std::invalid_argument("Pmf: point mass index out of range");
  std::vector<double> p(k, 0.0);
  p[i] = 1.0;
  return Pmf(std::move(alphabet), std::move(p));
}

JointPmf::JointPmf(Alphabet x, Alphabet y, std::vector<double> row_major)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() == 0 || y_.size() == 0)
    throw std::invalid_argument("JointPmf: empty alphabet");
  if (row_major.size() != x_.size() * y_.size())
    throw std::invalid_argument("JointPmf: size mismatch with alphabets");
  p_ = sanitize(std::move(row_major), "JointPmf");
}

JointPmf::JointPmf(Alphabet x, Alphabet y, const std::vector<std::vector<double>>& rows)
    : JointPmf(std::move(x), std::move(y), [&] {
        std::vector<double> flat;
        for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
        return flat;
      }()) {}

Pmf JointPmf::x_marginal() const {
  std::vector<double> m(nx(), 0.0);
  for (std::size_t i = 0; i < nx(); ++i)
    for (std::size_t j = 0; j < ny(); ++j) m[i] += at(i, j);
  return Pmf(x_, std::move(m));
}

Pmf JointPmf::y_marginal() const {
  std::vector<double> m(ny(), 0.0);
  for (std::size_t i = 0; i < nx(); ++i)
    for (std::size_t j = 0; j < ny(); ++j) m[j] += at(i, j);
  return Pmf(y_, std::move(m));
}

ConditionalPmf::ConditionalPmf(Alphabet given, Alphabet out, std::vector<Pmf> rows,
                               std::vector<bool> degenerate)
    : given_(std::move(given)), out_(std::move(out)), rows_(std::move(rows)),
      degenerate_(std::move(degenerate)) {
  if (rows_.size() != given_.size())
    throw std::invalid_argument("ConditionalPmf: one row per conditioning symbol");
  for (const Pmf& r : rows_)
    if (r.size() != out_.size())
      throw std::invalid_argument("ConditionalPmf: row size mismatch");
  if (degenerate_.empty()) degenerate_.assign(rows_.size(), false);
  if (degenerate_.size() != rows_.size())
    throw std::invalid_argument("ConditionalPmf: degenerate mask size mismatch");
}

namespace {

ConditionalPmf condition_on_cols(const JointPmf& j, const Pmf& py) {
  std::vector<Pmf> rows;
  std::vector<bool> degenerate;
  for (std::size_t y = 0; y < j.ny(); ++y) {
    if (py[y] > 0.0) {
      std::vector<double> r(j.nx());
      for (std::size_t x = 0; x < j.nx(); ++x) r[x] = j.at(x, y) / py[y];
      rows.emplace_back(j.x_alphabet(), std::move(r));
      degenerate.push_back(false);
    } else {
      rows.push_back(Pmf::uniform(j.x_alphabet()));
      degenerate.push_back(true);
    }
  }
  return ConditionalPmf(j.y_alphabet(), j.x_alphabet(), std::move(rows),
                        std::move(degenerate));
}

ConditionalPmf condition_on_rows(const JointPmf& j, const Pmf& px) {
  std::vector<Pmf> rows;
  std::vector<bool> degenerate;
  for (std::size_t x = 0; x < j.nx(); ++x) {
    if (px[x] > 0.0) {
      std::vector<double> r(j.ny());
      for (std::size_t y = 0; y < j.ny(); ++y) r[y] = j.at(x, y) / px[x];
      rows.emplace_back(j.y_alphabet(), std::move(r));
      degenerate.push_back(false);
    } else {
      rows.push_back(Pmf::uniform(j.y_alphabet()));
      degenerate.push_back(true);
    }
  }
  return ConditionalPmf(j.x_alphabet(), j.y_alphabet(), std::move(rows),
                        std::move(degenerate));
}

}  // namespace

SourceModel::SourceModel(JointPmf joint)
    : joint_(std::move(joint)),
      px_(joint_.x_marginal()),
      py_(joint_.y_marginal()),
      x_given_y_(condition_on_cols(joint_, py_)),
      y_given_x_(condition_on_rows(joint_, px_)) {}

std::uint64_t SimplexGrid::point_count(std::size_t cells, unsigned resolution) {
  // C(m + k - 1, k - 1), saturating at uint64 max.
  unsigned __int128 acc = 1;
  for (std::size_t i = 1; i < cells; ++i) {
    acc = acc * (resolution + i) / i;
    if (acc > (unsigned __int128)UINT64_MAX) return UINT64_MAX;
  }
  return (std::uint64_t)acc;
}

SimplexGrid::SimplexGrid(Alphabet alphabet, unsigned resolution, std::uint64_t max_points)
    : alphabet_(std::move(alphabet)), m_(resolution) {
  std::size_t k = alphabet_.size();
  if (k == 0) throw std::invalid_argument("SimplexGrid: empty alphabet");
  if (m_ == 0) throw std::invalid_argument("SimplexGrid: resolution must be positive");
  std::uint64_t total = point_count(k, m_);
  if (total > max_points)
    throw std::invalid_argument("SimplexGrid: point count exceeds cap");
  counts_.reserve(total);
  std::vector<unsigned> c(k, 0);
  // Lexicographic enumeration over count vectors.
  auto rec = [&](auto&& self, std::size_t cell, unsigned left) -> void {
    if (cell + 1 == k) {
      c[cell] = left;
      counts_.push_back(c);
      return;
    }
    for (unsigned v = 0; v <= left; ++v) {
      c[cell] = v;
      self(self, cell + 1, left - v);
    }
  };
  rec(rec, 0, m_);
}

Pmf SimplexGrid::point(std::size_t i) const {
  const auto& c = counts_[i];
  std::vector<double> p(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) p[j] = double(c[j]) / double(m_);
  return Pmf(alphabet_, std::move(p));
}

std::size_t SimplexGrid::index_of(const std::vector<unsigned>& counts) const {
  if (counts.size() != alphabet_.size())
    throw std::invalid_argument("SimplexGrid: wrong cell count");
  unsigned sum = 0;
  for (unsigned c : counts) sum += c;
  if (sum != m_) throw std::invalid_argument("SimplexGrid: counts do not sum to m");
  std::size_t idx = 0;
  unsigned left = m_;
  std::size_t k = counts.size();
  for (std::size_t cell = 0; cell + 1 < k; ++cell) {
    for (unsigned v = 0; v < counts[cell]; ++v)
      idx += point_count(k - cell - 1, left - v);
    left -= counts[cell];
  }
  return idx;
}

double entropy(const Pmf& p) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  return h;
}

namespace {

ExtReal divergence_flat(const std::vector<double>& q, const std::vector<double>& p) {
  double d = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] > 0.0) {
      if (p[i] <= 0.0) return ExtReal::pos_inf();
      d += q[i] * std::log(q[i] / p[i]);
    }
  }
  return ExtReal(d);
}

}  // namespace

ExtReal divergence(const Pmf& q, const Pmf& p) {
  if (q.size() != p.size()) throw std::invalid_argument("divergence: size mismatch");
  return divergence_flat(q.probs(), p.probs());
}

ExtReal divergence(const JointPmf& q, const JointPmf& p) {
  if (q.nx() != p.nx() || q.ny() != p.ny())
    throw std::invalid_argument("divergence: shape mismatch");
  return divergence_flat(q.flat(), p.flat());
}

double joint_entropy(const JointPmf& q) {
  double h = 0.0;
  for (double v : q.flat())
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double conditional_entropy(const JointPmf& q) {
  return joint_entropy(q) - entropy(q.y_marginal());
}

double mutual_information(const JointPmf& q) {
  return entropy(q.x_marginal()) + entropy(q.y_marginal()) - joint_entropy(q);
}

ExtReal weighted_divergence(const ConditionalPmf& q_cond, const ConditionalPmf& p_cond,
                            const Pmf& q_marg) {
  if (q_cond.rows() != p_cond.rows() || q_cond.rows() != q_marg.size())
    throw std::invalid_argument("weighted_divergence: shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < q_marg.size(); ++i) {
    if (q_marg[i] <= 0.0) continue;
    ExtReal d = divergence(q_cond.row(i), p_cond.row(i));
    if (!d.finite()) return ExtReal::pos_inf();
    total += q_marg[i] * d.value();
  }
  return ExtReal(total);
}

ExtReal expected_log_loss(const Pmf& q, const Pmf& p) {
  if (q.size() != p.size())
    throw std::invalid_argument("expected_log_loss: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] > 0.0) {
      if (p[i] <= 0.0) return ExtReal::pos_inf();
      s -= q[i] * std::log(p[i]);
    }
  }
  return ExtReal(s);
}

}  // namespace bioexp
