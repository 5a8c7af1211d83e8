#include "pa/iet.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "pa/error.hpp"

namespace pa {

char side_letter(Side s) { return s == Side::Top ? 't' : 'b'; }

Side side_from_letter(char c) {
  if (c == 't' || c == 'T') return Side::Top;
  if (c == 'b' || c == 'B') return Side::Bottom;
  throw Error(ErrorCode::InvalidArgument, std::string("move letter must be t or b, got '") + c + "'");
}

void IetCombinatorics::validate() const {
  const int n = d();
  if (n < 2 || static_cast<int>(bottom.size()) != n) throw Error(ErrorCode::InvalidArgument, "rows must have equal length >= 2");
  for (const auto* row : {&top, &bottom}) {
    std::vector<int> s = *row;
    std::sort(s.begin(), s.end());
    for (int i = 0; i < n; ++i)
      if (s[i] != i) throw Error(ErrorCode::InvalidArgument, "rows must be permutations of 0..d-1");
  }
}

bool IetCombinatorics::irreducible() const {
  std::vector<int> pb(d());
  for (int i = 0; i < d(); ++i) pb[bottom[i]] = i;
  int reach = -1;
  for (int k = 0; k + 1 < d(); ++k) {
    reach = std::max(reach, pb[top[k]]);
    if (reach == k) return false;
  }
  return true;
}

namespace {

// Position of each label in a row.
std::vector<int> positions(const std::vector<int>& row) {
  std::vector<int> pos(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) pos[row[i]] = static_cast<int>(i);
  return pos;
}

// Permutation on positions 1..d: top position -> bottom position, extended by 0 and d+1.
std::vector<int> monodromy(const IetCombinatorics& c) {
  const int n = c.d();
  const auto pb = positions(c.bottom);
  std::vector<int> p(n + 2);
  p[0] = 0;
  p[n + 1] = n + 1;
  for (int i = 0; i < n; ++i) p[i + 1] = pb[c.top[i]] + 1;
  return p;
}

}  // namespace

int IetCombinatorics::genus() const {
  const int n = d();
  const auto pt = positions(top), pb = positions(bottom);
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (pt[a] < pt[b] && pb[a] > pb[b]) omega(a, b) = 1;
      if (pt[a] > pt[b] && pb[a] < pb[b]) omega(a, b) = -1;
    }
  return static_cast<int>(Eigen::FullPivLU<Eigen::MatrixXd>(omega).rank()) / 2;
}

std::vector<int> IetCombinatorics::cone_angles() const {
  const int n = d();
  const auto p = monodromy(*this);
  std::vector<int> inv(n + 2);
  for (int i = 0; i <= n + 1; ++i) inv[p[i]] = i;
  // Endpoint successor map on {0..d}.
  std::vector<int> sigma(n + 1);
  for (int j = 0; j <= n; ++j) {
    if (j == 0) sigma[j] = inv[1] - 1;
    else if (j == inv[n]) sigma[j] = n;
    else sigma[j] = inv[p[j] + 1] - 1;
  }
  std::vector<char> seen(n + 1, 0);
  std::vector<int> angles;
  for (int start = 0; start <= n; ++start) {
    if (seen[start]) continue;
    int len = 0;
    bool has_zero = false;
    for (int j = start; !seen[j]; j = sigma[j]) {
      seen[j] = 1;
      ++len;
      has_zero |= (j == 0);
    }
    angles.push_back(has_zero ? len - 2 : len);
  }
  return angles;
}

nlohmann::json IetCombinatorics::to_json() const { return {{"top", top}, {"bottom", bottom}}; }

IetCombinatorics IetCombinatorics::from_json(const nlohmann::json& j) {
  IetCombinatorics c;
  c.top = j.at("top").get<std::vector<int>>();
  c.bottom = j.at("bottom").get<std::vector<int>>();
  c.validate();
  return c;
}

std::string IetCombinatorics::to_string() const {
  std::ostringstream os;
  for (int v : top) os << v << ' ';
  os << '/';
  for (int v : bottom) os << ' ' << v;
  return os.str();
}

RauzyMove rauzy_move(const IetCombinatorics& c, Side winner) {
  const int n = c.d();
  const int a = c.top.back(), b = c.bottom.back();
  RauzyMove m{c, IntegerMatrix::identity(n)};
  if (winner == Side::Top) {
    auto& row = m.next.bottom;
    row.pop_back();
    row.insert(std::find(row.begin(), row.end(), a) + 1, b);
    m.elementary(a, b) = 1;
  } else {
    auto& row = m.next.top;
    row.pop_back();
    row.insert(std::find(row.begin(), row.end(), b) + 1, a);
    m.elementary(b, a) = 1;
  }
  return m;
}

Side rauzy_winner(const IetCombinatorics& c, const FieldVector& lengths) {
  const int cmp = (lengths[c.top.back()] - lengths[c.bottom.back()]).sign();
  if (cmp == 0) throw Error(ErrorCode::TieBreakUndefined, "last top and bottom intervals have equal length");
  return cmp > 0 ? Side::Top : Side::Bottom;
}

RauzyStep rauzy_step(const IetCombinatorics& c, const FieldVector& lengths, Side side) {
  if (static_cast<int>(lengths.size()) != c.d()) throw Error(ErrorCode::InvalidArgument, "length vector size != d");
  if (rauzy_winner(c, lengths) != side)
    throw Error(ErrorCode::WrongSide, std::string("requested side '") + side_letter(side) + "' loses");
  RauzyMove m = rauzy_move(c, side);
  FieldVector next = lengths;
  const int a = c.top.back(), b = c.bottom.back();
  if (side == Side::Top) next[a] -= lengths[b];
  else next[b] -= lengths[a];
  return {std::move(m.next), std::move(next), std::move(m.elementary)};
}

}  // namespace pa
