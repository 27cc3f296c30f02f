#include "cmabgfn/distance.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "cmabgfn/errors.hpp"

namespace cmabgfn {

int levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<int> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int up = row[j];
      const int sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({sub, up + 1, row[j - 1] + 1});
      diag = up;
    }
  }
  return row[b.size()];
}

int hamming(std::string_view a, std::string_view b) {
  require(a.size() == b.size(), ErrorKind::kLengthMismatch,
          "hamming distance needs equal lengths");
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

double multiset_jaccard(std::span<const int> a, std::span<const int> b,
                        int vocab) {
  std::vector<int> ca(vocab, 0), cb(vocab, 0);
  for (int x : a) ++ca.at(x);
  for (int x : b) ++cb.at(x);
  long inter = 0, uni = 0;
  for (int v = 0; v < vocab; ++v) {
    inter += std::min(ca[v], cb[v]);
    uni += std::max(ca[v], cb[v]);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double multiset_jaccard_sorted(std::span<const int> a, std::span<const int> b) {
  std::size_t i = 0, j = 0;
  long inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const long uni = static_cast<long>(a.size() + b.size()) - inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace cmabgfn
