#pragma once

#include <span>
#include <string_view>

namespace cmabgfn {

// Unit-cost edit distance (insert, delete, substitute).
int levenshtein(std::string_view a, std::string_view b);

// Requires equal lengths; throws kLengthMismatch otherwise.
int hamming(std::string_view a, std::string_view b);

// Multiset Jaccard index sum(min)/sum(max) over block ids in [0, vocab).
// Two empty multisets are identical (1.0).
double multiset_jaccard(std::span<const int> a, std::span<const int> b,
                        int vocab);

// Same index for two ascending-sorted id lists, without a vocabulary table.
double multiset_jaccard_sorted(std::span<const int> a, std::span<const int> b);

}  // namespace cmabgfn
