#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "capeval/core.hpp"

namespace capeval {

inline constexpr int kMaxOrder = 4;

/// n-gram multisets for n = 1..4. Keys join tokens with U+001F.
struct NGramProfile {
  std::array<std::map<std::string, int>, kMaxOrder> counts;
  std::size_t length = 0;

  static NGramProfile of(const Sentence& s);
  /// Number of n-gram occurrences of order n (1-based): max(0, length - n + 1).
  int total(int n) const;
};

/// Document frequencies over per-image reference groups.
class IdfTable {
public:
  static IdfTable build(std::span<const std::vector<Sentence>> reference_groups);

  std::size_t doc_count() const { return doc_count_; }
  /// log(doc_count / max(1, df(g))); zero when the corpus has a single document.
  double idf(const std::string& gram) const;
  std::size_t df(const std::string& gram) const;
  bool degenerate() const { return doc_count_ <= 1; }

private:
  std::map<std::string, std::size_t> df_;
  std::size_t doc_count_ = 0;
};

/// Sufficient statistics for corpus BLEU.
struct BleuStats {
  std::array<double, kMaxOrder> matched{};
  std::array<double, kMaxOrder> total{};
  double candidate_length = 0.0;
  double reference_length = 0.0;

  BleuStats& operator+=(const BleuStats& o);
  /// Unsmoothed BLEU-4 in [0, 1].
  double score() const;
};

/// Clipped n-gram matches against the references and the closest reference
/// length (ties toward the shorter reference).
BleuStats bleu_stats(const Sentence& candidate, std::span<const Sentence> references);

/// Corpus BLEU-4 x100. Each candidate needs at least one reference.
double bleu4_corpus(std::span<const Sentence> candidates, std::span<const std::vector<Sentence>> references);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// Sentence ROUGE-L x100: LCS F-measure with beta = 1.2, max over references.
double rouge_l(const Sentence& candidate, std::span<const Sentence> references);

/// Sentence CIDEr x100: per order, mean cosine of TF-IDF vectors against each
/// reference; averaged over orders 1..4.
double cider(const Sentence& candidate, std::span<const Sentence> references, const IdfTable& idf);

struct MeteorAlignment {
  int matches = 0;
  int chunks = 0;
};

/// Exact-match unigram alignment with the most matches and, among those, the fewest chunks.
/// A chunk is a run of matches adjacent in the candidate whose reference positions are adjacent too.
MeteorAlignment meteor_align(const Sentence& candidate, const Sentence& reference);

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

double meteor_score(const MeteorAlignment& al, std::size_t candidate_len, std::size_t reference_len,
                    const MeteorParams& p = {});

/// Exact-match METEOR x100, max over references.
double meteor_exact(const Sentence& candidate, std::span<const Sentence> references, const MeteorParams& p = {});

}  // namespace capeval
