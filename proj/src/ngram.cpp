#include "capeval/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <tuple>

namespace capeval {
namespace {

constexpr char kSep = '\x1f';

std::string join(std::span<const std::string> toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += kSep;
    out += toks[i];
  }
  return out;
}

}  // namespace

NGramProfile NGramProfile::of(const Sentence& s) {
  NGramProfile p;
  const auto& t = s.tokens();
  p.length = t.size();
  for (int n = 1; n <= kMaxOrder; ++n)
    for (std::size_t i = 0; i + n <= t.size(); ++i)
      ++p.counts[n - 1][join(std::span(t).subspan(i, n))];
  return p;
}

int NGramProfile::total(int n) const { return std::max(0, static_cast<int>(length) - n + 1); }

IdfTable IdfTable::build(std::span<const std::vector<Sentence>> groups) {
  IdfTable t;
  t.doc_count_ = groups.size();
  for (const auto& refs : groups) {
    std::set<std::string> seen;
    for (const auto& r : refs) {
      const auto p = NGramProfile::of(r);
      for (const auto& order : p.counts)
        for (const auto& [g, c] : order) seen.insert(g);
    }
    for (const auto& g : seen) ++t.df_[g];
  }
  return t;
}

std::size_t IdfTable::df(const std::string& gram) const {
  auto it = df_.find(gram);
  return it == df_.end() ? 0 : it->second;
}

double IdfTable::idf(const std::string& gram) const {
  if (doc_count_ == 0) return 0.0;
  const double df = static_cast<double>(std::max<std::size_t>(1, this->df(gram)));
  return std::max(0.0, std::log(static_cast<double>(doc_count_) / df));
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (int n = 0; n < kMaxOrder; ++n) {
    matched[n] += o.matched[n];
    total[n] += o.total[n];
  }
  candidate_length += o.candidate_length;
  reference_length += o.reference_length;
  return *this;
}

double BleuStats::score() const {
  double log_sum = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (total[n] <= 0.0 || matched[n] <= 0.0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
  }
  const double bp = std::min(0.0, 1.0 - reference_length / candidate_length);
  return std::exp(log_sum / kMaxOrder + bp);
}

BleuStats bleu_stats(const Sentence& candidate, std::span<const Sentence> references) {
  if (references.empty()) throw ConfigError("BLEU needs at least one reference");
  BleuStats st;
  const auto cand = NGramProfile::of(candidate);
  std::array<std::map<std::string, int>, kMaxOrder> max_ref;
  std::size_t closest = references.front().size();
  const auto c_len = static_cast<long>(candidate.size());
  for (const auto& ref : references) {
    const auto p = NGramProfile::of(ref);
    for (int n = 0; n < kMaxOrder; ++n)
      for (const auto& [g, c] : p.counts[n]) {
        int& slot = max_ref[n][g];
        slot = std::max(slot, c);
      }
    const long diff = std::labs(static_cast<long>(ref.size()) - c_len);
    const long best = std::labs(static_cast<long>(closest) - c_len);
    if (diff < best || (diff == best && ref.size() < closest)) closest = ref.size();
  }
  for (int n = 0; n < kMaxOrder; ++n) {
    st.total[n] = cand.total(n + 1);
    for (const auto& [g, c] : cand.counts[n]) {
      auto it = max_ref[n].find(g);
      if (it != max_ref[n].end()) st.matched[n] += std::min(c, it->second);
    }
  }
  st.candidate_length = static_cast<double>(candidate.size());
  st.reference_length = static_cast<double>(closest);
  return st;
}

double bleu4_corpus(std::span<const Sentence> candidates, std::span<const std::vector<Sentence>> references) {
  if (candidates.size() != references.size()) throw ConfigError("BLEU: candidate and reference counts differ");
  BleuStats pooled;
  for (std::size_t i = 0; i < candidates.size(); ++i) pooled += bleu_stats(candidates[i], references[i]);
  return 100.0 * pooled.score();
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Sentence& candidate, std::span<const Sentence> references) {
  constexpr double beta2 = 1.2 * 1.2;
  double best = 0.0;
  for (const auto& ref : references) {
    const auto lcs = static_cast<double>(lcs_length(candidate.tokens(), ref.tokens()));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(candidate.size());
    const double r = lcs / static_cast<double>(ref.size());
    best = std::max(best, (1.0 + beta2) * p * r / (r + beta2 * p));
  }
  return 100.0 * best;
}

double cider(const Sentence& candidate, std::span<const Sentence> references, const IdfTable& idf) {
  if (references.empty()) return 0.0;
  const auto cand = NGramProfile::of(candidate);
  std::vector<NGramProfile> refs;
  for (const auto& r : references) refs.push_back(NGramProfile::of(r));

  double sum_orders = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    std::map<std::string, double> cv;
    double cnorm2 = 0.0;
    for (const auto& [g, c] : cand.counts[n]) {
      const double w = c * idf.idf(g);
      cv[g] = w;
      cnorm2 += w * w;
    }
    double sum_refs = 0.0;
    for (const auto& rp : refs) {
      double dot = 0.0, rnorm2 = 0.0;
      for (const auto& [g, c] : rp.counts[n]) {
        const double w = c * idf.idf(g);
        rnorm2 += w * w;
        if (auto it = cv.find(g); it != cv.end()) dot += it->second * w;
      }
      if (cnorm2 > 0.0 && rnorm2 > 0.0) sum_refs += dot / (std::sqrt(cnorm2) * std::sqrt(rnorm2));
    }
    sum_orders += sum_refs / static_cast<double>(refs.size());
  }
  return 100.0 * sum_orders / kMaxOrder;
}

namespace {

// Exact search over alignments of candidate positions to reference positions.
// State: candidate index, set of used reference positions, and the reference
// position matched by the previous candidate token (-1 if it was unmatched).
class MeteorSearch {
public:
  MeteorSearch(const Sentence& cand, const Sentence& ref) : cand_(cand.tokens()) {
    const auto& r = ref.tokens();
    for (std::size_t j = 0; j < r.size(); ++j) {
      auto it = std::find(cand_.begin(), cand_.end(), r[j]);
      if (it == cand_.end()) continue;
      slot_of_ref_[static_cast<int>(j)] = static_cast<int>(positions_.size());
      positions_.push_back(static_cast<int>(j));
      by_word_[r[j]].push_back(static_cast<int>(j));
    }
    words_ = (positions_.size() + 63) / 64;
  }

  MeteorAlignment run() {
    std::vector<std::uint64_t> mask(words_, 0);
    const auto v = best(0, -1, mask);
    return {v.first, -v.second};
  }

private:
  using Value = std::pair<int, int>;  // (matches, -chunks), maximized lexicographically
  using Key = std::tuple<std::size_t, int, std::vector<std::uint64_t>>;

  Value best(std::size_t i, int prev, std::vector<std::uint64_t>& mask) {
    if (i == cand_.size()) return {0, 0};
    Key key{i, prev, mask};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    Value result = best(i + 1, -1, mask);
    if (auto w = by_word_.find(cand_[i]); w != by_word_.end()) {
      for (int j : w->second) {
        const int s = slot_of_ref_.at(j);
        auto& word = mask[s / 64];
        const std::uint64_t bit = std::uint64_t{1} << (s % 64);
        if (word & bit) continue;
        word |= bit;
        Value sub = best(i + 1, j, mask);
        word &= ~bit;
        const int new_chunk = (prev >= 0 && (j == prev + 1 || j == prev - 1)) ? 0 : 1;
        Value cand{sub.first + 1, sub.second - new_chunk};
        if (cand > result) result = cand;
      }
    }
    memo_.emplace(std::move(key), result);
    return result;
  }

  const std::vector<std::string>& cand_;
  std::vector<int> positions_;
  std::map<int, int> slot_of_ref_;
  std::map<std::string, std::vector<int>> by_word_;
  std::size_t words_ = 0;
  std::map<Key, Value> memo_;
};

}  // namespace

MeteorAlignment meteor_align(const Sentence& candidate, const Sentence& reference) {
  return MeteorSearch(candidate, reference).run();
}

double meteor_score(const MeteorAlignment& al, std::size_t candidate_len, std::size_t reference_len,
                    const MeteorParams& p) {
  if (al.matches == 0) return 0.0;
  const double m = al.matches;
  const double precision = m / static_cast<double>(candidate_len);
  const double recall = m / static_cast<double>(reference_len);
  const double fmean = precision * recall / (p.alpha * precision + (1.0 - p.alpha) * recall);
  const double penalty = p.gamma * std::pow(static_cast<double>(al.chunks) / m, p.beta);
  return fmean * (1.0 - penalty);
}

double meteor_exact(const Sentence& candidate, std::span<const Sentence> references, const MeteorParams& p) {
  double best = 0.0;
  for (const auto& ref : references)
    best = std::max(best, meteor_score(meteor_align(candidate, ref), candidate.size(), ref.size(), p));
  return 100.0 * best;
}

}  // namespace capeval
