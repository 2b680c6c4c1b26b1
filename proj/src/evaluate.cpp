#include "capeval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <omp.h>

#include "capeval/ngram.hpp"

namespace capeval {

void for_each_index(std::size_t n, Execution exec, int threads, const std::function<void(std::size_t)>& fn) {
  if (exec == Execution::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 4) num_threads(nthreads)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<double> wmd_distances(std::span<const DistributionPair> pairs, Execution exec, int threads) {
  std::vector<double> out(pairs.size());
  for_each_index(pairs.size(), exec, threads, [&](std::size_t i) { out[i] = wmd(*pairs[i].a, *pairs[i].b).distance; });
  return out;
}

Scenario parse_scenario(std::string_view name) {
  if (name == "I" || name == "1") return Scenario::I;
  if (name == "II" || name == "2") return Scenario::II;
  throw ConfigError("unknown scenario: " + std::string(name) + " (expected I or II)");
}

ZMode parse_z_mode(std::string_view name) {
  if (name == "batch-max" || name == "batch_max") return ZMode::batch_max;
  if (name == "fixed") return ZMode::fixed;
  throw ConfigError("unknown z mode: " + std::string(name) + " (expected fixed or batch-max)");
}

namespace {

bool contains(const std::vector<MetricKind>& v, MetricKind k) { return std::find(v.begin(), v.end(), k) != v.end(); }

void require(bool present, MetricKind metric, const char* input) {
  if (!present)
    throw ConfigError("metric " + std::string(metric_name(metric)) + " requires " + input + ", which was not supplied");
}

bool any_target_refs(const ReferenceMap* refs) {
  if (!refs) return false;
  return std::any_of(refs->begin(), refs->end(), [](const auto& r) { return !r.second.target_refs.empty(); });
}

bool wants_standard(const std::vector<MetricKind>& m) {
  return std::any_of(kStandardMetrics.begin(), kStandardMetrics.end(), [&](MetricKind k) { return contains(m, k); });
}

// Outcome of one soft-failing per-caption computation.
struct Soft {
  double value = 0.0;
  std::string problem;  // empty on success
};

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::vector<MetricKind> resolve_metrics(const EvalInputs& in, const EvalOptions& options) {
  std::vector<MetricKind> metrics;
  if (options.metrics.empty()) {
    if (options.scenario == Scenario::I) metrics.assign(kProposedMetrics.begin(), kProposedMetrics.end());
    else metrics.push_back(MetricKind::CMEDREL);
    if (any_target_refs(in.references)) metrics.insert(metrics.end(), kStandardMetrics.begin(), kStandardMetrics.end());
    for (MetricKind agg : {MetricKind::BMRC, MetricKind::WCC}) {
      const auto parts = aggregate_components(agg);
      if (std::all_of(parts.begin(), parts.end(), [&](MetricKind p) { return contains(metrics, p); }))
        metrics.push_back(agg);
    }
  } else {
    for (MetricKind k : options.metrics) {
      if (!contains(metrics, k)) metrics.push_back(k);
      for (MetricKind part : aggregate_components(k))
        if (!contains(metrics, part)) metrics.push_back(part);
    }
  }
  std::sort(metrics.begin(), metrics.end());

  if (!in.captions) throw ConfigError("captions were not supplied");
  for (MetricKind k : metrics) {
    if (is_aggregate(k)) continue;
    if (options.scenario == Scenario::II && (k == MetricKind::WMDREL || k == MetricKind::CLINREL))
      throw ConfigError("metric " + std::string(metric_name(k)) +
                        " needs source references and is not available in scenario II");
    switch (k) {
      case MetricKind::WMDREL:
        require(in.references, k, "references (--references)");
        require(in.target_embeddings, k, "target embeddings (--embeddings-target)");
        break;
      case MetricKind::CLINREL:
        require(in.references, k, "references (--references)");
        require(in.source_embeddings, k, "source embeddings (--embeddings-source)");
        require(in.target_embeddings, k, "target embeddings (--embeddings-target)");
        require(in.source_projector, k, "a source projector (--projector-source)");
        require(in.target_projector, k, "a target projector (--projector-target)");
        break;
      case MetricKind::CMEDREL:
        require(in.target_embeddings, k, "target embeddings (--embeddings-target)");
        require(in.features, k, "visual features (--features)");
        require(in.target_projector, k, "a target projector (--projector-target)");
        break;
      default:
        require(in.references, k, "references with target-language captions (--references)");
        break;
    }
  }

  auto check_dim = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("dimension mismatch: " + what);
  };
  if (in.target_projector && in.target_embeddings &&
      (contains(metrics, MetricKind::CLINREL) || contains(metrics, MetricKind::CMEDREL)))
    check_dim(in.target_projector->input_dim() == in.target_embeddings->dim(),
              "target projector input vs target embeddings");
  if (in.source_projector && in.source_embeddings && contains(metrics, MetricKind::CLINREL)) {
    check_dim(in.source_projector->input_dim() == in.source_embeddings->dim(),
              "source projector input vs source embeddings");
    check_dim(in.source_projector->output_dim() == in.target_projector->output_dim(),
              "source and target projector outputs");
  }
  if (in.features && in.target_projector && contains(metrics, MetricKind::CMEDREL))
    check_dim(in.features->dim() == in.target_projector->output_dim(), "visual features vs target projector output");
  return metrics;
}

EvalResult evaluate(const EvalInputs& in, const EvalOptions& options) {
  EvalResult result;
  result.metrics = resolve_metrics(in, options);
  const auto& metrics = result.metrics;
  const auto& caps = *in.captions;
  const std::size_t n = caps.size();
  const Execution exec = options.execution;
  const int threads = options.threads;

  const bool do_wmd = contains(metrics, MetricKind::WMDREL);
  const bool do_clin = contains(metrics, MetricKind::CLINREL);
  const bool do_cmed = contains(metrics, MetricKind::CMEDREL);
  const bool do_std = wants_standard(metrics);

  // Hard consistency checks, in caption order.
  std::vector<const ReferenceSet*> refs(n, nullptr);
  std::vector<std::span<const double>> feats(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = caps[i];
    if (do_wmd || do_clin || do_std) {
      auto it = in.references->find(c.image_id);
      if (it == in.references->end()) throw ConfigError("no reference set for image " + c.image_id);
      refs[i] = &it->second;
      if (do_wmd && it->second.mt_refs.empty())
        throw ConfigError("WMDRel needs machine-translated references; image " + c.image_id + " has none");
      if (do_clin && it->second.source_refs.empty())
        throw ConfigError("CLinRel needs source references; image " + c.image_id + " has none");
      if (do_std && it->second.target_refs.empty())
        throw ConfigError("standard metrics need target references; image " + c.image_id + " has none");
    }
    if (do_cmed) {
      auto f = in.features->find(c.image_id);
      if (!f) throw ConfigError("no visual feature for image " + c.image_id);
      feats[i] = *f;
    }
  }

  auto ref_count = [&](const std::vector<Sentence>& v) { return options.average_refs ? v.size() : std::size_t{1}; };
  auto warn = [&](std::size_t i, const std::string& metric, const std::string& problem) {
    result.warnings.push_back("image " + caps[i].image_id + ", model " + caps[i].model_id + ": " + metric +
                              " scored 0 (" + problem + ")");
  };

  std::vector<double> wmd_score(n, 0.0), clin_score(n, 0.0), cmed_score(n, 0.0);

  if (do_wmd) {
    const auto& table = *in.target_embeddings;
    std::vector<std::optional<Distribution>> cand(n);
    std::vector<std::string> cand_problem(n);
    for_each_index(n, exec, threads, [&](std::size_t i) {
      try {
        cand[i] = nbow(caps[i].candidate, table);
      } catch (const AllOovError& e) {
        cand_problem[i] = e.what();
      }
    });
    // Reference distributions, shared across models.
    std::map<std::string, std::vector<std::optional<Distribution>>> mt;
    std::map<std::string, std::vector<std::string>> mt_problem;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& id = caps[i].image_id;
      if (mt.count(id)) continue;
      auto& slot = mt[id];
      auto& prob = mt_problem[id];
      const auto& sents = refs[i]->mt_refs;
      for (std::size_t r = 0; r < ref_count(sents); ++r) {
        try {
          slot.emplace_back(nbow(sents[r], table));
          prob.emplace_back();
        } catch (const AllOovError& e) {
          slot.emplace_back(std::nullopt);
          prob.emplace_back(std::string("reference: ") + e.what());
        }
      }
    }
    std::vector<DistributionPair> pairs;
    std::vector<std::pair<std::size_t, std::size_t>> owner;
    for (std::size_t i = 0; i < n; ++i) {
      if (!cand[i]) continue;
      const auto& slot = mt.at(caps[i].image_id);
      for (std::size_t r = 0; r < slot.size(); ++r)
        if (slot[r]) {
          pairs.push_back({&*cand[i], &*slot[r]});
          owner.emplace_back(i, r);
        }
    }
    const auto dist = wmd_distances(pairs, exec, threads);

    double z = options.z;
    if (options.z_mode == ZMode::batch_max) {
      z = 0.0;
      for (double d : dist) z = std::max(z, d);
    } else if (!(z > 0.0)) {
      throw ConfigError("fixed z mode needs a positive --z value");
    }
    result.z = z;

    std::vector<std::vector<double>> per_ref(n);
    for (std::size_t i = 0; i < n; ++i) per_ref[i].assign(mt.at(caps[i].image_id).size(), 0.0);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [i, r] = owner[p];
      // batch max of zero means every distance is zero
      per_ref[i][r] = z > 0.0 ? wmdrel(dist[p], z) : 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!cand[i]) {
        warn(i, "WMDRel", cand_problem[i]);
        continue;
      }
      for (const auto& prob : mt_problem.at(caps[i].image_id))
        if (!prob.empty()) warn(i, "WMDRel", prob);
      wmd_score[i] = mean(per_ref[i]);
    }
  }

  if (do_clin || do_cmed) {
    const auto& proj_t = *in.target_projector;
    std::vector<Soft> cand_status(n);
    std::vector<Eigen::VectorXd> cand_vec(n);
    for_each_index(n, exec, threads, [&](std::size_t i) {
      try {
        cand_vec[i] = proj_t.project(sentence_repr(caps[i].candidate, *in.target_embeddings));
      } catch (const AllOovError& e) {
        cand_status[i].problem = e.what();
      }
    });

    std::map<std::string, std::vector<std::optional<Eigen::VectorXd>>> src_vec;
    std::map<std::string, std::vector<std::string>> src_problem;
    if (do_clin) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& id = caps[i].image_id;
        if (src_vec.count(id)) continue;
        auto& slot = src_vec[id];
        auto& prob = src_problem[id];
        const auto& sents = refs[i]->source_refs;
        for (std::size_t r = 0; r < ref_count(sents); ++r) {
          try {
            slot.emplace_back(in.source_projector->project(sentence_repr(sents[r], *in.source_embeddings)));
            prob.emplace_back();
          } catch (const AllOovError& e) {
            slot.emplace_back(std::nullopt);
            prob.emplace_back(std::string("source reference: ") + e.what());
          }
        }
      }
    }

    std::vector<std::vector<Soft>> clin(n);
    std::vector<Soft> cmed(n);
    for_each_index(n, exec, threads, [&](std::size_t i) {
      if (!cand_status[i].problem.empty()) return;
      if (do_clin) {
        const auto& slot = src_vec.at(caps[i].image_id);
        const auto& prob = src_problem.at(caps[i].image_id);
        clin[i].resize(slot.size());
        for (std::size_t r = 0; r < slot.size(); ++r) {
          if (!slot[r]) {
            clin[i][r].problem = prob[r];
            continue;
          }
          try {
            clin[i][r].value = cosine(*slot[r], cand_vec[i]);
          } catch (const ZeroVector& e) {
            clin[i][r].problem = e.what();
          }
        }
      }
      if (do_cmed) {
        try {
          cmed[i].value = cosine(std::span<const double>(cand_vec[i].data(), static_cast<std::size_t>(cand_vec[i].size())),
                                 feats[i]);
        } catch (const ZeroVector& e) {
          cmed[i].problem = e.what();
        }
      }
    });

    for (std::size_t i = 0; i < n; ++i) {
      if (!cand_status[i].problem.empty()) {
        if (do_clin) warn(i, "CLinRel", cand_status[i].problem);
        if (do_cmed) warn(i, "CMedRel", cand_status[i].problem);
        continue;
      }
      if (do_clin) {
        std::vector<double> vals;
        for (const auto& s : clin[i]) {
          if (!s.problem.empty()) warn(i, "CLinRel", s.problem);
          vals.push_back(s.value);
        }
        clin_score[i] = mean(vals);
      }
      if (do_cmed) {
        if (!cmed[i].problem.empty()) warn(i, "CMedRel", cmed[i].problem);
        cmed_score[i] = cmed[i].value;
      }
    }
  }

  std::vector<BleuStats> bleu(n);
  std::vector<double> meteor(n, 0.0), rouge(n, 0.0), cider_score(n, 0.0);
  if (do_std) {
    std::vector<std::vector<Sentence>> groups;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < n; ++i)
      if (seen.insert(caps[i].image_id).second) groups.push_back(refs[i]->target_refs);
    const auto idf = IdfTable::build(groups);
    if (idf.degenerate() && contains(metrics, MetricKind::CIDER))
      result.warnings.push_back("CIDEr document frequencies come from a single image; every CIDEr score is 0");
    for_each_index(n, exec, threads, [&](std::size_t i) {
      const auto& tr = refs[i]->target_refs;
      const auto& cand = caps[i].candidate;
      bleu[i] = bleu_stats(cand, tr);
      if (contains(metrics, MetricKind::METEOR)) meteor[i] = meteor_exact(cand, tr);
      if (contains(metrics, MetricKind::ROUGE_L)) rouge[i] = rouge_l(cand, tr);
      if (contains(metrics, MetricKind::CIDER)) cider_score[i] = cider(cand, tr, idf);
    });
  }

  // Reduction in caption order within each model.
  std::map<std::string, std::vector<std::size_t>> by_model;
  for (std::size_t i = 0; i < n; ++i) by_model[caps[i].model_id].push_back(i);

  const bool want_bmrc = options.metrics.empty() || contains(options.metrics, MetricKind::BMRC);
  const bool want_wcc = options.metrics.empty() || contains(options.metrics, MetricKind::WCC);
  auto finish_row = [&](MetricRow row) {
    MetricRow full = aggregate_available(row);
    if (want_bmrc && full.count(MetricKind::BMRC)) row[MetricKind::BMRC] = full[MetricKind::BMRC];
    if (want_wcc && full.count(MetricKind::WCC)) row[MetricKind::WCC] = full[MetricKind::WCC];
    return row;
  };
  auto caption_row = [&](std::size_t i, bool sentence_bleu) {
    MetricRow row;
    if (do_wmd) row[MetricKind::WMDREL] = 100.0 * wmd_score[i];
    if (do_clin) row[MetricKind::CLINREL] = 100.0 * clin_score[i];
    if (do_cmed) row[MetricKind::CMEDREL] = 100.0 * cmed_score[i];
    if (sentence_bleu && contains(metrics, MetricKind::BLEU4)) row[MetricKind::BLEU4] = 100.0 * bleu[i].score();
    if (contains(metrics, MetricKind::METEOR)) row[MetricKind::METEOR] = meteor[i];
    if (contains(metrics, MetricKind::ROUGE_L)) row[MetricKind::ROUGE_L] = rouge[i];
    if (contains(metrics, MetricKind::CIDER)) row[MetricKind::CIDER] = cider_score[i];
    return row;
  };

  for (const auto& [model, idx] : by_model) {
    MetricRow sum;
    BleuStats pooled;
    for (std::size_t i : idx) {
      for (const auto& [k, v] : caption_row(i, false)) sum[k] += v;
      pooled += bleu[i];
    }
    MetricRow row;
    for (const auto& [k, v] : sum) row[k] = v / static_cast<double>(idx.size());
    if (contains(metrics, MetricKind::BLEU4)) row[MetricKind::BLEU4] = 100.0 * pooled.score();
    result.table.rows[model] = finish_row(std::move(row));
  }

  if (options.per_image) {
    for (std::size_t i = 0; i < n; ++i)
      result.per_image[caps[i].image_id].rows[caps[i].model_id] = finish_row(caption_row(i, true));
  }
  return result;
}

}  // namespace capeval
