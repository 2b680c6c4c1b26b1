#pragma once

// Synthetic evaluation fixture: random embeddings, features, projectors and
// captions written to a scratch directory.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "capeval/commands.hpp"

namespace fixture {

namespace fs = std::filesystem;

struct Shape {
  int images = 50;
  int models = 3;
  int refs_per_image = 3;
  int target_vocab = 60;
  int source_vocab = 60;
  std::size_t dim = 8;
  std::size_t feature_dim = 16;
  std::uint64_t seed = 7;
};

struct Paths {
  fs::path dir, captions, references, emb_source, emb_target, features, proj_source, proj_target;
};

class ScratchDir {
public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("capeval-" + tag + "-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

inline std::string word(char prefix, int i) { return std::string(1, prefix) + std::to_string(i); }

inline capeval::EmbeddingTable random_table(char prefix, int vocab, std::size_t dim, capeval::Language lang,
                                            std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  capeval::EmbeddingTable t(dim, lang);
  std::vector<double> v(dim);
  for (int i = 0; i < vocab; ++i) {
    for (auto& x : v) x = g(rng);
    t.add(word(prefix, i), v);
  }
  return t;
}

inline capeval::Projector random_projector(std::size_t d, std::size_t dv, capeval::Language lang,
                                           std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd w(static_cast<Eigen::Index>(dv), static_cast<Eigen::Index>(d));
  Eigen::VectorXd b(static_cast<Eigen::Index>(dv));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.1 * g(rng);
  return capeval::Projector(std::move(w), std::move(b), lang, 1.0);
}

inline std::string random_sentence(char prefix, int vocab, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(4, 9), tok(0, vocab - 1);
  std::string s;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) s += (i ? " " : "") + word(prefix, tok(rng));
  return s;
}

// Perturbed copy: some tokens replaced, an occasional out-of-vocabulary word.
inline std::string perturb(const std::string& s, char prefix, int vocab, double noise, std::mt19937_64& rng) {
  std::istringstream in(s);
  std::uniform_real_distribution<double> u;
  std::uniform_int_distribution<int> tok(0, vocab - 1);
  std::string out, w;
  while (in >> w) {
    if (u(rng) < noise) w = u(rng) < 0.1 ? "oov" + std::to_string(tok(rng)) : word(prefix, tok(rng));
    out += (out.empty() ? "" : " ") + w;
  }
  return out;
}

inline Paths write(const fs::path& dir, const Shape& shape = {}) {
  using nlohmann::json;
  std::mt19937_64 rng(shape.seed);
  Paths p;
  p.dir = dir;
  p.captions = dir / "captions.jsonl";
  p.references = dir / "references.jsonl";
  p.emb_source = dir / "emb_source.txt";
  p.emb_target = dir / "emb_target.txt";
  p.features = dir / "features.txt";
  p.proj_source = dir / "proj_source.txt";
  p.proj_target = dir / "proj_target.txt";

  capeval::write_vector_table(random_table('s', shape.source_vocab, shape.dim, capeval::Language::source, rng), p.emb_source);
  capeval::write_vector_table(random_table('t', shape.target_vocab, shape.dim, capeval::Language::target, rng), p.emb_target);
  capeval::save_projector(random_projector(shape.dim, shape.feature_dim, capeval::Language::source, rng), p.proj_source);
  capeval::save_projector(random_projector(shape.dim, shape.feature_dim, capeval::Language::target, rng), p.proj_target);

  std::normal_distribution<double> g;
  capeval::VisualFeatures feats(shape.feature_dim);
  std::vector<double> f(shape.feature_dim);
  std::string refs_text, caps_text;
  for (int i = 0; i < shape.images; ++i) {
    const std::string id = "img" + std::to_string(i);
    for (auto& x : f) x = g(rng);
    feats.add(id, f);

    json ref;
    ref["image_id"] = id;
    ref["source"] = json::array();
    ref["target"] = json::array();
    ref["mt"] = json::array();
    const std::string gist = random_sentence('t', shape.target_vocab, rng);
    for (int r = 0; r < shape.refs_per_image; ++r) {
      ref["source"].push_back(random_sentence('s', shape.source_vocab, rng));
      ref["target"].push_back(perturb(gist, 't', shape.target_vocab, 0.3, rng));
      ref["mt"].push_back(perturb(gist, 't', shape.target_vocab, 0.4, rng));
    }
    refs_text += ref.dump() + "\n";

    for (int m = 0; m < shape.models; ++m) {
      json cap;
      cap["image_id"] = id;
      cap["model_id"] = "model" + std::to_string(m);
      // one caption made of unknown words only
      cap["caption"] = (i == 0 && m == 0) ? std::string("oovx oovy")
                                          : perturb(gist, 't', shape.target_vocab, 0.2 + 0.2 * m, rng);
      caps_text += cap.dump() + "\n";
    }
  }
  capeval::write_vector_table(feats, p.features);
  capeval::write_file(p.references, refs_text);
  capeval::write_file(p.captions, caps_text);
  return p;
}

/// Scenario-I run over every fixture input.
inline capeval::RunConfig run_config(const Paths& p) {
  capeval::RunConfig c;
  c.captions = p.captions;
  c.references = p.references;
  c.embeddings_source = p.emb_source;
  c.embeddings_target = p.emb_target;
  c.features = p.features;
  c.projector_source = p.proj_source;
  c.projector_target = p.proj_target;
  return c;
}

}  // namespace fixture
