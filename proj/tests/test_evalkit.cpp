#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "oracles.hpp"
#include "saekit/dataio.hpp"
#include "saekit/errors.hpp"
#include "saekit/evalkit.hpp"
#include "saekit/train.hpp"

namespace ev = saekit::evalkit;
namespace cd = saekit::codes;
namespace md = saekit::model;
using saekit::linalg::Matrix;
using saekit::linalg::Rng;

namespace {

md::SaeParams random_model(std::size_t d, std::size_t h, std::uint64_t seed) {
  Rng rng(seed);
  auto p = md::init(d, h, rng);
  for (float& v : p.b_enc) v = 0.05f;
  return p;
}

/// Small hierarchical model trained on noiseless one-atom data.
const md::SaeParams& recovery_model() {
  static const md::SaeParams params = [] {
    saekit::dataio::SyntheticSpec spec;
    spec.atoms = 48;
    spec.dim = 32;
    spec.active = 1;
    spec.noise_std = 0.0;
    spec.seed = 5;
    const auto data = saekit::dataio::generate_synthetic(spec, 8000);
    saekit::train::TrainConfig cfg;
    cfg.dict_size = 96;
    cfg.k = 4;
    cfg.batch_size = 128;
    cfg.steps = 600;
    cfg.adam.lr = 0.01;
    cfg.holdout_rows = 500;
    cfg.log_every = 0;
    return saekit::train::train(cfg, data).params;
  }();
  return params;
}

Matrix recovery_eval_data() {
  saekit::dataio::SyntheticSpec spec;
  spec.atoms = 48;
  spec.dim = 32;
  spec.active = 1;
  spec.noise_std = 0.0;
  spec.seed = 5;
  spec.sample_seed = 77;
  return saekit::dataio::generate_synthetic(spec, 2000);
}

}  // namespace

TEST_CASE("fvu: hand cases and two-pass oracle") {
  Rng rng(1);
  const auto x = oracle::random_matrix(50, 8, rng);
  CHECK(ev::fvu(x, x) == 0.0);

  Matrix mean(50, 8);
  for (std::size_t c = 0; c < 8; ++c) {
    double s = 0.0;
    for (std::size_t b = 0; b < 50; ++b) s += x(b, c);
    for (std::size_t b = 0; b < 50; ++b) mean(b, c) = static_cast<float>(s / 50.0);
  }
  CHECK(std::abs(ev::fvu(x, mean) - 1.0) < 1e-6);

  const auto y = oracle::random_matrix(50, 8, rng);
  CHECK(std::abs(ev::fvu(x, y) - oracle::fvu_two_pass(x, y)) < 1e-6);

  CHECK_THROWS_AS(ev::fvu(x, Matrix(50, 7)), saekit::ShapeError);
  CHECK_THROWS_AS(ev::fvu(Matrix(1, 3), Matrix(1, 3)), saekit::DomainError);
  CHECK_THROWS_AS(ev::fvu(Matrix(4, 3), Matrix(4, 3)), saekit::DomainError);
}

TEST_CASE("fvu: shift and scale invariance") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = oracle::random_matrix(30, 6, rng);
    auto y = x;
    for (float& v : y.data()) v += static_cast<float>(0.3 * rng.normal());
    const double base = ev::fvu(x, y);
    auto xs = x, ys = y;
    const auto shift = oracle::random_vector(6, rng);
    for (std::size_t b = 0; b < 30; ++b)
      for (std::size_t c = 0; c < 6; ++c) {
        xs(b, c) += shift[c];
        ys(b, c) += shift[c];
      }
    CHECK(std::abs(ev::fvu(xs, ys) - base) < 1e-6);
    const float scale = trial % 2 == 0 ? -2.5f : 0.4f;
    auto xc = x, yc = y;
    for (float& v : xc.data()) v *= scale;
    for (float& v : yc.data()) v *= scale;
    CHECK(std::abs(ev::fvu(xc, yc) - base) < 1e-6);
  }
}

TEST_CASE("l0 and almost-dead counts") {
  std::vector<cd::SparseCode> codes(2);
  CHECK(ev::l0(codes) == 0.0);
  codes[0].indices = {1, 2};
  codes[0].values = {1, 1};
  codes[1].indices = {1, 2, 3, 4};
  codes[1].values = {1, 1, 1, 1};
  CHECK(ev::l0(codes) == 3.0);
  CHECK(ev::l0(std::span<const cd::SparseCode>{}) == 0.0);

  Rng rng(3);
  std::vector<float> pre(64);
  for (float& v : pre) v = static_cast<float>(std::abs(rng.normal()) + 0.01);
  std::vector<cd::SparseCode> full{cd::topk_select(pre, 7), cd::topk_select(pre, 7)};
  CHECK(ev::l0(full) == 7.0);

  CHECK(ev::almost_dead_count(std::vector<double>(9, 0.0)) == 9);
  CHECK(ev::almost_dead_count(std::vector<double>{1e-5, 0.5, 1.0}) == 0);
  CHECK(ev::almost_dead_count(std::vector<double>{0.0, 1e-6, 1e-4}) == 2);
}

TEST_CASE("k grid parsing") {
  CHECK(ev::parse_k_grid("1:128:1").size() == 128);
  CHECK(ev::parse_k_grid("32,64,128") == std::vector<std::size_t>{32, 64, 128});
  CHECK(ev::parse_k_grid("8:32:8,4,16") == std::vector<std::size_t>{4, 8, 16, 24, 32});
  CHECK(ev::parse_k_grid("5") == std::vector<std::size_t>{5});
  CHECK_THROWS_AS(ev::parse_k_grid(""), saekit::DomainError);
  CHECK_THROWS_AS(ev::parse_k_grid("0:4:1"), saekit::DomainError);
  CHECK_THROWS_AS(ev::parse_k_grid("1:4:0"), saekit::DomainError);
  CHECK_THROWS_AS(ev::parse_k_grid("a,b"), saekit::DomainError);
  CHECK(ev::parse_mode("hierarchical") == ev::InferenceMode::kTopK);
  CHECK(ev::parse_mode("jumprelu") == ev::InferenceMode::kJumpRelu);
  CHECK_THROWS_AS(ev::parse_mode("relu"), saekit::DomainError);
}

TEST_CASE("sweep on a random model: shapes, determinism, increasing l0") {
  const auto p = random_model(64, 16, 4);
  Rng rng(5);
  const auto data = oracle::random_matrix(300, 16, rng);
  const std::vector<std::size_t> grid{1, 2, 4, 8, 16, 64};
  for (auto mode : {ev::InferenceMode::kTopK, ev::InferenceMode::kBatchTopK, ev::InferenceMode::kJumpRelu}) {
    const auto a = ev::sweep(p, data, grid, mode);
    const auto b = ev::sweep(p, data, grid, mode);
    REQUIRE(a.size() == grid.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].k == grid[i]);
      CHECK(a[i].fvu == b[i].fvu);
      CHECK(a[i].l0 == b[i].l0);
      CHECK(a[i].fvu >= 0.0);
      CHECK(a[i].live + a[i].almost_dead <= 64);
      CHECK(a[i].theta.has_value() == (mode == ev::InferenceMode::kJumpRelu));
      if (i > 0 && grid[i] <= 16) CHECK(a[i].l0 > a[i - 1].l0);
    }
    if (mode == ev::InferenceMode::kTopK) CHECK(a[0].l0 == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(ev::sweep(p, data, std::vector<std::size_t>{65}, ev::InferenceMode::kTopK), saekit::DomainError);
}

TEST_CASE("sweep topk equals truncating the K-code") {
  const auto p = random_model(40, 10, 6);
  Rng rng(7);
  const auto data = oracle::random_matrix(50, 10, rng);
  const auto pre = md::encode_batch(p, data);
  const auto big = cd::topk_select_rows(pre, 12);
  for (std::size_t k : {1u, 3u, 12u}) {
    const auto small = ev::select(pre, k, ev::InferenceMode::kTopK);
    for (std::size_t b = 0; b < 50; ++b) {
      const auto t = cd::truncate(big[b], k);
      CHECK(small[b].indices == t.indices);
      CHECK(small[b].values == t.values);
    }
  }
}

TEST_CASE("trained single-atom model: k=1 recovery and monotone FVU in k") {
  const auto& p = recovery_model();
  const auto data = recovery_eval_data();
  const auto grid = ev::parse_k_grid("1:4:1");
  const auto entries = ev::sweep(p, data, grid, ev::InferenceMode::kTopK);
  MESSAGE("k=1 fvu " << entries[0].fvu);
  CHECK(entries[0].fvu < 0.05);
  for (std::size_t i = 1; i < entries.size(); ++i) CHECK(entries[i].fvu <= entries[i - 1].fvu + 1e-3);

  const std::vector<std::size_t> wide{1, 2, 4, 8, 32, 96};
  const auto all = ev::sweep(p, data, wide, ev::InferenceMode::kTopK);
  double best = 1e9;
  for (const auto& e : all) best = std::min(best, e.fvu);
  MESSAGE("k=D fvu " << all.back().fvu << " best " << best);
  CHECK(all.back().fvu <= best + 1e-3);

  const auto prof = ev::cosine_profile(p, data, 4);
  REQUIRE(prof.size() == 4);
  CHECK(prof[0] == doctest::Approx(1.0));
  for (double v : prof) CHECK((std::isfinite(v) && v >= -1.0 && v <= 1.0));
}

TEST_CASE("cosine profile: orthonormal decoder") {
  md::SaeParams p;
  p.w_enc = Matrix(6, 6);
  for (std::size_t i = 0; i < 6; ++i) p.w_enc(i, i) = 1.0f;
  p.w_dec = p.w_enc;
  p.b_enc.assign(6, 0.0f);
  p.b_dec.assign(6, 0.0f);
  Rng rng(8);
  Matrix data(40, 6);
  for (float& v : data.data()) v = static_cast<float>(std::abs(rng.normal()) + 0.1);
  for (auto ref : {ev::CosineReference::kTop1, ev::CosineReference::kAdjacent}) {
    const auto prof = ev::cosine_profile(p, data, 4, ref);
    CHECK(prof[0] == doctest::Approx(1.0));
    for (std::size_t i = 1; i < 4; ++i) CHECK(prof[i] == doctest::Approx(0.0));
  }
}

TEST_CASE("activation distributions and histograms") {
  const auto h = ev::log_histogram(std::vector<double>{0.0, 1e-8, 1e-7, 1e-3, 1.0, 2.0}, 1e-7, 1.0, 8);
  REQUIRE(h.edges.size() == 9);
  REQUIRE(h.counts.size() == 8);
  CHECK(h.edges.front() == doctest::Approx(1e-7));
  CHECK(h.edges.back() == doctest::Approx(1.0));
  CHECK(h.counts[0] == 3);
  CHECK(h.counts[7] == 2);
  std::size_t total = 0;
  for (auto c : h.counts) total += c;
  CHECK(total == 6);

  // A dictionary with two always-on features of fixed value and dead rest.
  md::SaeParams p;
  p.w_enc = Matrix(5, 3);
  p.w_dec = Matrix(5, 3);
  for (std::size_t i = 0; i < 5; ++i) p.w_dec(i, i % 3) = 1.0f;
  p.b_enc = {0.5f, 2.0f, -1.0f, -1.0f, -1.0f};
  p.b_dec.assign(3, 0.0f);
  Rng rng(9);
  const auto data = oracle::random_matrix(20, 3, rng);
  const auto d = ev::activation_distributions(p, data, 3);
  CHECK(d.frequency[0] == 1.0);
  CHECK(d.frequency[2] == 0.0);
  CHECK(d.mean_sq[0] == doctest::Approx(0.25));
  CHECK(d.mean_sq[1] == doctest::Approx(4.0));
  CHECK_FALSE(d.active[3]);
  std::size_t fsum = 0, msum = 0;
  for (auto c : d.frequency_hist.counts) fsum += c;
  for (auto c : d.mean_sq_hist.counts) msum += c;
  CHECK(fsum == 5);
  CHECK(msum == 2);
  CHECK(d.frequency_hist.counts[0] == 3);
  CHECK(d.frequency_hist.counts.size() == ev::kHistogramBins);
}

TEST_CASE("inference comparison") {
  const auto p = random_model(64, 16, 10);
  Rng rng(11);
  const auto data = oracle::random_matrix(200, 16, rng);
  const auto same = ev::compare_modes(p, data, 8, ev::InferenceMode::kTopK, ev::InferenceMode::kTopK);
  CHECK(same.difference() == 0.0);
  const auto cmp = ev::compare_inference_modes(p, data, 8);
  CHECK(cmp.mode_b == ev::InferenceMode::kJumpRelu);
  CHECK(cmp.theta.has_value());
  CHECK(std::abs(cmp.l0_b - cmp.l0_a) <= 1.0);
  CHECK(cmp.difference() == cmp.fvu_b - cmp.fvu_a);
}

TEST_CASE("report serialization") {
  const auto p = random_model(32, 8, 12);
  Rng rng(13);
  const auto data = oracle::random_matrix(100, 8, rng);
  ev::EvalReport r;
  r.model_digest = md::digest(p);
  r.data_digest = saekit::dataio::digest(data);
  const std::vector<std::size_t> grid{2, 4};
  r.entries = ev::sweep(p, data, grid, ev::InferenceMode::kJumpRelu);
  r.cosine_profile = ev::cosine_profile(p, data, 4);
  r.distributions = ev::activation_distributions(p, data, 4);
  r.comparison = ev::compare_inference_modes(p, data, 4);

  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["format"] == "saekit-eval-report");
  CHECK(j["sweep"].size() == 2);
  CHECK(j["sweep"][1]["k"] == 4);
  CHECK(j["sweep"][0]["mode"] == "jumprelu");
  CHECK(j["sweep"][0].contains("theta"));
  CHECK(j["sweep"][0]["fvu"].get<double>() == r.entries[0].fvu);
  CHECK(j["cosine_profile"].size() == 4);
  CHECK(j["frequency_histogram"]["counts"].size() == 64);
  CHECK(j["comparison"]["difference"].get<double>() == r.comparison->difference());
  CHECK(r.to_json() == r.to_json());

  const auto csv = r.to_csv();
  CHECK(csv.rfind("mode,k,l0,fvu\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("\njumprelu,4,") != std::string::npos);
}
