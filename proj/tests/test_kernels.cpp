#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "cavlab/cav.hpp"
#include "cavlab/datagen.hpp"
#include "cavlab/kernels.hpp"
#include "cavlab/mlp.hpp"
#include "test_util.hpp"

using namespace cavlab;
namespace k = cavlab::kernels;

namespace {

// Independent statement of the documented reduction order.
double canonical_sum(const std::vector<double>& terms) {
  const std::size_t n4 = terms.size() / 4 * 4;
  double lane[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n4; ++i) lane[i % 4] += terms[i];
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = n4; i < terms.size(); ++i) s += terms[i];
  return s;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

std::vector<const k::KernelTable*> tables() {
  std::vector<const k::KernelTable*> out{&k::scalar()};
  if (k::avx2()) out.push_back(k::avx2());
  if (k::neon()) out.push_back(k::neon());
  return out;
}

struct RestoreKernels {
  std::string name{k::active().name};
  ~RestoreKernels() { k::select(name); }
};

}  // namespace

TEST_CASE("scalar kernels follow the canonical reduction order") {
  Rng rng(11);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 13u, 64u, 67u, 1001u}) {
    const Vector a = testing::random_vector(n, rng, 1e3);
    const Vector b = testing::random_vector(n, rng);
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) prod[i] = a[i] * b[i];
    CHECK(same_bits(k::scalar().dot(a.data(), b.data(), n), canonical_sum(prod)));
    CHECK(same_bits(k::scalar().sum(a.data(), n), canonical_sum(a)));
  }
}

TEST_CASE("every available kernel variant is bit-identical to the scalar reference") {
  Rng rng(12);
  const auto& ref = k::scalar();
  for (const k::KernelTable* t : tables()) {
    CAPTURE(std::string(t->name));
    for (std::size_t n = 0; n < 70; ++n) {
      // Wide dynamic range makes any reordering visible.
      Vector a = testing::random_vector(n, rng);
      for (std::size_t i = 0; i < n; i += 3) a[i] *= 1e12;
      const Vector b = testing::random_vector(n, rng);
      CHECK(same_bits(t->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n)));
      CHECK(same_bits(t->sum(a.data(), n), ref.sum(a.data(), n)));

      Vector y1 = b, y2 = b;
      t->axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      CHECK(y1 == y2);

      Vector s1 = a, s2 = a;
      t->scal(-1.7, s1.data(), n);
      ref.scal(-1.7, s2.data(), n);
      CHECK(s1 == s2);

      Vector d1(n), d2(n);
      t->sub(a.data(), b.data(), d1.data(), n);
      ref.sub(a.data(), b.data(), d2.data(), n);
      CHECK(d1 == d2);
    }
  }
}

TEST_CASE("kernel selection") {
  RestoreKernels restore;
  CHECK(k::select("scalar"));
  CHECK(k::active().name == "scalar");
  CHECK_FALSE(k::select("no-such-kernel"));
  CHECK(k::active().name == "scalar");
  CHECK(k::select("avx2") == (k::avx2() != nullptr));
  CHECK(k::select("neon") == (k::neon() != nullptr));
}

TEST_CASE("environment override is honored at startup") {
  const char* env = std::getenv("CAVLAB_KERNELS");
  // Earlier cases restore the startup choice when they finish.
  if (env && std::string(env) == "scalar") CHECK(k::active().name == "scalar");
  if (!env && k::avx2()) CHECK(k::active().name == "avx2");
}

TEST_CASE("CAV and MLP pipeline is bit-identical across kernel variants") {
  RestoreKernels restore;
  const GmmSpec spec = GmmSpec::symmetric(37, 1.0, 1.0, 41, 43, 5);
  const LabeledActivations acts = sample_gmm(spec);
  const std::vector<std::size_t> sizes{37, 19, 11, 3};
  const MlpModel model = MlpModel::initialize(sizes, Activation::Tanh, 9);
  const Vector x = acts.data.column(0);

  struct Run {
    Vector ridge, pattern, grad, logits;
    double eta;
  };
  auto run = [&] {
    const Cav r = ridge_cav(acts, RidgeConfig{0.3});
    return Run{r.w, pattern_cav(acts).w, grad_head_wrt_activation(model, forward_to_layer(model, x, 1), 1, 2),
               logits(model, x), r.eta};
  };
  REQUIRE(k::select("scalar"));
  const Run ref = run();
  for (const k::KernelTable* t : tables()) {
    CAPTURE(std::string(t->name));
    REQUIRE(k::select(t->name));
    const Run got = run();
    CHECK(got.ridge == ref.ridge);
    CHECK(got.pattern == ref.pattern);
    CHECK(got.grad == ref.grad);
    CHECK(got.logits == ref.logits);
    CHECK(same_bits(got.eta, ref.eta));
  }
}
