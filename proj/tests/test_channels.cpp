#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "qcomb/channels.hpp"

using namespace qcomb;
using namespace qtest;

namespace {

const std::vector<NoiseVariant> kUncorrelated{NoiseVariant::DephasingParallel, NoiseVariant::DephasingPerp,
                                               NoiseVariant::DampingParallel, NoiseVariant::DampingPerp};

NoiseModelSpec make(NoiseVariant v, double p, double C = 0.0) {
  NoiseModelSpec m;
  m.variant = v;
  m.p = p;
  m.C = C;
  return m;
}

ChoiOperator identity_choi() {
  KrausSet k;
  k.operators = {identity(2)};
  k.d_in = k.d_out = 2;
  return kraus_to_choi(k, operator_labels({{"K1", 2}}), operator_labels({{"H1", 2}}));
}

}  // namespace

TEST_CASE("identity channel Choi is the unnormalized maximally entangled projector") {
  const auto c = identity_choi();
  const ComplexMatrix m = c.tensor.to_operator({"K1", "H1"});
  const Eigen::VectorXcd phi = phi_plus_unnormalized(2);
  CHECK((m - phi * phi.adjoint()).norm() < 1e-15);
  CHECK(m.trace().real() == doctest::Approx(2.0));
  const auto e = herm_eig(m);
  CHECK(e.values(2) == doctest::Approx(0.0));
  CHECK(check_choi(c).ok);
}

TEST_CASE("noiseless parallel dephasing at phi = 0 is the identity channel") {
  const auto ev = ParamChannel(make(NoiseVariant::DephasingParallel, 1.0), ChannelPosition::Single, 1).evaluate(0.0);
  CHECK(max_abs_diff(ev.choi.tensor, identity_choi().tensor) < 1e-15);
}

TEST_CASE("parallel damping Choi spectrum") {
  const auto ev = ParamChannel(make(NoiseVariant::DampingParallel, 0.5), ChannelPosition::Single, 1).evaluate(0.0);
  const auto e = herm_eig(ev.choi.tensor.to_operator());
  CHECK(e.values.sum() == doctest::Approx(2.0));
  CHECK(e.values(0) > -1e-12);
  // Frozen from a direct computation: eigenvalues {0, 0, 1/2, 3/2}.
  CHECK(e.values(2) == doctest::Approx(0.5));
  CHECK(e.values(3) == doctest::Approx(1.5));
}

TEST_CASE("perpendicular damping Kraus operator entrywise") {
  const double p = 0.75;
  const auto k = ParamChannel(make(NoiseVariant::DampingPerp, p), ChannelPosition::Single, 1).kraus(0.0);
  Eigen::Vector2cd plus, minus;
  plus << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  minus << 1 / std::sqrt(2.0), -1 / std::sqrt(2.0);
  const ComplexMatrix k1 = minus * minus.adjoint() + std::sqrt(p) * plus * plus.adjoint();
  const ComplexMatrix k2 = std::sqrt(1 - p) * minus * plus.adjoint();
  REQUIRE(k.operators.size() == 2);
  CHECK((k.operators[0] - k1).norm() < 1e-15);
  CHECK((k.operators[1] - k2).norm() < 1e-15);
}

TEST_CASE("choi_to_kraus round trip") {
  const auto c = identity_choi();
  const auto k = choi_to_kraus(c);
  REQUIRE(k.operators.size() == 1);
  CHECK(std::abs(std::abs(k.operators[0](0, 0)) - 1.0) < 1e-12);
  CHECK(k.completeness_residual() < 1e-10);

  const auto ev = ParamChannel(make(NoiseVariant::DephasingParallel, 0.85), ChannelPosition::Single, 1).evaluate(0.3);
  const auto k2 = choi_to_kraus(ev.choi);
  CHECK(k2.operators.size() == 2);
  CHECK(k2.completeness_residual() < 1e-10);
  const auto back = kraus_to_choi(k2, operator_labels({{"K1", 2}}), operator_labels({{"H1", 2}}));
  CHECK(max_abs_diff(back.tensor, ev.choi.tensor) < 1e-8);

  KrausSet state;
  std::mt19937_64 g(1);
  state.operators = {random_matrix(4, 1, g)};
  state.operators[0] /= state.operators[0].norm();
  state.d_in = 1;
  state.d_out = 4;
  const auto sc = kraus_to_choi(state, operator_labels({{"H1", 2}, {"A1", 2}}), {});
  const auto ks = choi_to_kraus(sc);
  REQUIRE(ks.operators.size() == 1);
  CHECK(ks.operators[0].cols() == 1);
}

TEST_CASE("link product rules") {
  std::mt19937_64 g(7);
  const ComplexMatrix rho = random_density(2, g);
  ChoiOperator state;
  state.tensor = LabeledTensor::from_operator(operator_labels({{"H1", 2}}), rho);
  state.role = ChoiRole::State;
  state.outputs = {"H1"};
  const auto out = link_product(identity_choi(), state, {"H1"});
  CHECK((out.tensor.to_operator() - rho).norm() < 1e-14);
  CHECK(out.role == ChoiRole::State);

  // Rank-one operators link to the rank-one operator of the contracted vectors.
  const ComplexMatrix a = random_matrix(2, 3, g), b = random_matrix(3, 2, g);
  auto vec = [](const ComplexMatrix& m) {
    Eigen::VectorXcd v(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
    return v;
  };
  ChoiOperator A, B;
  A.tensor = LabeledTensor::from_operator(operator_labels({{"x", 2}, {"c", 3}}), vec(a) * vec(a).adjoint());
  B.tensor = LabeledTensor::from_operator(operator_labels({{"c", 3}, {"y", 2}}), vec(b) * vec(b).adjoint());
  const Eigen::VectorXcd ab = vec(a * b);
  CHECK((link_product(A, B, {"c"}).tensor.to_operator({"x", "y"}) - ab * ab.adjoint()).norm() < 1e-12);
  CHECK_THROWS(link_product(A, B, {"z"}));
}

TEST_CASE("link product is associative on random channels") {
  std::mt19937_64 g(8);
  auto random_channel = [&](const std::string& out, const std::string& in) {
    KrausSet k;
    k.d_in = k.d_out = 2;
    const ComplexMatrix w = Eigen::HouseholderQR<ComplexMatrix>(random_matrix(4, 2, g)).householderQ() * ComplexMatrix::Identity(4, 2);
    k.operators = {w.topRows(2), w.bottomRows(2)};
    return kraus_to_choi(k, operator_labels({{out, 2}}), operator_labels({{in, 2}}));
  };
  const auto c1 = random_channel("b", "a"), c2 = random_channel("c", "b"), c3 = random_channel("d", "c");
  CHECK(check_choi(c1).ok);
  const auto left = link_product(link_product(c1, c2, {"b"}), c3, {"c"});
  const auto right = link_product(c1, link_product(c2, c3, {"c"}), {"b"});
  CHECK(max_abs_diff(left.tensor, right.tensor) < 1e-10);
  CHECK(check_choi(left).ok);
}

TEST_CASE("all models are valid channels with correct derivatives") {
  std::mt19937_64 g(13);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<NoiseModelSpec> models;
  for (auto v : kUncorrelated)
    for (double p : {0.0, 0.3, 0.6, 0.85, 1.0}) models.push_back(make(v, p));
  for (double C : {-1.0, -0.75, 0.0, 0.75, 1.0}) models.push_back(make(NoiseVariant::CorrelatedDephasing, 0.85, C));
  for (const auto& m : models) {
    std::vector<ParamChannel> chans;
    for (auto pos : {ChannelPosition::Single, ChannelPosition::First, ChannelPosition::Middle, ChannelPosition::Last}) {
      if (!m.correlated() && pos != ChannelPosition::Single) continue;
      chans.emplace_back(m, pos, 2);
    }
    for (const auto& ch : chans) {
      for (int t = 0; t < 20; ++t) {
        const double phi = u(g), eps = 1e-5;
        const auto ev = ch.evaluate(phi);
        CHECK(check_choi(ev.choi).ok);
        const auto fd = (1.0 / (2 * eps)) * (ch.evaluate(phi + eps).choi.tensor - ch.evaluate(phi - eps).choi.tensor);
        CHECK(max_abs_diff(fd, ev.derivative) < 1e-6);
        const ComplexMatrix d = ev.derivative.to_operator();
        CHECK((d - d.adjoint()).norm() < 1e-12);
        // The derivative of a trace-preserving family has vanishing output trace.
        CHECK(partial_trace(ev.derivative, ev.choi.outputs).norm() < 1e-12);
      }
    }
  }
}

TEST_CASE("correlated model: marginal of one use is parallel dephasing") {
  for (double C : {-0.75, 0.0, 0.5}) {
    const auto m = make(NoiseVariant::CorrelatedDephasing, 0.85, C);
    const auto mid = ParamChannel(m, ChannelPosition::Middle, 2).evaluate(0.4);
    auto half = LabeledTensor::identity_operator(operator_labels({{label_E(1), 2}}));
    half *= 0.5;
    const auto marginal = partial_trace(contract(mid.choi.tensor, half), label_E(2));
    const auto ref = ParamChannel(make(NoiseVariant::DephasingParallel, 0.85), ChannelPosition::Single, 2).evaluate(0.4);
    CHECK(max_abs_diff(marginal, ref.choi.tensor) < 1e-12);
  }
  // p = cos^2(eps/2): the rotation picture reproduces the dephasing Choi operator.
  for (double p : {0.55, 0.85, 0.99}) {
    const double eps = correlated_epsilon(p);
    CHECK(std::cos(eps / 2) * std::cos(eps / 2) == doctest::Approx(p).epsilon(1e-12));
    const auto single = ParamChannel(make(NoiseVariant::CorrelatedDephasing, p, 0.3), ChannelPosition::Single, 1).evaluate(0.2);
    const auto deph = ParamChannel(make(NoiseVariant::DephasingParallel, p), ChannelPosition::Single, 1).evaluate(0.2);
    CHECK(max_abs_diff(single.choi.tensor, deph.choi.tensor) < 1e-10);
  }
}

TEST_CASE("correlated model: first channel is trace preserving and C = 1 locks both rotations") {
  const double p = 0.85, phi = 0.3;
  const auto m = make(NoiseVariant::CorrelatedDephasing, p, 1.0);
  const auto chain = channel_chain(m, 2);
  const auto ev = evaluate_chain(chain, phi);
  CHECK(check_choi(ev[0].choi).ok);
  CHECK(check_choi(ev[1].choi).ok);
  const auto joint = contract(ev[0].choi.tensor, ev[1].choi.tensor);
  const double eps = correlated_epsilon(p);
  ComplexMatrix expect = ComplexMatrix::Zero(16, 16);
  for (double s : {1.0, -1.0}) {
    const ComplexMatrix u = phase_unitary(phi) * phase_unitary(s * eps);
    Eigen::VectorXcd v(4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) v(i * 2 + j) = u(i, j);
    const Eigen::VectorXcd vv = kron(ComplexMatrix(v), ComplexMatrix(v));  // (K1,H1,K2,H2)
    expect += 0.5 * vv * vv.adjoint();
  }
  CHECK((joint.to_operator({"K1", "H1", "K2", "H2"}) - expect).norm() < 1e-12);
  CHECK_THROWS(correlated_first_and_last(make(NoiseVariant::DephasingParallel, p)));
}

TEST_CASE("depolarizing admixture") {
  const auto c = identity_choi();
  CHECK(max_abs_diff(mix_depolarizing(c, 0.0).tensor, c.tensor) == 0.0);
  const auto full = mix_depolarizing(c, 1.0);
  CHECK((full.tensor.to_operator() - 0.5 * identity(4)).norm() < 1e-15);
  CHECK(check_choi(full).ok);
  CHECK(herm_eig(mix_depolarizing(c, 0.1).tensor.to_operator()).values(0) > 0.0);
  CHECK_THROWS(mix_depolarizing(c, 1.5));
}

TEST_CASE("parameter ranges are validated") {
  CHECK_THROWS(make(NoiseVariant::DephasingParallel, 1.2).validate());
  CHECK_THROWS(make(NoiseVariant::CorrelatedDephasing, 0.5, -1.5).validate());
  CHECK(parse_variant("DampingPerp") == NoiseVariant::DampingPerp);
  CHECK_THROWS(parse_variant("Depolarizing"));
}
