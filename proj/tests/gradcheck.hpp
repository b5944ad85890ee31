#pragma once

// Central-finite-difference gradient checking shared by the core test suite
// and the acceptance harness. Works on double tensors: builds the graph once
// for analytic gradients, then rebuilds the forward around each perturbed
// element.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mmtk/ops.hpp"
#include "mmtk/rng.hpp"
#include "mmtk/tensor.hpp"

namespace gradcheck {

using DTensor = mmtk::Tensor<double>;

inline DTensor random_tensor(const mmtk::Shape& shape, mmtk::Rng& rng,
                             bool requires_grad = true, double lo = -1.0,
                             double hi = 1.0) {
  std::vector<double> v(mmtk::shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return DTensor::from(shape, std::move(v), requires_grad);
}

// fixed random weights turn any tensor into a scalar with distinct
// per-element gradients
inline DTensor weighted_sum(const DTensor& x, mmtk::Rng& rng) {
  DTensor w = random_tensor(x.shape(), rng, false, 0.1, 1.0);
  return mmtk::ops::sum_all(mmtk::ops::mul(x, w));
}

// max mixed absolute/relative error between analytic and central-difference
// gradients over every element of every grad-enabled input
inline double max_grad_err(
    const std::function<DTensor(const std::vector<DTensor>&)>& f,
    std::vector<DTensor> inputs, double h = 1e-5) {
  DTensor out = f(inputs);
  out.backward();
  std::vector<std::vector<double>> analytic;
  for (const DTensor& in : inputs) {
    analytic.push_back(in.requires_grad() ? in.grad()
                                          : std::vector<double>{});
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    DTensor& in = inputs[i];
    if (!in.requires_grad()) continue;
    for (std::size_t j = 0; j < in.numel(); ++j) {
      const double keep = in.data()[j];
      in.data()[j] = keep + h;
      const double up = f(inputs).item();
      in.data()[j] = keep - h;
      const double dn = f(inputs).item();
      in.data()[j] = keep;
      const double num = (up - dn) / (2.0 * h);
      const double ana = analytic[i][j];
      const double scale = std::max({1.0, std::abs(num), std::abs(ana)});
      worst = std::max(worst, std::abs(num - ana) / scale);
    }
  }
  return worst;
}

// One named gradient check per differentiable op, shapes kept at or below 64
// elements. Returns the worst error seen; `report` receives (name, err).
inline double check_all_ops(
    const std::function<void(const char*, double)>& report) {
  namespace ops = mmtk::ops;
  mmtk::Rng rng(2024);
  double worst = 0.0;
  auto run = [&](const char* name,
                 const std::function<DTensor(const std::vector<DTensor>&)>& f,
                 std::vector<DTensor> inputs) {
    const double err = max_grad_err(f, std::move(inputs));
    worst = std::max(worst, err);
    report(name, err);
  };

  mmtk::Rng wrng(77);  // weights for scalarization, fixed across rebuilds
  auto reduce = [&wrng](const DTensor& x) {
    mmtk::Rng local = wrng;  // same weights on every rebuild
    return weighted_sum(x, local);
  };

  run("add",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::add(in[0], in[1]));
      },
      {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});

  run("mul",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::mul(in[0], in[1]));
      },
      {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});

  run("affine",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::affine(in[0], 1.7, -0.3));
      },
      {random_tensor({2, 5}, rng)});

  run("add_bias",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::add_bias(in[0], in[1]));
      },
      {random_tensor({2, 3, 4}, rng), random_tensor({4}, rng)});

  {
    // keep every element at least 0.1 away from the ReLU kink
    DTensor x = random_tensor({4, 4}, rng);
    for (double& v : x.data()) v += (v >= 0.0 ? 0.1 : -0.1);
    run("relu",
        [&](const std::vector<DTensor>& in) {
          return reduce(ops::relu(in[0]));
        },
        {x});
  }

  run("sigmoid",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::sigmoid(in[0]));
      },
      {random_tensor({3, 3}, rng, true, -3.0, 3.0)});

  run("log",
      [&](const std::vector<DTensor>& in) { return reduce(ops::log(in[0])); },
      {random_tensor({3, 3}, rng, true, 0.5, 2.0)});

  run("exp",
      [&](const std::vector<DTensor>& in) { return reduce(ops::exp(in[0])); },
      {random_tensor({3, 3}, rng, true, -1.0, 1.0)});

  {
    // values inside and outside [-0.5, 0.5], all 0.05+ from the boundaries
    DTensor x = random_tensor({4, 4}, rng, true, -0.4, 0.4);
    x.data()[0] = -0.9;
    x.data()[1] = 0.8;
    x.data()[2] = 0.6;
    run("clamp",
        [&](const std::vector<DTensor>& in) {
          return reduce(ops::clamp(in[0], -0.5, 0.5));
        },
        {x});
  }

  run("matmul",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::matmul(in[0], in[1]));
      },
      {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)});

  run("matmul_batched",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::matmul(in[0], in[1]));
      },
      {random_tensor({2, 3, 4}, rng), random_tensor({4, 2}, rng)});

  run("linear",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::linear(in[0], in[1], in[2]));
      },
      {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng),
       random_tensor({2}, rng)});

  run("bmm",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::bmm(in[0], in[1]));
      },
      {random_tensor({2, 3, 4}, rng), random_tensor({2, 4, 2}, rng)});

  run("bmm_nt",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::bmm_nt(in[0], in[1]));
      },
      {random_tensor({2, 3, 4}, rng), random_tensor({2, 5, 4}, rng)});

  run("softmax_axis0",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::softmax(in[0], 0));
      },
      {random_tensor({3, 4}, rng, true, -2.0, 2.0)});

  run("softmax_axis1",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::softmax(in[0], 1));
      },
      {random_tensor({3, 4}, rng, true, -2.0, 2.0)});

  run("softmax_axis2",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::softmax(in[0], 2));
      },
      {random_tensor({2, 3, 4}, rng, true, -2.0, 2.0)});

  run("concat",
      [&](const std::vector<DTensor>& in) {
        const std::vector<DTensor> parts{in[0], in[1], in[2]};
        return reduce(ops::concat(parts, 1));
      },
      {random_tensor({2, 2}, rng), random_tensor({2, 3}, rng),
       random_tensor({2, 1}, rng)});

  run("reshape",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::reshape(in[0], {3, 4}));
      },
      {random_tensor({2, 6}, rng)});

  run("transpose12",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::transpose12(in[0]));
      },
      {random_tensor({2, 3, 4}, rng)});

  run("mean_all",
      [&](const std::vector<DTensor>& in) { return ops::mean_all(in[0]); },
      {random_tensor({3, 5}, rng)});

  run("sum_all",
      [&](const std::vector<DTensor>& in) { return ops::sum_all(in[0]); },
      {random_tensor({3, 5}, rng)});

  run("mean_tokens",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::mean_tokens(in[0]));
      },
      {random_tensor({2, 3, 4}, rng)});

  run("conv2d",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::conv2d(in[0], in[1], in[2], 2, 1, 1, 0));
      },
      {random_tensor({1, 2, 5, 5}, rng), random_tensor({2, 2, 3, 3}, rng),
       random_tensor({2}, rng)});

  run("conv2d_nobias",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::conv2d(in[0], in[1], DTensor(), 1, 1, 0, 0));
      },
      {random_tensor({1, 2, 4, 4}, rng), random_tensor({2, 2, 3, 3}, rng)});

  run("conv3d",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::conv3d(in[0], in[1], in[2], 1, 2, 1, 1, 1, 0));
      },
      {random_tensor({1, 1, 3, 4, 4}, rng),
       random_tensor({2, 1, 2, 3, 3}, rng), random_tensor({2}, rng)});

  run("maxpool2d",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::maxpool2d(in[0], 3, 3, 2, 2, 1, 1));
      },
      {random_tensor({1, 2, 5, 6}, rng)});

  run("maxpool3d",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::maxpool3d(in[0], 2, 2, 2, 1, 2, 2));
      },
      {random_tensor({1, 1, 3, 4, 4}, rng)});

  run("adaptive_avg2d",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::adaptive_avg2d(in[0], 2, 3));
      },
      {random_tensor({1, 2, 5, 7}, rng)});

  run("adaptive_avg3d",
      [&](const std::vector<DTensor>& in) {
        return reduce(ops::adaptive_avg3d(in[0], 2, 2, 2));
      },
      {random_tensor({1, 1, 3, 5, 4}, rng)});

  run("batch_norm_train",
      [&](const std::vector<DTensor>& in) {
        DTensor rm = DTensor::zeros({3});
        DTensor rv = DTensor::full({3}, 1.0);
        return reduce(ops::batch_norm(in[0], in[1], in[2], rm, rv, 0.1, 1e-5,
                                      mmtk::Mode::kTrain));
      },
      {random_tensor({4, 3, 2}, rng), random_tensor({3}, rng, true, 0.5, 1.5),
       random_tensor({3}, rng)});

  run("batch_norm_eval",
      [&](const std::vector<DTensor>& in) {
        DTensor rm = DTensor::from({3}, {0.1, -0.2, 0.3});
        DTensor rv = DTensor::from({3}, {0.9, 1.1, 1.3});
        return reduce(ops::batch_norm(in[0], in[1], in[2], rm, rv, 0.1, 1e-5,
                                      mmtk::Mode::kEval));
      },
      {random_tensor({4, 3, 2}, rng), random_tensor({3}, rng, true, 0.5, 1.5),
       random_tensor({3}, rng)});

  run("dropout",
      [&](const std::vector<DTensor>& in) {
        mmtk::Rng drng(5);  // identical mask on every rebuild
        return reduce(ops::dropout(in[0], 0.3, mmtk::Mode::kTrain, drng));
      },
      {random_tensor({4, 4}, rng)});

  return worst;
}

// Small end-to-end double-precision network: conv -> batch norm -> relu ->
// pool -> linear -> sigmoid -> binary cross-entropy. Checks a sample of
// `sample` parameter coordinates against central differences.
inline double check_end_to_end(int sample, double h = 1e-5) {
  namespace ops = mmtk::ops;
  mmtk::Rng rng(99);
  DTensor x = random_tensor({2, 1, 6, 6}, rng, false);
  DTensor y = DTensor::from({2}, {1.0, 0.0});

  DTensor w1 = random_tensor({3, 1, 3, 3}, rng, true, -0.5, 0.5);
  DTensor b1 = random_tensor({3}, rng, true, -0.1, 0.1);
  DTensor gamma = random_tensor({3}, rng, true, 0.8, 1.2);
  DTensor beta = random_tensor({3}, rng, true, -0.1, 0.1);
  DTensor w2 = random_tensor({12, 4}, rng, true, -0.5, 0.5);
  DTensor b2 = random_tensor({4}, rng, true, -0.1, 0.1);
  DTensor w3 = random_tensor({4, 1}, rng, true, -0.5, 0.5);
  DTensor b3 = random_tensor({1}, rng, true, -0.1, 0.1);
  std::vector<DTensor> params{w1, b1, gamma, beta, w2, b2, w3, b3};

  auto loss = [&]() {
    DTensor rm = DTensor::zeros({3});
    DTensor rv = DTensor::full({3}, 1.0);
    DTensor h1 = ops::conv2d(x, w1, b1, 1, 1, 1, 1);          // [2,3,6,6]
    DTensor h2 = ops::batch_norm(h1, gamma, beta, rm, rv, 0.1, 1e-5,
                                 mmtk::Mode::kTrain);
    DTensor h3 = ops::maxpool2d(ops::relu(h2), 3, 3, 3, 3);   // [2,3,2,2]
    DTensor h4 = ops::reshape(h3, {2, 12});
    DTensor h5 = ops::relu(ops::linear(h4, w2, b2));
    DTensor p = ops::sigmoid(ops::linear(h5, w3, b3));        // [2,1]
    DTensor pc = ops::clamp(ops::reshape(p, {2}), 1e-7, 1.0 - 1e-7);
    DTensor term =
        ops::add(ops::mul(y, ops::log(pc)),
                 ops::mul(ops::affine(y, -1.0, 1.0),
                          ops::log(ops::affine(pc, -1.0, 1.0))));
    return ops::affine(ops::mean_all(term), -1.0, 0.0);
  };

  DTensor out = loss();
  out.backward();
  std::vector<std::vector<double>> analytic;
  for (const DTensor& p : params) analytic.push_back(p.grad());

  std::size_t total = 0;
  for (const DTensor& p : params) total += p.numel();
  mmtk::Rng pick(4321);
  double worst = 0.0;
  for (int s = 0; s < sample; ++s) {
    auto flat = static_cast<std::size_t>(
        pick.uniform_int(0, static_cast<std::int64_t>(total) - 1));
    std::size_t pi = 0;
    while (flat >= params[pi].numel()) {
      flat -= params[pi].numel();
      ++pi;
    }
    DTensor& p = params[pi];
    const double keep = p.data()[flat];
    p.data()[flat] = keep + h;
    const double up = loss().item();
    p.data()[flat] = keep - h;
    const double dn = loss().item();
    p.data()[flat] = keep;
    const double num = (up - dn) / (2.0 * h);
    const double ana = analytic[pi][flat];
    const double scale = std::max({1.0, std::abs(num), std::abs(ana)});
    worst = std::max(worst, std::abs(num - ana) / scale);
  }
  return worst;
}

}  // namespace gradcheck
