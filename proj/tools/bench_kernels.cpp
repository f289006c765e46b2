// Times the OpenMP kernels against the serial reference implementations and
// checks that both produce bitwise-identical outputs while doing so.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rootscore/kernels.hpp"
#include "rootscore/ops.hpp"
#include "rootscore/rng.hpp"
#include "rootscore/tensor.hpp"
#include "rootscore/unet.hpp"

using namespace rootscore;
using namespace rootscore::nn;
namespace k = rootscore::nn::kernels;
using Clock = std::chrono::steady_clock;

namespace {

std::vector<float> random_vec(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

// Runs fn once per iter under each backend, reports ms/iter and whether the
// two backends produced identical bytes.
template <typename Fn>
void bench(const std::string& name, int iters, double flops_per_iter, Fn&& fn) {
  auto run = [&](k::Backend b) {
    k::set_backend(b);
    std::vector<float> out = fn();  // warm once, also the comparison output
    const auto t0 = Clock::now();
    for (int i = 0; i < iters; ++i) out = fn();
    const std::chrono::duration<double> dt = Clock::now() - t0;
    return std::pair{dt.count() / iters, std::move(out)};
  };
  auto [ser_s, ser_out] = run(k::Backend::Serial);
  auto [par_s, par_out] = run(k::Backend::Parallel);
  const bool same =
      ser_out.size() == par_out.size() &&
      std::memcmp(ser_out.data(), par_out.data(),
                  ser_out.size() * sizeof(float)) == 0;
  auto gflops = [&](double s) {
    return flops_per_iter > 0 ? flops_per_iter / s * 1e-9 : 0.0;
  };
  std::printf("%-24s serial %8.2f ms (%6.2f GF/s)  omp %8.2f ms (%6.2f GF/s)  x%.2f  bitwise %s\n",
              name.c_str(), ser_s * 1e3, gflops(ser_s), par_s * 1e3,
              gflops(par_s), ser_s / par_s, same ? "ok" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel benchmark"};
  int threads = 0, iters = 10, side = 64;
  app.add_option("--threads", threads, "0 = library default")
      ->capture_default_str();
  app.add_option("--iters", iters, "iterations per kernel")
      ->capture_default_str();
  app.add_option("--side", side, "spatial side for conv shapes")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  k::set_threads(threads);
  std::printf("threads: %d (0 = OpenMP default)\n", threads);

  const k::ConvShape cs{2, 16, side, side, 16, 3, 1};
  const size_t in_n = static_cast<size_t>(cs.n) * cs.c_in * cs.h * cs.w;
  const size_t w_n = static_cast<size_t>(cs.c_out) * cs.c_in * cs.k * cs.k;
  const size_t out_n =
      static_cast<size_t>(cs.n) * cs.c_out * cs.out_h() * cs.out_w();
  const std::vector<float> in = random_vec(in_n, 1);
  const std::vector<float> wt = random_vec(w_n, 2);
  const std::vector<float> bias = random_vec(cs.c_out, 3);
  const std::vector<float> d_out = random_vec(out_n, 4);
  const double conv_flops = 2.0 * out_n * cs.c_in * cs.k * cs.k;

  bench("conv3x3 forward", iters, conv_flops, [&] {
    std::vector<float> out(out_n);
    k::conv2d_forward(in.data(), wt.data(), bias.data(), out.data(), cs);
    return out;
  });
  bench("conv3x3 grad_input", iters, conv_flops, [&] {
    std::vector<float> d_in(in_n, 0.0f);
    k::conv2d_grad_input(d_out.data(), wt.data(), d_in.data(), cs);
    return d_in;
  });
  bench("conv3x3 grad_weight", iters, conv_flops, [&] {
    std::vector<float> d_w(w_n, 0.0f);
    k::conv2d_grad_weight(d_out.data(), in.data(), d_w.data(), cs);
    return d_w;
  });

  const k::UpconvShape us{2, 32, side / 2, side / 2};
  const size_t uin_n = static_cast<size_t>(us.n) * us.c_in * us.h * us.w;
  const size_t uw_n = static_cast<size_t>(us.c_in) * us.c_out() * 4;
  const size_t uout_n =
      static_cast<size_t>(us.n) * us.c_out() * us.h * 2 * us.w * 2;
  const std::vector<float> uin = random_vec(uin_n, 5);
  const std::vector<float> uw = random_vec(uw_n, 6);
  bench("upconv2x2 forward", iters, 2.0 * uin_n * us.c_out() * 4, [&] {
    std::vector<float> out(uout_n);
    k::upconv2x2_forward(uin.data(), uw.data(), out.data(), us);
    return out;
  });

  // One optimizer-free training step of a small encoder-decoder so the whole
  // op graph (batchnorm, pooling, concat, softmax, dice) gets covered too.
  UnetConfig cfg;
  cfg.input_side = side;
  cfg.depth = 2;
  cfg.base_channels = 8;
  UnetModel model = build_unet(cfg, 42);
  const int nbatch = 2;
  TensorPtr x = make_tensor({nbatch, 3, side, side}, false);
  x->data = random_vec(x->numel(), 7);
  std::vector<uint8_t> cls(static_cast<size_t>(nbatch) * side * side);
  Rng crng(8);
  for (auto& c : cls) c = static_cast<uint8_t>(crng.below(3));
  TensorPtr target = make_tensor({nbatch, 3, side, side}, false);
  for (size_t i = 0; i < cls.size(); ++i) {
    const size_t n = i / (static_cast<size_t>(side) * side);
    const size_t px = i % (static_cast<size_t>(side) * side);
    target->data[(n * 3 + cls[i]) * side * side + px] = 1.0f;
  }
  bench("unet fwd+bwd step", std::max(1, iters / 4), 0.0, [&] {
    for (auto& p : model.parameters()) p->zero_grad();
    Tape tape;
    TensorPtr probs = model.forward(&tape, x, true);
    TensorPtr loss = dice_loss(&tape, probs, target);
    tape.backward(loss);
    std::vector<float> out = loss->data;
    TensorPtr w0 = model.parameters().front();
    out.insert(out.end(), w0->grad.begin(), w0->grad.end());
    return out;
  });
  return 0;
}
