#pragma once

#include <string>
#include <vector>

#include "nav3d/layers.hpp"
#include "nav3d/pomdp_env.hpp"
#include "nav3d/tensor.hpp"

namespace nav3d::nn {

// Network shape knobs. `paper` mirrors the published architecture; `desk` is
// the small preset used for fast CPU runs; `gradcheck` is small enough for
// finite-difference validation of every parameter.
struct ArchConfig {
  int num_actions = 28;
  int map_size = 60;
  int frames = 3;  // costmap frames stacked as conv input channels
  int c1 = 32, c2 = 64, c3 = 64;
  int k1 = 8, s1 = 4;
  int k2 = 4, s2 = 2;
  int k3 = 3, s3 = 1;
  int proj = 64;    // width of each of the goal/velocity projections
  int hidden = 512; // LSTM hidden size (or trunk FC width when use_lstm=false)
  int fc1 = 256, fc2 = 128;
  bool use_lstm = true;

  static ArchConfig paper() { return ArchConfig{}; }

  static ArchConfig desk() {
    ArchConfig a;
    a.c1 = 8; a.c2 = 16; a.c3 = 16;
    a.proj = 16;
    a.hidden = 32;
    a.fc1 = 64; a.fc2 = 32;
    return a;
  }

  static ArchConfig gradcheck() {
    ArchConfig a;
    a.map_size = 36;
    a.c1 = 8; a.c2 = 8; a.c3 = 8;
    a.proj = 8;
    a.hidden = 16;
    a.fc1 = 16; a.fc2 = 16;
    return a;
  }

  // Single-frame, recurrence-free variant of this architecture.
  ArchConfig without_lstm() const {
    ArchConfig a = *this;
    a.use_lstm = false;
    a.frames = 1;
    return a;
  }

  std::vector<int> encode() const {
    return {1, num_actions, map_size, frames, c1, c2, c3, k1, s1, k2, s2, k3, s3,
            proj, hidden, fc1, fc2, use_lstm ? 1 : 0};
  }
  static ArchConfig decode(const std::vector<int>& v);
  bool operator==(const ArchConfig& o) const { return encode() == o.encode(); }
};

inline ArchConfig ArchConfig::decode(const std::vector<int>& v) {
  if (v.size() != 18 || v[0] != 1) {
    throw std::runtime_error("architecture metadata: unsupported layout");
  }
  ArchConfig a;
  a.num_actions = v[1]; a.map_size = v[2]; a.frames = v[3];
  a.c1 = v[4]; a.c2 = v[5]; a.c3 = v[6];
  a.k1 = v[7]; a.s1 = v[8]; a.k2 = v[9]; a.s2 = v[10]; a.k3 = v[11]; a.s3 = v[12];
  a.proj = v[13]; a.hidden = v[14]; a.fc1 = v[15]; a.fc2 = v[16];
  a.use_lstm = v[17] != 0;
  return a;
}

// One normalized network input sample.
template <typename S>
struct NetInput {
  std::vector<S> map;  // frames * map_size * map_size, values in [0, 1]
  S goal[2] = {S(0), S(0)};
  S vel[2] = {S(0), S(0)};
};

// Maps a raw observation onto network inputs. Uses the newest `frames` maps
// of the stack (oldest first), scaled to [0,1]; goal and velocities scaled by
// their physical maxima.
template <typename S>
NetInput<S> encode_observation(const env::Observation& obs, int frames) {
  constexpr int N = env::Observation::kMapSize;
  NetInput<S> in;
  in.map.resize(static_cast<std::size_t>(frames) * N * N);
  const int skip = env::Observation::kFrames - frames;
  for (int f = 0; f < frames; ++f) {
    const auto& img = obs.frames[skip + f];
    S* dst = in.map.data() + static_cast<std::size_t>(f) * N * N;
    for (int i = 0; i < N * N; ++i) dst[i] = static_cast<S>(img.pixels[i]) / S(255);
  }
  in.goal[0] = static_cast<S>(obs.goal.rho / env::kGoalDistNorm);
  in.goal[1] = static_cast<S>(obs.goal.phi / M_PI);
  in.vel[0] = static_cast<S>(obs.v / env::kMaxLinear);
  in.vel[1] = static_cast<S>(obs.w / env::kMaxAngular);
  return in;
}

template <typename S>
struct RecurrentState {
  std::vector<S> h, c;
  void reset(int hidden) {
    h.assign(hidden, S(0));
    c.assign(hidden, S(0));
  }
};

// Everything the backward pass needs from one forward step.
template <typename S>
struct StepCache {
  NetInput<S> in;
  std::vector<S> col1, col2, col3;  // im2col matrices
  std::vector<S> x1, x2, x3;        // post-ReLU conv activations
  std::vector<S> pg, pv;            // post-ReLU projections
  std::vector<S> z;                 // concat(flatten(x3), pg, pv)
  LstmCache<S> lstm;
  std::vector<S> u;                 // recurrent output h (or trunk activation)
  std::vector<S> y1, y2;            // post-ReLU FC activations
  bool has_heads = false;
};

template <typename S>
int argmax(const std::vector<S>& q) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(q.size()); ++i) {
    if (q[i] > q[best]) best = i;
  }
  return best;
}

// The full Q-network: conv tower over the costmap stack, linear projections
// of the goal/velocity vectors, a recurrent (or plain FC) trunk, two FC
// layers, and dueling value/advantage heads.
template <typename S>
class QNetwork {
 public:
  explicit QNetwork(const ArchConfig& arch) : arch_(arch) {
    d1_ = ConvDims(arch.frames, arch.map_size, arch.map_size, arch.c1, arch.k1, arch.s1);
    d2_ = ConvDims(arch.c1, d1_.ho, d1_.wo, arch.c2, arch.k2, arch.s2);
    d3_ = ConvDims(arch.c2, d2_.ho, d2_.wo, arch.c3, arch.k3, arch.s3);
  }

  const ArchConfig& arch() const { return arch_; }
  int flat_dim() const { return arch_.c3 * d3_.ho * d3_.wo; }
  int trunk_in_dim() const { return flat_dim() + 2 * arch_.proj; }

  Params<S>& params() { return params_; }
  const Params<S>& params() const { return params_; }

  void init(std::uint64_t seed) {
    params_.clear();
    std::uint64_t salt = 0;
    auto he = [&](const std::string& name, std::vector<int> shape, int fan_in) {
      Tensor<S> t(std::move(shape));
      Rng rng(mix_seed(seed, salt++));
      const double limit = std::sqrt(6.0 / fan_in);
      for (auto& x : t.v) x = static_cast<S>(rng.uniform(-limit, limit));
      params_.emplace(name, std::move(t));
    };
    auto zeros = [&](const std::string& name, std::vector<int> shape) {
      params_.emplace(name, Tensor<S>(std::move(shape)));
    };

    he("conv1/w", {arch_.c1, arch_.frames, arch_.k1, arch_.k1}, d1_.patch());
    zeros("conv1/b", {arch_.c1});
    he("conv2/w", {arch_.c2, arch_.c1, arch_.k2, arch_.k2}, d2_.patch());
    zeros("conv2/b", {arch_.c2});
    he("conv3/w", {arch_.c3, arch_.c2, arch_.k3, arch_.k3}, d3_.patch());
    zeros("conv3/b", {arch_.c3});
    he("proj_goal/w", {arch_.proj, 2}, 2);
    zeros("proj_goal/b", {arch_.proj});
    he("proj_vel/w", {arch_.proj, 2}, 2);
    zeros("proj_vel/b", {arch_.proj});

    const int D = trunk_in_dim();
    const int H = arch_.hidden;
    if (arch_.use_lstm) {
      // One semi-orthogonal block per gate, stacked in i,f,g,o order.
      Tensor<S> W({4 * H, D + H});
      for (int g = 0; g < 4; ++g) {
        Tensor<S> block = orthogonal_init<S>(H, D + H, mix_seed(seed, salt++));
        std::copy(block.v.begin(), block.v.end(),
                  W.v.begin() + static_cast<std::size_t>(g) * H * (D + H));
      }
      params_.emplace("lstm/w", std::move(W));
      Tensor<S> b({4 * H});
      for (int j = 0; j < H; ++j) b[H + j] = S(1);  // forget-gate bias
      params_.emplace("lstm/b", std::move(b));
    } else {
      he("trunk/w", {H, D}, D);
      zeros("trunk/b", {H});
    }

    he("fc1/w", {arch_.fc1, H}, H);
    zeros("fc1/b", {arch_.fc1});
    he("fc2/w", {arch_.fc2, arch_.fc1}, arch_.fc1);
    zeros("fc2/b", {arch_.fc2});
    he("value/w", {1, arch_.fc2}, arch_.fc2);
    zeros("value/b", {1});
    he("adv/w", {arch_.num_actions, arch_.fc2}, arch_.fc2);
    zeros("adv/b", {arch_.num_actions});
  }

  Params<S> zero_grads() const {
    Params<S> g;
    for (const auto& [name, t] : params_) g.emplace(name, Tensor<S>(t.shape));
    return g;
  }

  // Runs one step. Updates `state` in place (no-op without LSTM). When
  // `with_heads` is false only the trunk runs (recurrent warm-up) and `q` is
  // left empty. `cache` may be null for inference.
  void forward(const NetInput<S>& in, RecurrentState<S>& state, std::vector<S>& q,
               StepCache<S>* cache = nullptr, bool with_heads = true) const {
    const int H = arch_.hidden;
    if (in.map.size() != static_cast<std::size_t>(arch_.frames) * arch_.map_size *
                             arch_.map_size) {
      throw std::invalid_argument("QNetwork::forward: input map size mismatch");
    }
    StepCache<S> local;
    StepCache<S>& cc = cache != nullptr ? *cache : local;
    cc.has_heads = with_heads;

    cc.x1.resize(static_cast<std::size_t>(arch_.c1) * d1_.positions());
    conv2d_forward(in.map.data(), params_.at("conv1/w"), params_.at("conv1/b"), d1_,
                   cc.x1.data(), &cc.col1);
    relu_inplace(cc.x1.data(), static_cast<int>(cc.x1.size()));

    cc.x2.resize(static_cast<std::size_t>(arch_.c2) * d2_.positions());
    conv2d_forward(cc.x1.data(), params_.at("conv2/w"), params_.at("conv2/b"), d2_,
                   cc.x2.data(), &cc.col2);
    relu_inplace(cc.x2.data(), static_cast<int>(cc.x2.size()));

    cc.x3.resize(static_cast<std::size_t>(arch_.c3) * d3_.positions());
    conv2d_forward(cc.x2.data(), params_.at("conv3/w"), params_.at("conv3/b"), d3_,
                   cc.x3.data(), &cc.col3);
    relu_inplace(cc.x3.data(), static_cast<int>(cc.x3.size()));

    cc.pg.resize(arch_.proj);
    fc_forward(params_.at("proj_goal/w"), params_.at("proj_goal/b"), in.goal, cc.pg.data());
    relu_inplace(cc.pg.data(), arch_.proj);
    cc.pv.resize(arch_.proj);
    fc_forward(params_.at("proj_vel/w"), params_.at("proj_vel/b"), in.vel, cc.pv.data());
    relu_inplace(cc.pv.data(), arch_.proj);

    const int D = trunk_in_dim();
    cc.z.resize(D);
    std::copy(cc.x3.begin(), cc.x3.end(), cc.z.begin());
    std::copy(cc.pg.begin(), cc.pg.end(), cc.z.begin() + flat_dim());
    std::copy(cc.pv.begin(), cc.pv.end(), cc.z.begin() + flat_dim() + arch_.proj);

    cc.u.resize(H);
    if (arch_.use_lstm) {
      // An empty state means "start of sequence"; anything else must match.
      if (state.h.empty() && state.c.empty()) state.reset(H);
      if (static_cast<int>(state.h.size()) != H || static_cast<int>(state.c.size()) != H) {
        throw std::invalid_argument("QNetwork::forward: recurrent state size mismatch");
      }
      std::vector<S> c_new(H);
      lstm_forward(params_.at("lstm/w"), params_.at("lstm/b"), cc.z.data(), D, state.h.data(),
                   state.c.data(), H, cc.u.data(), c_new.data(),
                   cache != nullptr ? &cc.lstm : nullptr);
      state.h = cc.u;
      state.c = std::move(c_new);
    } else {
      fc_forward(params_.at("trunk/w"), params_.at("trunk/b"), cc.z.data(), cc.u.data());
      relu_inplace(cc.u.data(), H);
    }

    if (!with_heads) {
      q.clear();
      if (cache != nullptr) cc.in = in;
      return;
    }

    cc.y1.resize(arch_.fc1);
    fc_forward(params_.at("fc1/w"), params_.at("fc1/b"), cc.u.data(), cc.y1.data());
    relu_inplace(cc.y1.data(), arch_.fc1);
    cc.y2.resize(arch_.fc2);
    fc_forward(params_.at("fc2/w"), params_.at("fc2/b"), cc.y1.data(), cc.y2.data());
    relu_inplace(cc.y2.data(), arch_.fc2);

    S V;
    fc_forward(params_.at("value/w"), params_.at("value/b"), cc.y2.data(), &V);
    std::vector<S> A(arch_.num_actions);
    fc_forward(params_.at("adv/w"), params_.at("adv/b"), cc.y2.data(), A.data());
    q.resize(arch_.num_actions);
    dueling_combine(V, A.data(), arch_.num_actions, q.data());
    if (cache != nullptr) cc.in = in;
  }

  // Backward through one cached step. `dq` may be null on recurrent warm-up
  // steps (gradient then enters only through dh/dc). dh/dc are the gradients
  // w.r.t. this step's recurrent outputs; on return they hold the gradients
  // w.r.t. the previous step's state. Gradients accumulate into `grads`.
  void backward(const StepCache<S>& cc, const S* dq, std::vector<S>& dh, std::vector<S>& dc,
                Params<S>& grads) const {
    const int H = arch_.hidden;
    const int D = trunk_in_dim();
    std::vector<S> du(H, S(0));
    if (arch_.use_lstm) {
      for (int i = 0; i < H; ++i) du[i] = dh[i];
    }

    if (dq != nullptr) {
      if (!cc.has_heads) throw std::logic_error("backward: cache lacks head activations");
      S dV = S(0);
      std::vector<S> dA(arch_.num_actions, S(0));
      dueling_backward(dq, arch_.num_actions, &dV, dA.data());

      std::vector<S> dy2(arch_.fc2, S(0));
      fc_backward(params_.at("value/w"), cc.y2.data(), &dV, grads.at("value/w"),
                  grads.at("value/b"), dy2.data());
      fc_backward(params_.at("adv/w"), cc.y2.data(), dA.data(), grads.at("adv/w"),
                  grads.at("adv/b"), dy2.data());
      relu_backward(cc.y2.data(), dy2.data(), arch_.fc2);

      std::vector<S> dy1(arch_.fc1, S(0));
      fc_backward(params_.at("fc2/w"), cc.y1.data(), dy2.data(), grads.at("fc2/w"),
                  grads.at("fc2/b"), dy1.data());
      relu_backward(cc.y1.data(), dy1.data(), arch_.fc1);

      fc_backward(params_.at("fc1/w"), cc.u.data(), dy1.data(), grads.at("fc1/w"),
                  grads.at("fc1/b"), du.data());
    }

    std::vector<S> dz(D, S(0));
    if (arch_.use_lstm) {
      std::vector<S> dh_prev(H), dc_prev(H);
      lstm_backward(params_.at("lstm/w"), cc.lstm, D, H, du.data(), dc.data(),
                    grads.at("lstm/w"), grads.at("lstm/b"), dz.data(), dh_prev.data(),
                    dc_prev.data());
      dh = std::move(dh_prev);
      dc = std::move(dc_prev);
    } else {
      relu_backward(cc.u.data(), du.data(), H);
      fc_backward(params_.at("trunk/w"), cc.z.data(), du.data(), grads.at("trunk/w"),
                  grads.at("trunk/b"), dz.data());
    }

    // Split dz into the conv flatten and the two projections.
    const int F = flat_dim();
    std::vector<S> dpg(dz.begin() + F, dz.begin() + F + arch_.proj);
    std::vector<S> dpv(dz.begin() + F + arch_.proj, dz.end());
    relu_backward(cc.pg.data(), dpg.data(), arch_.proj);
    relu_backward(cc.pv.data(), dpv.data(), arch_.proj);
    fc_backward(params_.at("proj_goal/w"), cc.in.goal, dpg.data(), grads.at("proj_goal/w"),
                grads.at("proj_goal/b"), static_cast<S*>(nullptr));
    fc_backward(params_.at("proj_vel/w"), cc.in.vel, dpv.data(), grads.at("proj_vel/w"),
                grads.at("proj_vel/b"), static_cast<S*>(nullptr));

    std::vector<S> dx3(dz.begin(), dz.begin() + F);
    relu_backward(cc.x3.data(), dx3.data(), F);
    std::vector<S> dx2(cc.x2.size(), S(0));
    std::vector<S> scratch;
    conv2d_backward(params_.at("conv3/w"), cc.col3.data(), dx3.data(), d3_,
                    grads.at("conv3/w"), grads.at("conv3/b"), dx2.data(), scratch);
    relu_backward(cc.x2.data(), dx2.data(), static_cast<int>(dx2.size()));
    std::vector<S> dx1(cc.x1.size(), S(0));
    conv2d_backward(params_.at("conv2/w"), cc.col2.data(), dx2.data(), d2_,
                    grads.at("conv2/w"), grads.at("conv2/b"), dx1.data(), scratch);
    relu_backward(cc.x1.data(), dx1.data(), static_cast<int>(dx1.size()));
    conv2d_backward(params_.at("conv1/w"), cc.col1.data(), dx1.data(), d1_,
                    grads.at("conv1/w"), grads.at("conv1/b"), static_cast<S*>(nullptr),
                    scratch);
  }

 private:
  ArchConfig arch_;
  ConvDims d1_, d2_, d3_;
  Params<S> params_;
};

}  // namespace nav3d::nn
