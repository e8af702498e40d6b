#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <cstring>
#include <memory>

#include "nav3d/checkpoint.hpp"
#include "nav3d/cli.hpp"
#include "nav3d/config.hpp"
#include "nav3d/pomdp_env.hpp"
#include "nav3d/qnet.hpp"

namespace py = pybind11;
using namespace nav3d;

namespace {

using PointList = std::vector<std::array<double, 3>>;

PointCloud to_cloud(const PointList& pts) {
  PointCloud c;
  c.points = pts;
  return c;
}

py::bytes image_bytes(const perception::CostmapImage& img) {
  return py::bytes(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
}

py::dict obs_to_dict(const env::Observation& obs) {
  std::string frames;
  frames.reserve(env::Observation::kFrames * obs.frames[0].pixels.size());
  for (const auto& f : obs.frames) {
    frames.append(reinterpret_cast<const char*>(f.pixels.data()), f.pixels.size());
  }
  py::dict d;
  d["frames"] = py::bytes(frames);  // oldest first, 60*60 bytes each
  d["goal"] = py::make_tuple(obs.goal.rho, obs.goal.phi);
  d["vel"] = py::make_tuple(obs.v, obs.w);
  return d;
}

env::Observation obs_from_dict(const py::dict& d) {
  env::Observation obs;
  const std::string frames = py::cast<std::string>(py::bytes(d["frames"]));
  const std::size_t n = obs.frames[0].pixels.size();
  if (frames.size() != env::Observation::kFrames * n) {
    throw std::invalid_argument("frames must hold 3 stacked 60x60 images");
  }
  for (int i = 0; i < env::Observation::kFrames; ++i) {
    std::memcpy(obs.frames[i].pixels.data(), frames.data() + i * n, n);
  }
  const auto goal = py::cast<std::pair<double, double>>(d["goal"]);
  const auto vel = py::cast<std::pair<double, double>>(d["vel"]);
  obs.goal = {goal.first, goal.second};
  obs.v = vel.first;
  obs.w = vel.second;
  return obs;
}

sim::ScenarioKind kind_from_string(const std::string& s) {
  if (s == "random") return sim::ScenarioKind::Random;
  if (s == "office") return sim::ScenarioKind::Office;
  if (s == "coffee") return sim::ScenarioKind::Coffee;
  throw std::invalid_argument("scenario must be random|office|coffee");
}

class PyEnvironment {
 public:
  explicit PyEnvironment(const std::string& preset) {
    config::RunConfig rc;
    rc.apply_preset(preset);
    env_ = std::make_unique<env::Environment>(rc.to_env_config());
  }

  py::dict reset(const std::string& kind, int level, std::uint64_t seed) {
    return obs_to_dict(env_->reset(kind_from_string(kind), level, seed));
  }

  py::dict step(int action) {
    const env::StepResult res = env_->step(action);
    py::dict d = obs_to_dict(res.obs);
    d["reward"] = res.reward.total();
    d["r_goal"] = res.reward.r_goal;
    d["r_collision"] = res.reward.r_collision;
    d["r_safety"] = res.reward.r_safety;
    d["r_step"] = res.reward.r_step;
    d["outcome"] = std::string(env::outcome_name(res.outcome));
    d["done"] = res.episode_over();
    return d;
  }

  py::tuple pose() const {
    const auto& p = env_->robot().pose;
    return py::make_tuple(p.x, p.y, p.theta);
  }

  py::tuple goal() const {
    return py::make_tuple(env_->world().goal.x, env_->world().goal.y);
  }

 private:
  std::unique_ptr<env::Environment> env_;
};

class PyPolicy {
 public:
  explicit PyPolicy(const std::string& checkpoint_path) {
    const ckpt::Snapshot snap = ckpt::load_snapshot(checkpoint_path);
    net_ = std::make_unique<nn::QNetwork<float>>(snap.arch);
    net_->init(0);
    ckpt::check_shapes(snap.params, net_->params());
    net_->params() = snap.params;
    reset();
  }

  void reset() { state_.reset(net_->arch().hidden); }

  int act(const py::dict& obs_dict) {
    const env::Observation obs = obs_from_dict(obs_dict);
    const auto in = nn::encode_observation<float>(obs, net_->arch().frames);
    std::vector<float> q;
    net_->forward(in, state_, q);
    return nn::argmax(q);
  }

 private:
  std::unique_ptr<nn::QNetwork<float>> net_;
  nn::RecurrentState<float> state_;
};

void init_checkpoint(const std::string& path, const std::string& arch, std::uint64_t seed) {
  ckpt::Snapshot snap;
  if (arch == "paper") snap.arch = nn::ArchConfig::paper();
  else if (arch == "desk") snap.arch = nn::ArchConfig::desk();
  else if (arch == "gradcheck") snap.arch = nn::ArchConfig::gradcheck();
  else throw std::invalid_argument("arch must be paper|desk|gradcheck");
  if (arch == "gradcheck") snap.arch.map_size = perception::Costmap::kSize;
  nn::QNetwork<float> net(snap.arch);
  net.init(seed);
  snap.params = net.params();
  ckpt::save_snapshot(path, snap);
}

}  // namespace

PYBIND11_MODULE(_nav3d, m) {
  m.doc() = "depth-camera costmap navigation: perception pipeline, environment, policies";
  m.attr("__version__") = cli::kVersion;

  m.def("action_from_index",
        [](int i) {
          const env::Action a = env::action_from_index(i);
          return py::make_tuple(a.v, a.w);
        },
        py::arg("index"), "discrete command (v, w) for an action index in [0, 28)");
  m.attr("num_actions") = env::kNumActions;

  m.def("compute_reward",
        [](double prev_goal_dist, double goal_dist, double prev_min_d, double min_d,
           bool reached_goal, bool collided) {
          const env::RewardTerms r = env::compute_reward(prev_goal_dist, goal_dist, prev_min_d,
                                                         min_d, reached_goal, collided);
          py::dict d;
          d["r_goal"] = r.r_goal;
          d["r_collision"] = r.r_collision;
          d["r_safety"] = r.r_safety;
          d["r_step"] = r.r_step;
          d["total"] = r.total();
          return d;
        },
        py::arg("prev_goal_dist"), py::arg("goal_dist"), py::arg("prev_min_d"),
        py::arg("min_d"), py::arg("reached_goal"), py::arg("collided"));

  m.def("relative_goal",
        [](double x, double y, double theta, double gx, double gy) {
          const env::PolarGoal g = env::relative_goal({x, y, theta}, {gx, gy});
          return py::make_tuple(g.rho, g.phi);
        },
        py::arg("x"), py::arg("y"), py::arg("theta"), py::arg("gx"), py::arg("gy"));

  m.def("voxel_downsample",
        [](const PointList& pts, double leaf) {
          return perception::voxel_downsample(to_cloud(pts), leaf).points;
        },
        py::arg("points"), py::arg("leaf") = 0.05);
  m.def("remove_statistical_outliers",
        [](const PointList& pts, int k, double std_mul) {
          return perception::remove_statistical_outliers(to_cloud(pts), k, std_mul).points;
        },
        py::arg("points"), py::arg("k") = 50, py::arg("std_mul") = 1.0);
  m.def("height_filter",
        [](const PointList& pts, double max_h) {
          return perception::height_filter(to_cloud(pts), max_h).points;
        },
        py::arg("points"), py::arg("max_h") = 1.35);
  m.def("costmap_image",
        [](const PointList& pts) {
          const perception::Costmap map =
              perception::build_costmap(to_cloud(pts), nullptr, {});
          return image_bytes(perception::costmap_to_image(map));
        },
        py::arg("points"),
        "60x60 row-major costmap bytes (255 free, 127 unknown, 0 obstacle)");

  m.def("init_checkpoint", &init_checkpoint, py::arg("path"), py::arg("arch") = "desk",
        py::arg("seed") = 0, "write a freshly initialized agent checkpoint");

  py::class_<PyEnvironment>(m, "Environment")
      .def(py::init<const std::string&>(), py::arg("preset") = "desk")
      .def("reset", &PyEnvironment::reset, py::arg("kind"), py::arg("level"), py::arg("seed"))
      .def("step", &PyEnvironment::step, py::arg("action"))
      .def_property_readonly("pose", &PyEnvironment::pose)
      .def_property_readonly("goal", &PyEnvironment::goal);

  py::class_<PyPolicy>(m, "Policy")
      .def(py::init<const std::string&>(), py::arg("checkpoint"))
      .def("reset", &PyPolicy::reset)
      .def("act", &PyPolicy::act, py::arg("obs"));
}
