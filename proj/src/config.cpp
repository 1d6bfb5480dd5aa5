#include "cassi/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cassi {

std::vector<RunConfig::Field> RunConfig::fields() {
  return {
      {"seed", &seed},
      {"out_dir", &out_dir},
      {"dataset", &dataset},
      {"Nz", &Nz},
      {"hI", &hI},
      {"hS", &hS},
      {"hC", &hC},
      {"wT", &wT},
      {"wI", &wI},
      {"wS", &wS},
      {"wD", &wD},
      {"wR", &wR},
      {"w_ar", &w_ar},
      {"w_qa", &w_qa},
      {"w_qT", &w_qT},
      {"w_tf", &w_tf},
      {"w_roll", &w_roll},
      {"w_yaw", &w_yaw},
      {"w_lat", &w_lat},
      {"sigma_sq", &sigma_sq},
      {"dt", &dt},
      {"max_episode_s", &max_episode_s},
      {"randomize", &randomize},
      {"obs_noise", &obs_noise},
      {"n_envs", &n_envs},
      {"steps_per_iter", &steps_per_iter},
      {"iterations", &iterations},
      {"gamma", &gamma},
      {"lam", &lam},
      {"clip_eps", &clip_eps},
      {"entropy_coef", &entropy_coef},
      {"kl_target", &kl_target},
      {"lr", &lr},
      {"ppo_epochs", &ppo_epochs},
      {"ppo_minibatches", &ppo_minibatches},
      {"policy_width", &policy_width},
      {"policy_depth", &policy_depth},
      {"disc_lr", &disc_lr},
      {"disc_wd", &disc_wd},
      {"disc_momentum", &disc_momentum},
      {"gp_weight", &gp_weight},
      {"disc_epochs", &disc_epochs},
      {"disc_minibatches", &disc_minibatches},
      {"disc_batch", &disc_batch},
      {"disc_w1", &disc_w1},
      {"disc_w2", &disc_w2},
      {"skill_lr", &skill_lr},
      {"skill_wd", &skill_wd},
      {"skill_epochs", &skill_epochs},
      {"skill_minibatches", &skill_minibatches},
      {"skill_batch", &skill_batch},
      {"skill_width", &skill_width},
      {"ensemble", &ensemble},
      {"oracle_lr", &oracle_lr},
      {"oracle_wd", &oracle_wd},
      {"oracle_epochs", &oracle_epochs},
      {"oracle_batch", &oracle_batch},
      {"oracle_per_class", &oracle_per_class},
      {"oracle_w1", &oracle_w1},
      {"oracle_w2", &oracle_w2},
      {"n_traj", &n_traj},
      {"traj_len", &traj_len},
      {"settle_steps", &settle_steps},
      {"paper_scale", &paper_scale},
      {"eval_rollouts", &eval_rollouts},
      {"eval_warmup", &eval_warmup},
      {"eval_len", &eval_len},
      {"checkpoint_every", &checkpoint_every},
      {"cluster_horizon", &cluster_horizon},
      {"cluster_k", &cluster_k},
      {"cluster_subsample", &cluster_subsample},
      {"kmeans_restarts", &kmeans_restarts},
      {"cluster_sweep_k", &cluster_sweep_k},
  };
}

namespace {

bool parse_bool(const std::string& v, bool& out) {
  if (v == "1" || v == "true" || v == "on") {
    out = true;
    return true;
  }
  if (v == "0" || v == "false" || v == "off") {
    out = false;
    return true;
  }
  return false;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (auto& f : fields()) {
    if (key != f.name) continue;
    try {
      std::visit(
          [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, std::string>) {
              *p = value;
            } else if constexpr (std::is_same_v<T, bool>) {
              if (!parse_bool(value, *p)) throw std::invalid_argument(value);
            } else if constexpr (std::is_same_v<T, double>) {
              std::size_t pos = 0;
              *p = std::stod(value, &pos);
              if (pos != value.size()) throw std::invalid_argument(value);
            } else {
              std::size_t pos = 0;
              const auto v = std::stoull(value, &pos);
              if (pos != value.size()) throw std::invalid_argument(value);
              *p = static_cast<T>(v);
            }
          },
          f.ptr);
    } catch (const std::exception&) {
      throw ConfigError("bad value for " + key + ": '" + value + "'");
    }
    return;
  }
  throw ConfigError("unknown config key: " + key);
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::string line;
  std::size_t ln = 0;
  while (std::getline(f, line)) {
    ++ln;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(ln) + ": expected key = value");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string RunConfig::dump() const {
  std::ostringstream out;
  char buf[40];
  for (auto& f : const_cast<RunConfig*>(this)->fields()) {
    out << f.name << " = ";
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, std::string>) {
            out << *p;
          } else if constexpr (std::is_same_v<T, bool>) {
            out << (*p ? "1" : "0");
          } else if constexpr (std::is_same_v<T, double>) {
            std::snprintf(buf, sizeof buf, "%.17g", *p);
            out << buf;
          } else {
            out << *p;
          }
        },
        f.ptr);
    out << "\n";
  }
  return out.str();
}

}  // namespace cassi
