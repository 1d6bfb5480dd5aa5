#include "cassi/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cassi {

void write_net(std::ostream& f, const Mlp& net, const std::vector<double>& extra) {
  f << "MLP " << act_name(net.act());
  for (std::size_t s : net.sizes()) f << " " << s;
  f << " extra=" << extra.size() << "\n";
  auto put = [&](const double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const float x = static_cast<float>(v[i]);
      f.write(reinterpret_cast<const char*>(&x), sizeof x);
    }
  };
  put(net.params(), net.n_params());
  put(extra.data(), extra.size());
}

Mlp read_net(std::istream& f, std::vector<double>* extra) {
  std::string header;
  std::getline(f, header);
  std::istringstream hs(header);
  std::string magic, act;
  hs >> magic >> act;
  if (magic != "MLP") throw std::runtime_error("bad checkpoint header: " + header);
  std::vector<std::size_t> sizes;
  std::string tok;
  std::size_t n_extra = 0;
  while (hs >> tok) {
    if (tok.rfind("extra=", 0) == 0) {
      n_extra = std::stoul(tok.substr(6));
    } else {
      sizes.push_back(std::stoul(tok));
    }
  }
  if (sizes.size() < 2) throw std::runtime_error("bad checkpoint sizes: " + header);
  Mlp net(sizes, act_from_name(act));
  auto get = [&](double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      float x;
      f.read(reinterpret_cast<char*>(&x), sizeof x);
      v[i] = x;
    }
  };
  get(net.params(), net.n_params());
  std::vector<double> ex(n_extra);
  get(ex.data(), n_extra);
  if (!f) throw std::runtime_error("truncated checkpoint stream");
  if (extra) *extra = std::move(ex);
  return net;
}

void save_net(const std::string& path, const Mlp& net, const std::vector<double>& extra) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  write_net(f, net, extra);
  if (!f) throw std::runtime_error("short write: " + path);
}

Mlp load_net(const std::string& path, std::vector<double>* extra) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read_net(f, extra);
}

}  // namespace cassi
