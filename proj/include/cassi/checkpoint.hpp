#pragma once
#include <iosfwd>
#include <string>
#include <vector>

#include "cassi/mlp.hpp"

namespace cassi {

// Header line "MLP <act> <size>... extra=<n>", then the parameters and the
// extra vector as one little-endian float32 stream. `extra` carries
// side-channel parameters (the policy's log-std vector). The framing is
// self-delimiting, so several nets can share one stream (oracle cache).
void write_net(std::ostream& f, const Mlp& net, const std::vector<double>& extra = {});
Mlp read_net(std::istream& f, std::vector<double>* extra = nullptr);

void save_net(const std::string& path, const Mlp& net, const std::vector<double>& extra = {});
Mlp load_net(const std::string& path, std::vector<double>* extra = nullptr);

}  // namespace cassi
