#include "checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace ar {

namespace {
constexpr char kMagic[8] = {'A', 'R', 'C', 'K', 'P', 'T', '1', '\n'};

void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_i64(std::ostream& os, int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void write_vec(std::ostream& os, const std::vector<double>& v) {
  write_u32(os, static_cast<uint32_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
int64_t read_i64(std::istream& is) {
  int64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::string read_str(std::istream& is) {
  uint32_t n = read_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}
std::vector<double> read_vec(std::istream& is) {
  uint32_t n = read_u32(is);
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  return v;
}
}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::BadData, "cannot open checkpoint for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_str(os, metadata.dump());
  write_u32(os, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_str(os, name);
    write_u32(os, static_cast<uint32_t>(t.shape().size()));
    for (int d : t.shape()) write_u32(os, static_cast<uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t.data().data()),
             static_cast<std::streamsize>(t.data().size() * sizeof(double)));
  }
  uint32_t has_opt = opt_iteration >= 0 ? 1 : 0;
  write_u32(os, has_opt);
  if (has_opt) {
    write_i64(os, opt_iteration);
    write_u32(os, static_cast<uint32_t>(opt_state.size()));
    for (const auto& [name, mom] : opt_state) {
      write_str(os, name);
      write_vec(os, mom.m);
      write_vec(os, mom.v);
    }
  }
  if (!os) fail(ErrorKind::BadData, "checkpoint write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::BadData, "cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    fail(ErrorKind::BadData, "not a checkpoint file: " + path);
  Checkpoint ck;
  ck.metadata = nlohmann::json::parse(read_str(is));
  uint32_t nt = read_u32(is);
  for (uint32_t i = 0; i < nt; ++i) {
    std::string name = read_str(is);
    uint32_t nd = read_u32(is);
    Shape shape(nd);
    for (auto& d : shape) d = static_cast<int>(read_u32(is));
    std::vector<double> data(numel_of(shape));
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    ck.tensors.emplace(name, Tensor::from_data(shape, std::move(data)));
  }
  if (read_u32(is) == 1) {
    ck.opt_iteration = read_i64(is);
    uint32_t ns = read_u32(is);
    for (uint32_t i = 0; i < ns; ++i) {
      std::string name = read_str(is);
      Adam::Moments mom;
      mom.m = read_vec(is);
      mom.v = read_vec(is);
      ck.opt_state.emplace(name, std::move(mom));
    }
  }
  if (!is) fail(ErrorKind::BadData, "truncated checkpoint: " + path);
  return ck;
}

Checkpoint Checkpoint::from_params(const ParamList& params,
                                   nlohmann::json metadata) {
  Checkpoint ck;
  ck.metadata = std::move(metadata);
  for (const auto& p : params) {
    ck.tensors.emplace(
        p.name, Tensor::from_data(p.tensor.shape(), p.tensor.data()));
  }
  return ck;
}

void Checkpoint::restore_params(const ParamList& params) const {
  for (const auto& p : params) {
    auto it = tensors.find(p.name);
    if (it == tensors.end())
      fail(ErrorKind::BadParams, "checkpoint missing tensor: " + p.name);
    if (it->second.shape() != p.tensor.shape())
      fail(ErrorKind::BadParams, "checkpoint shape mismatch for: " + p.name);
    Tensor dst = p.tensor;
    dst.data() = it->second.data();
  }
}

void Checkpoint::store_optimizer(const Adam& opt) {
  opt_iteration = opt.iteration();
  opt_state.clear();
  for (const auto& [name, mom] : const_cast<Adam&>(opt).state())
    opt_state.emplace(name, mom);
}

void Checkpoint::restore_optimizer(Adam& opt) const {
  if (opt_iteration < 0) return;
  opt.set_iteration(opt_iteration);
  opt.state().clear();
  for (const auto& [name, mom] : opt_state) opt.state().emplace(name, mom);
}

}  // namespace ar
