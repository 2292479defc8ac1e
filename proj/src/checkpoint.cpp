#include "snnbench/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace snnbench {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  void matrix(const Matrix& m) {
    put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index k = 0; k < m.cols(); ++k) put<double>(m(i, k));
  }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> buf) : buf_(std::move(buf)) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void bytes(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  Matrix matrix() {
    const auto rows = get<std::uint64_t>(), cols = get<std::uint64_t>();
    if (rows > (1u << 24) || cols > (1u << 24)) throw std::runtime_error("checkpoint: implausible matrix shape");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    need(rows * cols * sizeof(double));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = get<double>();
    return m;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw std::runtime_error("checkpoint: truncated file");
  }
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

void save_checkpoint(const std::filesystem::path& path, const Network& net, const nlohmann::json& meta) {
  net.validate();
  Writer w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.readout));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.surrogate.kind));
  w.put<double>(net.surrogate.slope);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    w.put<std::uint8_t>(l.spiking);
    w.put<std::uint8_t>(l.v.has_value());
    w.put<std::uint8_t>(l.lif.refractory_subtract);
    w.put<double>(l.lif.alpha_syn);
    w.put<double>(l.lif.alpha_mem);
    w.put<double>(l.lif.v_th);
    w.matrix(l.w);
    if (l.v) w.matrix(*l.v);
  }
  w.put<std::uint8_t>(net.score_readout.has_value());
  if (net.score_readout) w.matrix(*net.score_readout);

  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
  nlohmann::json side = meta.is_object() ? meta : nlohmann::json::object();
  side["format_version"] = kCheckpointVersion;
  side["layers"] = net.layers.size();
  std::ofstream out(sidecar_path(path));
  if (!out) throw std::runtime_error("cannot write checkpoint sidecar for " + path.string());
  out << side.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(buf));
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));

  Checkpoint c;
  const auto readout = r.get<std::uint32_t>();
  const auto surrogate = r.get<std::uint32_t>();
  if (readout > 1 || surrogate > 2) throw std::runtime_error("checkpoint: corrupt header");
  c.net.readout = static_cast<ReadoutMode>(readout);
  c.net.surrogate.kind = static_cast<SurrogateKind>(surrogate);
  c.net.surrogate.slope = r.get<double>();
  const auto n_layers = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerParams l;
    l.spiking = r.get<std::uint8_t>() != 0;
    const bool recurrent = r.get<std::uint8_t>() != 0;
    l.lif.refractory_subtract = r.get<std::uint8_t>() != 0;
    l.lif.alpha_syn = r.get<double>();
    l.lif.alpha_mem = r.get<double>();
    l.lif.v_th = r.get<double>();
    l.w = r.matrix();
    if (recurrent) l.v = r.matrix();
    c.net.layers.push_back(std::move(l));
  }
  if (r.get<std::uint8_t>() != 0) c.net.score_readout = r.matrix();
  if (!r.at_end()) throw std::runtime_error("checkpoint: trailing bytes in " + path.string());
  c.net.validate();

  std::ifstream side(sidecar_path(path));
  if (!side) throw std::runtime_error("checkpoint: missing sidecar " + sidecar_path(path).string());
  c.meta = nlohmann::json::parse(side);
  return c;
}

}  // namespace snnbench
