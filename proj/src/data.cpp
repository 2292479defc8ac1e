#include "snnbench/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include <json.hpp>

namespace snnbench {

std::vector<std::size_t> Dataset::indices_of(Eigen::Index label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].label == label) out.push_back(i);
  return out;
}

void Dataset::validate() const {
  if (n_classes <= 0) throw std::invalid_argument("Dataset: class count must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.label < 0 || s.label >= n_classes)
      throw std::invalid_argument("Dataset: label out of range at sample " + std::to_string(i));
    if (s.input.t_steps() != t_steps || static_cast<Eigen::Index>(s.input.channels()) != channels)
      throw std::invalid_argument("Dataset: non-uniform sample shape at sample " + std::to_string(i));
  }
}

// ---- IDX --------------------------------------------------------------------

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset) {
  if (offset + 4 > buf.size()) throw std::runtime_error("IDX: truncated header");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace

IdxImages load_idx_images(const std::filesystem::path& path) {
  const auto buf = read_file(path);
  if (buf.size() < 16) throw std::runtime_error("IDX: file too short for an image header");
  if (read_be32(buf, 0) != 0x00000803u) throw std::runtime_error("IDX: bad magic for image file");
  const std::size_t count = read_be32(buf, 4);
  IdxImages out;
  out.rows = read_be32(buf, 8);
  out.cols = read_be32(buf, 12);
  const std::size_t pixels = out.rows * out.cols;
  if (buf.size() - 16 < count * pixels) throw std::runtime_error("IDX: truncated image payload");
  out.images.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Vector img(static_cast<Eigen::Index>(pixels));
    for (std::size_t p = 0; p < pixels; ++p)
      img[static_cast<Eigen::Index>(p)] = buf[16 + n * pixels + p] / 255.0;
    out.images.push_back(std::move(img));
  }
  return out;
}

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
  const auto buf = read_file(path);
  if (buf.size() < 8) throw std::runtime_error("IDX: file too short for a label header");
  if (read_be32(buf, 0) != 0x00000801u) throw std::runtime_error("IDX: bad magic for label file");
  const std::size_t count = read_be32(buf, 4);
  if (buf.size() - 8 < count) throw std::runtime_error("IDX: truncated label payload");
  return {buf.begin() + 8, buf.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

// ---- Events -----------------------------------------------------------------

SpikeTensor tensor_from_events(const std::vector<EventRecord>& events, std::size_t t_steps,
                               std::size_t channels, EventBinning binning) {
  SpikeTensor out(t_steps, 2 * channels);
  for (const EventRecord& e : events) {
    if (e.t >= t_steps) throw std::out_of_range("event timestep out of range");
    if (e.channel >= channels) throw std::out_of_range("event channel out of range");
    if (e.polarity != 1 && e.polarity != -1) throw std::invalid_argument("event polarity must be +1 or -1");
    const std::size_t col = e.polarity > 0 ? e.channel : channels + e.channel;
    if (binning.clamp)
      out(e.t, col) = 1.0;
    else
      out(e.t, col) += e.weight;
  }
  return out;
}

std::vector<EventRecord> events_from_tensor(const SpikeTensor& tensor, std::size_t channels) {
  if (tensor.channels() != 2 * channels)
    throw std::invalid_argument("events_from_tensor: tensor does not have two polarity planes");
  std::vector<EventRecord> out;
  for (std::size_t t = 0; t < tensor.t_steps(); ++t)
    for (std::size_t c = 0; c < tensor.channels(); ++c) {
      const double v = tensor(t, c);
      if (v <= 0.0) continue;
      const bool on = c < channels;
      out.push_back(EventRecord{t, on ? c : c - channels, on ? 1 : -1,
                                static_cast<std::uint32_t>(std::lround(v))});
    }
  return out;
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

long long parse_int(std::string_view field, const std::string& what, std::size_t line_no) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw std::invalid_argument("events csv line " + std::to_string(line_no) + ": bad " + what);
  return v;
}

}  // namespace

Dataset load_events_csv(const std::filesystem::path& path, std::size_t t_steps, std::size_t channels,
                        Eigen::Index n_classes, EventBinning binning) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("events csv: empty file " + path.string());
  const auto header = split_csv(line);
  bool multi = false;
  if (header == std::vector<std::string_view>{"t", "channel", "polarity", "label"}) {
    multi = false;
  } else if (header == std::vector<std::string_view>{"sample", "t", "channel", "polarity", "label"}) {
    multi = true;
  } else {
    throw std::invalid_argument("events csv: expected header t,channel,polarity,label");
  }

  struct Pending {
    std::vector<EventRecord> events;
    long long label = -1;
  };
  std::vector<Pending> pending;
  std::map<long long, std::size_t> slot_of;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != header.size())
      throw std::invalid_argument("events csv line " + std::to_string(line_no) + ": wrong field count");
    const std::size_t o = multi ? 1 : 0;
    const long long sample_id = multi ? parse_int(f[0], "sample", line_no) : 0;
    const long long t = parse_int(f[o], "t", line_no);
    const long long ch = parse_int(f[o + 1], "channel", line_no);
    const long long pol = parse_int(f[o + 2], "polarity", line_no);
    const long long label = parse_int(f[o + 3], "label", line_no);
    if (t < 0 || static_cast<std::size_t>(t) >= t_steps)
      throw std::out_of_range("events csv line " + std::to_string(line_no) + ": t out of range");
    if (ch < 0 || static_cast<std::size_t>(ch) >= channels)
      throw std::out_of_range("events csv line " + std::to_string(line_no) + ": channel out of range");
    if (pol != 1 && pol != -1)
      throw std::invalid_argument("events csv line " + std::to_string(line_no) + ": polarity must be +1 or -1");
    if (label < 0 || (n_classes > 0 && label >= n_classes))
      throw std::out_of_range("events csv line " + std::to_string(line_no) + ": label out of range");

    auto [it, inserted] = slot_of.try_emplace(sample_id, pending.size());
    if (inserted) pending.emplace_back();
    Pending& p = pending[it->second];
    if (p.label >= 0 && p.label != label)
      throw std::invalid_argument("events csv line " + std::to_string(line_no) + ": label changes within a sample");
    p.label = label;
    p.events.push_back(EventRecord{static_cast<std::size_t>(t), static_cast<std::size_t>(ch),
                                   static_cast<int>(pol), 1});
  }
  if (pending.empty()) throw std::runtime_error("events csv: no events in " + path.string());

  Dataset out;
  out.t_steps = t_steps;
  out.channels = static_cast<Eigen::Index>(2 * channels);
  long long max_label = 0;
  for (auto& p : pending) {
    max_label = std::max(max_label, p.label);
    out.samples.push_back(Sample{tensor_from_events(p.events, t_steps, channels, binning), p.label});
  }
  out.n_classes = n_classes > 0 ? n_classes : static_cast<Eigen::Index>(max_label + 1);
  out.validate();
  return out;
}

// ---- Encoders and generators ------------------------------------------------

SpikeTensor encode_poisson(const Vector& image, std::size_t t_steps, double max_rate,
                           std::uint64_t seed) {
  if (!(max_rate >= 0.0 && max_rate <= 1.0))
    throw std::invalid_argument("encode_poisson: max_rate must lie in [0, 1]");
  if ((image.array() < 0.0).any() || (image.array() > 1.0).any() || !image.allFinite())
    throw std::invalid_argument("encode_poisson: intensities must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SpikeTensor out(t_steps, static_cast<std::size_t>(image.size()));
  for (std::size_t t = 0; t < t_steps; ++t)
    for (Eigen::Index c = 0; c < image.size(); ++c)
      out(t, static_cast<std::size_t>(c)) = unit(rng) < image[c] * max_rate ? 1.0 : 0.0;
  return out;
}

std::vector<SpikeTensor> synth_templates(const SynthSpec& spec) {
  if (spec.classes <= 0 || spec.t_steps == 0 || spec.channels <= 0)
    throw std::invalid_argument("synth_pattern_dataset: parameters must be positive");
  if (!(spec.jitter >= 0.0 && spec.jitter <= 1.0) || !(spec.density > 0.0 && spec.density < 1.0))
    throw std::invalid_argument("synth_pattern_dataset: jitter in [0,1], density in (0,1)");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SpikeTensor> templates;
  for (Eigen::Index k = 0; k < spec.classes; ++k) {
    SpikeTensor tpl(spec.t_steps, static_cast<std::size_t>(spec.channels));
    for (std::size_t t = 0; t < spec.t_steps; ++t)
      for (std::size_t c = 0; c < tpl.channels(); ++c) tpl(t, c) = unit(rng) < spec.density ? 1.0 : 0.0;
    templates.push_back(std::move(tpl));
  }
  return templates;
}

Dataset synth_pattern_dataset(const SynthSpec& spec, std::optional<std::uint64_t> sample_seed) {
  const auto templates = synth_templates(spec);
  std::mt19937_64 rng(sample_seed.value_or(spec.seed) ^ 0x9E3779B97F4A7C15ull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset out;
  out.n_classes = spec.classes;
  out.channels = spec.channels;
  out.t_steps = spec.t_steps;
  // Interleave classes so unshuffled prefixes stay balanced.
  for (std::size_t n = 0; n < spec.n_per_class; ++n)
    for (Eigen::Index k = 0; k < spec.classes; ++k) {
      SpikeTensor x = templates[static_cast<std::size_t>(k)];
      if (spec.jitter > 0.0)
        for (std::size_t t = 0; t < x.t_steps(); ++t)
          for (std::size_t c = 0; c < x.channels(); ++c)
            if (unit(rng) < spec.jitter) x(t, c) = 1.0 - x(t, c);
      out.samples.push_back(Sample{std::move(x), k});
    }
  return out;
}

std::vector<std::vector<std::size_t>> batches(const Dataset& data, std::size_t batch_size,
                                              std::optional<std::uint64_t> shuffle_seed) {
  if (batch_size == 0) throw std::invalid_argument("batches: batch_size must be positive");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    // Fisher-Yates with an explicit index draw: std::shuffle's exact sequence is
    // library-specific.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

// ---- Manifest ---------------------------------------------------------------

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  const auto j = nlohmann::json::parse(in);
  DatasetManifest m;
  m.name = j.value("name", path.stem().string());
  m.format = j.at("format").get<std::string>();
  if (m.format != "events-csv" && m.format != "idx")
    throw std::invalid_argument("manifest: format must be events-csv or idx");
  m.t_steps = j.at("t_steps").get<std::size_t>();
  m.channels = j.at("channels").get<std::size_t>();
  m.class_names = j.at("class_names").get<std::vector<std::string>>();
  if (m.class_names.empty()) throw std::invalid_argument("manifest: class_names is empty");
  const auto base = path.parent_path();
  auto resolve = [&base](const std::vector<std::string>& files) {
    std::vector<std::filesystem::path> out;
    for (const auto& f : files) {
      std::filesystem::path p(f);
      out.push_back(p.is_absolute() ? p : base / p);
    }
    return out;
  };
  m.train = resolve(j.at("train").get<std::vector<std::string>>());
  m.test = resolve(j.value("test", std::vector<std::string>{}));
  m.max_rate = j.value("max_rate", 1.0);
  m.encode_seed = j.value("encode_seed", std::uint64_t{0});
  m.clamp = j.value("clamp", false);
  if (m.format == "idx" && (m.train.size() != 2 || (!m.test.empty() && m.test.size() != 2)))
    throw std::invalid_argument("manifest: idx splits are [images, labels]");
  return m;
}

Dataset load_manifest_split(const DatasetManifest& m, bool train) {
  const auto& files = train ? m.train : m.test;
  const auto n_classes = static_cast<Eigen::Index>(m.class_names.size());
  Dataset out;
  out.n_classes = n_classes;
  out.t_steps = m.t_steps;
  if (files.empty()) {
    out.channels = static_cast<Eigen::Index>(m.format == "idx" ? m.channels : 2 * m.channels);
    return out;
  }
  if (m.format == "events-csv") {
    out.channels = static_cast<Eigen::Index>(2 * m.channels);
    for (const auto& f : files) {
      Dataset part = load_events_csv(f, m.t_steps, m.channels, n_classes, EventBinning{m.clamp});
      for (auto& s : part.samples) out.samples.push_back(std::move(s));
    }
  } else {
    const IdxImages images = load_idx_images(files[0]);
    const auto labels = load_idx_labels(files[1]);
    if (labels.size() != images.images.size())
      throw std::invalid_argument("manifest: image and label counts differ");
    if (images.rows * images.cols != m.channels)
      throw std::invalid_argument("manifest: idx image size does not match channels");
    out.channels = static_cast<Eigen::Index>(m.channels);
    for (std::size_t n = 0; n < labels.size(); ++n) {
      if (labels[n] >= n_classes) throw std::out_of_range("manifest: idx label out of range");
      out.samples.push_back(Sample{encode_poisson(images.images[n], m.t_steps, m.max_rate,
                                                  m.encode_seed + n + (train ? 0 : 0x5EED0000ull)),
                                   static_cast<Eigen::Index>(labels[n])});
    }
  }
  out.validate();
  return out;
}

}  // namespace snnbench
