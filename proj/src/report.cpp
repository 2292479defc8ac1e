#include "snnbench/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "snnbench/format.hpp"

namespace snnbench {

using nlohmann::json;

std::string_view to_string(ReportFormat format) { return format == ReportFormat::kCsv ? "csv" : "json"; }

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw std::invalid_argument("unknown report format: " + std::string(name) + " (csv, json)");
}

std::string report_prefix(const ExperimentConfig& config) {
  return std::string(to_string(config.method)) + "_" + std::string(to_string(config.architecture));
}

namespace {

// NaN travels as null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double num_from(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(num(m(i, k)));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = num_from(j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
  return m;
}

void write_file(const std::filesystem::path& path, const std::string& text, std::vector<std::filesystem::path>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
  written.push_back(path);
}

std::string fmt(double x) { return std::isnan(x) ? "" : format_double(x); }

}  // namespace

json seed_to_json(const SeedReport& s) {
  json j;
  j["seed"] = s.seed;
  j["train_accuracy"] = num(s.train_accuracy);
  j["test_accuracy"] = num(s.test_accuracy);
  j["learning_state_peak"] = s.learning_state_peak;
  json curve = json::array();
  for (const auto& e : s.curve)
    curve.push_back({{"epoch", e.epoch},
                     {"loss", num(e.loss)},
                     {"train_accuracy", num(e.train_accuracy)},
                     {"test_accuracy", num(e.test_accuracy)}});
  j["curve"] = curve;
  j["cka"] = s.cka ? matrix_to_json(*s.cka) : json(nullptr);
  json fisher = json::array();
  for (const auto& p : s.fisher) {
    json groups = json::array();
    for (const auto& g : p.groups) groups.push_back({{"layer", g.layer}, {"kind", g.kind}, {"value", num(g.value)}});
    fisher.push_back({{"normalized", p.normalized}, {"groups", groups}});
  }
  j["fisher"] = fisher;
  json fgsm = json::array();
  for (const auto& f : s.fgsm) fgsm.push_back({{"epsilon", f.epsilon}, {"accuracy", num(f.accuracy)}});
  j["fgsm"] = fgsm;
  json backdoor = json::array();
  for (const auto& b : s.backdoor)
    backdoor.push_back({{"rate", b.rate},
                        {"run", b.run},
                        {"source", b.source},
                        {"target", b.target},
                        {"poisoned", b.poisoned},
                        {"asr", num(b.asr)},
                        {"clean_accuracy", num(b.clean_accuracy)},
                        {"base_confusion", num(b.base_confusion)}});
  j["backdoor"] = backdoor;
  j["failed_stage"] = s.failed_stage;
  j["error"] = s.error;
  return j;
}

SeedReport seed_from_json(const json& j) {
  SeedReport s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train_accuracy = num_from(j.at("train_accuracy"));
  s.test_accuracy = num_from(j.at("test_accuracy"));
  s.learning_state_peak = j.at("learning_state_peak").get<std::size_t>();
  for (const auto& e : j.at("curve"))
    s.curve.push_back({e.at("epoch").get<std::size_t>(), num_from(e.at("loss")), num_from(e.at("train_accuracy")),
                       num_from(e.at("test_accuracy"))});
  if (!j.at("cka").is_null()) s.cka = matrix_from_json(j.at("cka"));
  for (const auto& p : j.at("fisher")) {
    FisherProfile prof;
    prof.normalized = p.at("normalized").get<bool>();
    for (const auto& g : p.at("groups"))
      prof.groups.push_back({g.at("layer").get<std::size_t>(), g.at("kind").get<std::string>(), num_from(g.at("value"))});
    s.fisher.push_back(prof);
  }
  for (const auto& f : j.at("fgsm")) s.fgsm.push_back({f.at("epsilon").get<double>(), num_from(f.at("accuracy"))});
  for (const auto& b : j.at("backdoor"))
    s.backdoor.push_back({b.at("rate").get<double>(), b.at("run").get<std::size_t>(), b.at("source").get<Eigen::Index>(),
                          b.at("target").get<Eigen::Index>(), b.at("poisoned").get<std::size_t>(), num_from(b.at("asr")),
                          num_from(b.at("clean_accuracy")), num_from(b.at("base_confusion"))});
  s.failed_stage = j.at("failed_stage").get<std::string>();
  s.error = j.at("error").get<std::string>();
  return s;
}

json report_to_json(const ExperimentReport& report) {
  json j;
  j["config"] = config_to_yaml(report.config);
  j["mean_train_accuracy"] = num(report.mean_train_accuracy());
  j["mean_test_accuracy"] = num(report.mean_test_accuracy());
  json seeds = json::array();
  for (const auto& s : report.seeds) seeds.push_back(seed_to_json(s));
  j["seeds"] = seeds;
  return j;
}

ExperimentReport report_from_json(const json& j) {
  ExperimentReport r;
  r.config = config_from_yaml(j.at("config").get<std::string>());
  for (const auto& s : j.at("seeds")) r.seeds.push_back(seed_from_json(s));
  return r;
}

ExperimentReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report " + path.string());
  return report_from_json(json::parse(in));
}

std::string cka_csv(const Matrix& m) {
  std::ostringstream o;
  o << "layer";
  for (Eigen::Index k = 0; k < m.cols(); ++k) o << ",l" << k;
  o << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    o << "l" << i;
    for (Eigen::Index k = 0; k < m.cols(); ++k) o << "," << fmt(m(i, k));
    o << "\n";
  }
  return o.str();
}

std::string fisher_csv(const std::vector<FisherProfile>& curve) {
  std::ostringstream o;
  o << kFisherHeader << "\n";
  for (std::size_t t = 0; t < curve.size(); ++t)
    for (const auto& g : curve[t].groups) o << t + 1 << "," << g.layer << "," << g.kind << "," << fmt(g.value) << "\n";
  return o.str();
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, ReportFormat format,
                                               const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
  const std::string prefix = report_prefix(report.config);
  const std::string method(to_string(report.config.method));
  const std::string arch(to_string(report.config.architecture));
  std::vector<std::filesystem::path> written;
  auto path = [&](const std::string& suffix) { return out_dir / (prefix + suffix); };

  if (format == ReportFormat::kJson) {
    for (const auto& s : report.seeds)
      write_file(path("_" + std::to_string(s.seed) + ".json"), seed_to_json(s).dump(2) + "\n", written);
    write_file(path("_report.json"), report_to_json(report).dump(2) + "\n", written);
  } else {
    std::ostringstream summary, fgsm, backdoor;
    summary << kSummaryHeader << "\n";
    fgsm << kFgsmHeader << "\n";
    backdoor << kBackdoorHeader << "\n";
    for (const auto& s : report.seeds) {
      summary << method << "," << arch << "," << s.seed << "," << fmt(s.train_accuracy) << "," << fmt(s.test_accuracy)
              << "," << s.learning_state_peak << "," << s.failed_stage << "\n";

      std::ostringstream curve;
      curve << kCurveHeader << "\n";
      for (const auto& e : s.curve)
        curve << e.epoch << "," << fmt(e.loss) << "," << fmt(e.train_accuracy) << "," << fmt(e.test_accuracy) << "\n";
      write_file(path("_" + std::to_string(s.seed) + ".csv"), curve.str(), written);

      if (s.cka) write_file(path("_" + std::to_string(s.seed) + "_cka.csv"), cka_csv(*s.cka), written);
      if (!s.fisher.empty())
        write_file(path("_" + std::to_string(s.seed) + "_fisher.csv"), fisher_csv(s.fisher), written);
      for (const auto& p : s.fgsm)
        fgsm << method << "," << arch << "," << fmt(p.epsilon) << "," << fmt(p.accuracy) << ",," << s.seed << "\n";
      for (const auto& b : s.backdoor)
        backdoor << method << "," << arch << "," << fmt(b.rate) << "," << fmt(b.clean_accuracy) << "," << fmt(b.asr)
                 << "," << s.seed << "," << b.run << "," << b.source << "," << b.target << "," << b.poisoned << ","
                 << fmt(b.base_confusion) << "\n";
    }
    if (!report.seeds.empty())
      summary << method << "," << arch << ",mean," << fmt(report.mean_train_accuracy()) << ","
              << fmt(report.mean_test_accuracy()) << ",,\n";
    write_file(path("_summary.csv"), summary.str(), written);
    write_file(path("_fgsm.csv"), fgsm.str(), written);
    write_file(path("_backdoor.csv"), backdoor.str(), written);
  }

  std::ostringstream timing;
  timing << kTimingHeader << "\n";
  for (const auto& s : report.seeds) timing << s.seed << "," << format_double(s.wall_seconds) << "\n";
  write_file(path("_timing.csv"), timing.str(), written);
  return written;
}

}  // namespace snnbench
