// vtrack command line: synth, track, predict, eval, report.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
// VTRACK_VERBOSE=1 prints progress to stderr.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vtrack/vtrack.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool verbose() {
  const char* v = std::getenv("VTRACK_VERBOSE");
  return v != nullptr && std::string(v) != "0" && std::string(v).size() > 0;
}

void log(const std::string& msg) {
  if (verbose()) std::cerr << "vtrack: " << msg << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << data;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create directory " + dir);
  return fs::path(dir);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Run manifest; the only output that is not reproducible byte for byte,
// since it records wall-clock timestamps.
struct Manifest {
  explicit Manifest(std::string cmd) : command(std::move(cmd)) {}

  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::string config_digest;
  std::optional<std::uint64_t> seed;
  std::string started_at = utc_now();

  void add_input(const std::string& path, const std::string& content) {
    inputs.emplace_back(path, vtrack::digest(content));
  }

  void write(const fs::path& dir) const {
    nlohmann::json in = nlohmann::json::array();
    for (const auto& [p, d] : inputs) in.push_back({{"path", p}, {"digest", d}});
    nlohmann::json j{{"tool", "vtrack"},
                     {"version", vtrack::kVersion},
                     {"command", command},
                     {"inputs", in},
                     {"config_digest", config_digest},
                     {"seed", seed ? nlohmann::json(*seed) : nlohmann::json(nullptr)},
                     {"started_at", started_at},
                     {"finished_at", utc_now()}};
    write_file(dir / "manifest.json", j.dump(2) + "\n");
  }
};

vtrack::RunConfig config_from(const std::string& path, Manifest& m) {
  std::string text = "{}";
  if (!path.empty()) {
    text = read_file(path);
    m.add_input(path, text);
  }
  auto cfg = vtrack::load_config(text);
  m.config_digest = vtrack::digest(vtrack::to_json(cfg).dump());
  return cfg;
}

int cmd_synth(const std::string& scenario_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed) {
  Manifest m("synth");
  const auto text = read_file(scenario_path);
  m.add_input(scenario_path, text);
  vtrack::Scenario s;
  try {
    s = vtrack::load_scenario(text);
  } catch (const std::invalid_argument& e) {
    throw vtrack::ConfigError(e.what());
  }
  if (seed) s.seed = *seed;
  m.seed = s.seed;
  m.config_digest = vtrack::digest(vtrack::to_json(s).dump());

  const auto truth = vtrack::generate_truth(s);
  const auto stream = vtrack::synthesize(s);
  const auto dir = prepare_dir(out_dir);
  write_file(dir / "gt.txt", vtrack::to_mot_text(truth));
  write_file(dir / "det.txt", vtrack::to_mot_text(stream));
  write_file(dir / "scenario.json", vtrack::to_json(s).dump(2) + "\n");
  m.write(dir);
  log("synth: " + std::to_string(truth.size()) + " vessels, " + std::to_string(s.frames) +
      " frames");
  return 0;
}

int cmd_track(const std::string& det_path, const std::string& config_path,
              const std::string& out_dir, int frame_width, int frame_height) {
  Manifest m("track");
  const auto cfg = config_from(config_path, m);
  const auto text = read_file(det_path);
  m.add_input(det_path, text);
  const auto stream = vtrack::parse_mot_detections(text, {frame_width, frame_height});
  const auto tracks = vtrack::run(stream, cfg);
  const auto dir = prepare_dir(out_dir);
  write_file(dir / "tracks.csv", vtrack::tracks_to_csv(tracks));
  m.write(dir);
  log("track: " + std::to_string(tracks.size()) + " confirmed tracks");
  return 0;
}

int cmd_predict(const std::string& tracks_path, const std::string& config_path,
                std::optional<int> horizon, const std::string& out_dir) {
  Manifest m("predict");
  auto cfg = config_from(config_path, m);
  if (horizon) {
    cfg.horizon = *horizon;
    vtrack::validate(cfg);
  }
  const auto text = read_file(tracks_path);
  m.add_input(tracks_path, text);
  const auto tracks = vtrack::parse_tracks_csv(text);
  const auto run = vtrack::predict_tracks(vtrack::anchors_by_track(tracks), cfg, cfg.horizon);
  const auto dir = prepare_dir(out_dir);
  write_file(dir / "predictions.csv", vtrack::predictions_to_csv(run.rows));
  m.write(dir);
  if (run.skipped_tracks > 0) {
    std::cerr << "vtrack: warning: skipped " << run.skipped_tracks
              << " track(s) with fewer than 2 points\n";
  }
  log("predict: " + std::to_string(run.rows.size()) + " rows");
  return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& tracks_path, const std::string& out_dir,
             const vtrack::ReportLabels& labels) {
  Manifest m("eval");
  const auto pred_text = read_file(pred_path);
  const auto gt_text = read_file(gt_path);
  m.add_input(pred_path, pred_text);
  m.add_input(gt_path, gt_text);
  const auto preds = vtrack::parse_predictions_csv(pred_text);
  const auto gt = vtrack::parse_ground_truth(gt_text);

  std::optional<vtrack::GroundTruth> track_boxes;
  if (!tracks_path.empty()) {
    const auto tracks_text = read_file(tracks_path);
    m.add_input(tracks_path, tracks_text);
    track_boxes = vtrack::boxes_by_track(vtrack::parse_tracks_csv(tracks_text));
  }
  const auto report = vtrack::evaluate_run(preds, gt, track_boxes ? &*track_boxes : nullptr);

  const auto dir = prepare_dir(out_dir);
  write_file(dir / "report.json", vtrack::to_json(report).dump(2) + "\n");
  write_file(dir / "report.csv", std::string(vtrack::kReportCsvHeader) + "\n" +
                                     vtrack::to_csv_row(report, labels) + "\n");
  m.write(dir);
  if (report.unmatched_predictions > 0) {
    std::cerr << "vtrack: " << report.unmatched_predictions
              << " prediction(s) had no ground truth to compare against\n";
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_path) {
  struct Row {
    std::string category, config, line;
  };
  std::vector<Row> rows;
  for (const auto& d : run_dirs) {
    if (!fs::is_directory(d)) throw UsageError("not a directory: " + d);
    std::vector<fs::path> reports;
    for (const auto& e : fs::recursive_directory_iterator(d)) {
      if (e.is_regular_file() && e.path().filename() == "report.csv") reports.push_back(e.path());
    }
    std::sort(reports.begin(), reports.end());
    for (const auto& p : reports) {
      const auto text = read_file(p.string());
      for (const auto line : vtrack::text::lines(text)) {
        const auto body = vtrack::text::trim(line);
        if (body.empty() || body == vtrack::kReportCsvHeader) continue;
        const auto cols = vtrack::text::split(body, ',');
        if (cols.size() < 4) throw std::runtime_error("malformed report row in " + p.string());
        rows.push_back({std::string(cols[3]), std::string(cols[2]), std::string(body)});
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.category, a.config) < std::tie(b.category, b.config);
  });
  std::string out(vtrack::kReportCsvHeader);
  out += '\n';
  for (const auto& r : rows) out += r.line + '\n';
  const fs::path target(out_path);
  if (target.has_parent_path()) prepare_dir(target.parent_path().string());
  write_file(target, out);
  log("report: " + std::to_string(rows.size()) + " rows");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vessel tracking and trajectory prediction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(vtrack::kVersion));

  std::string scenario_path, out_dir, det_path, config_path, tracks_path, pred_path, gt_path,
      out_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  int frame_width = 1280, frame_height = 720;
  vtrack::ReportLabels labels;
  std::vector<std::string> run_dirs;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario (gt.txt, det.txt)");
  synth->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--seed", seed, "Override the scenario seed");

  auto* track = app.add_subcommand("track", "Track detections into tracks.csv");
  track->add_option("--det", det_path, "MOT detection file")->required();
  track->add_option("--config", config_path, "Run config JSON (defaults when omitted)");
  track->add_option("--out", out_dir, "Output directory")->required();
  track->add_option("--frame-width", frame_width, "Frame width in pixels")->check(CLI::PositiveNumber);
  track->add_option("--frame-height", frame_height, "Frame height in pixels")->check(CLI::PositiveNumber);

  auto* pred = app.add_subcommand("predict", "Forecast trajectories into predictions.csv");
  pred->add_option("--tracks", tracks_path, "tracks.csv from the track command")->required();
  pred->add_option("--config", config_path, "Run config JSON (defaults when omitted)");
  pred->add_option("--horizon", horizon, "Frames to forecast (overrides config)");
  pred->add_option("--out", out_dir, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--pred", pred_path, "predictions.csv")->required();
  eval->add_option("--gt", gt_path, "Ground truth in MOT format")->required();
  eval->add_option("--tracks", tracks_path,
                   "tracks.csv; maps track ids to identities and adds id metrics");
  eval->add_option("--out", out_dir, "Output directory")->required();
  eval->add_option("--video", labels.video, "Video label for report.csv");
  eval->add_option("--tracker", labels.tracker, "Tracker label for report.csv");
  eval->add_option("--config-name", labels.config, "Config label for report.csv");
  eval->add_option("--category", labels.category, "Scenario category (e.g. inland, sea)");

  auto* report = app.add_subcommand("report", "Aggregate report.csv files into one table");
  report->add_option("--runs", run_dirs, "Run directories")->required();
  report->add_option("--out", out_file, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(scenario_path, out_dir, seed);
    if (*track) return cmd_track(det_path, config_path, out_dir, frame_width, frame_height);
    if (*pred) return cmd_predict(tracks_path, config_path, horizon, out_dir);
    if (*eval) return cmd_eval(pred_path, gt_path, tracks_path, out_dir, labels);
    if (*report) return cmd_report(run_dirs, out_file);
  } catch (const vtrack::ConfigError& e) {
    std::cerr << "vtrack: config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "vtrack: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "vtrack: error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
