#pragma once

// Fixture directories on disk:
//   mixture.wav            C channels
//   image_<k>.wav          C channels, reverberant images of source k
//   early_image_<k>.wav    C channels, early-RIR images of source k
//   dry_<k>.wav            dry source k
//   rir_<k>.wav            C channels, RIRs of source k
//   noise.wav              C channels
//   manifest.json          scene spec and file list
// A batch directory holds fixture_000, fixture_001, ... and a manifest.json
// listing them.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "arraydps/acoustic.hpp"
#include "arraydps/config.hpp"
#include "arraydps/wav.hpp"

namespace arraydps {

namespace fs = std::filesystem;

inline Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidArgument("invalid JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_json_file(const fs::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

inline std::string indexed_name(const std::string& stem, std::size_t k) {
  return stem + "_" + std::to_string(k) + ".wav";
}

inline std::string batch_item_name(std::size_t i) {
  std::ostringstream s;
  s << "fixture_" << std::setw(3) << std::setfill('0') << i;
  return s.str();
}

// Largest per-channel relative additivity residual ||x - sum images - noise|| / ||x||.
inline double additivity_residual(const MixtureFixture& fx) {
  double worst = 0.0;
  for (std::size_t c = 0; c < fx.mixtures.channel_count(); ++c) {
    RealVector r = fx.mixtures[c].samples - fx.noise[c].samples;
    for (const auto& img : fx.images) r -= img[c].samples;
    const double ref = fx.mixtures[c].samples.norm();
    worst = std::max(worst, ref > 0.0 ? r.norm() / ref : r.norm());
  }
  return worst;
}

inline void write_fixture(const fs::path& dir, const MixtureFixture& fx) {
  fs::create_directories(dir);
  const std::size_t K = fx.images.size();
  write_wav(dir / "mixture.wav", fx.mixtures);
  write_wav(dir / "noise.wav", fx.noise);
  Json files = {{"mixture", "mixture.wav"}, {"noise", "noise.wav"}};
  for (std::size_t k = 0; k < K; ++k) {
    write_wav(dir / indexed_name("image", k), fx.images[k]);
    write_wav(dir / indexed_name("early_image", k), fx.early_images[k]);
    write_wav(dir / indexed_name("dry", k), fx.dry_sources[k]);
    std::vector<Waveform> rir_channels;
    for (const auto& h : fx.rirs[k]) rir_channels.emplace_back(h.taps, h.sample_rate);
    write_wav(dir / indexed_name("rir", k), MultichannelWaveform(std::move(rir_channels)));
    files["images"].push_back(indexed_name("image", k));
    files["early_images"].push_back(indexed_name("early_image", k));
    files["dry_sources"].push_back(indexed_name("dry", k));
    files["rirs"].push_back(indexed_name("rir", k));
  }
  Json manifest = {{"kind", "fixture"},
                   {"scene", to_json(fx.spec)},
                   {"num_sources", K},
                   {"num_mics", fx.mixtures.channel_count()},
                   {"num_samples", fx.mixtures.length()},
                   {"sample_rate", fx.mixtures.sample_rate()},
                   {"additivity_residual", additivity_residual(fx)},
                   {"files", files}};
  write_json_file(dir / "manifest.json", manifest);
}

// Fixture read back from disk (WAV sample precision). RIR direct-path indices
// are recovered as the largest-magnitude tap.
inline MixtureFixture load_fixture(const fs::path& dir) {
  const Json manifest = read_json_file(dir / "manifest.json");
  if (manifest.value("kind", std::string()) != "fixture")
    throw InvalidArgument(dir.string() + " is not a single-fixture directory");
  MixtureFixture fx;
  fx.spec = parse_scene_request(manifest.at("scene")).spec;
  const std::size_t K = manifest.at("num_sources").get<std::size_t>();
  const auto& files = manifest.at("files");
  fx.mixtures = read_wav(dir / files.at("mixture").get<std::string>());
  fx.noise = read_wav(dir / files.at("noise").get<std::string>());
  for (std::size_t k = 0; k < K; ++k) {
    fx.images.push_back(read_wav(dir / files.at("images").at(k).get<std::string>()));
    fx.early_images.push_back(read_wav(dir / files.at("early_images").at(k).get<std::string>()));
    const auto dry = read_wav(dir / files.at("dry_sources").at(k).get<std::string>());
    require(dry.channel_count() == 1, "dry source file must be mono");
    fx.dry_sources.push_back(dry[0]);
    const auto rirs = read_wav(dir / files.at("rirs").at(k).get<std::string>());
    std::vector<Rir> row;
    for (const auto& ch : rirs.channels) {
      Rir h;
      h.taps = ch.samples;
      h.sample_rate = ch.sample_rate;
      ch.samples.cwiseAbs().maxCoeff(&h.direct_path_index);
      row.push_back(std::move(h));
    }
    fx.rirs.push_back(std::move(row));
  }
  require(fx.images.size() == K && fx.mixtures.channel_count() == fx.images.front().channel_count(),
          "fixture manifest does not match its files");
  return fx;
}

// Batch manifest listing item directories, or empty when `dir` holds a single fixture.
inline std::vector<std::string> batch_items(const fs::path& dir) {
  const Json manifest = read_json_file(dir / "manifest.json");
  const std::string kind = manifest.value("kind", std::string());
  if (kind == "fixture") return {};
  if (kind != "fixture_batch") throw InvalidArgument(dir.string() + ": unknown manifest kind");
  return manifest.at("items").get<std::vector<std::string>>();
}

inline void write_batch_manifest(const fs::path& dir, const SceneSpec& base, int count) {
  Json items = Json::array();
  for (int i = 0; i < count; ++i) items.push_back(batch_item_name(static_cast<std::size_t>(i)));
  write_json_file(dir / "manifest.json",
                  {{"kind", "fixture_batch"}, {"scene", to_json(base)}, {"count", count},
                   {"items", items}});
}

}  // namespace arraydps
