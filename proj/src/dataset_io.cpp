#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "tdekws/encoding.hpp"
#include "tdekws/error.hpp"
#include "tdekws/format.hpp"

namespace tdekws {

namespace {

constexpr std::string_view kFormantHeader = "class_id,t_sec,f1,a1,f2,a2,f3,a3";
constexpr std::string_view kRasterMagic = "tdekws-raster-v1";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::vector<FormantTrack> load_formant_csv(const std::filesystem::path& path,
                                           double total_duration) {
  auto in = open_in(path);
  const std::string src = path.string();
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw ParseError(src, 1, "missing header");
  ++line_no;
  if (trim(line) != kFormantHeader) {
    throw ParseError(src, line_no,
                     "expected header '" + std::string(kFormantHeader) + "'");
  }
  std::vector<FormantTrack> tracks;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = view.find(',', start);
      fields.push_back(view.substr(start, comma == std::string_view::npos
                                              ? std::string_view::npos
                                              : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 8) {
      throw ParseError(src, line_no,
                       "expected 8 fields, got " + std::to_string(fields.size()));
    }
    int class_id = 0;
    if (!parse_number(fields[0], class_id) || class_id < 0) {
      throw ParseError(src, line_no, "bad class_id");
    }
    FormantFrame frame;
    if (!parse_number(fields[1], frame.t_sec) || frame.t_sec < 0.0) {
      throw ParseError(src, line_no, "bad t_sec");
    }
    for (int k = 0; k < kFormants; ++k) {
      double f = 0.0, a = 0.0;
      if (!parse_number(fields[2 + 2 * k], f)) {
        throw ParseError(src, line_no, "bad frequency f" + std::to_string(k + 1));
      }
      if (!parse_number(fields[3 + 2 * k], a)) {
        throw ParseError(src, line_no, "bad amplitude a" + std::to_string(k + 1));
      }
      if (!(f >= 0.0 && f <= kMaxFrequencyHz)) {
        throw ParseError(src, line_no, "frequency out of range [0, 4000] Hz");
      }
      if (!(a >= 0.0 && a <= 1.0)) {
        throw ParseError(src, line_no, "amplitude out of range [0, 1]");
      }
      frame.freq_hz[k] = f;
      frame.amp[k] = a;
    }
    if (frame.t_sec >= total_duration) {
      throw ParseError(src, line_no, "t_sec beyond the clip duration");
    }
    const bool new_track = tracks.empty() ||
                           tracks.back().class_id != class_id ||
                           !(frame.t_sec > tracks.back().frames.back().t_sec);
    if (new_track) {
      FormantTrack tr;
      tr.class_id = class_id;
      tr.total_duration = total_duration;
      tracks.push_back(std::move(tr));
    }
    tracks.back().frames.push_back(frame);
  }
  // Frame spacing: smallest gap between consecutive frames of a track.
  for (auto& tr : tracks) {
    double gap = 0.0;
    for (std::size_t i = 1; i < tr.frames.size(); ++i) {
      const double g = tr.frames[i].t_sec - tr.frames[i - 1].t_sec;
      if (gap == 0.0 || g < gap) gap = g;
    }
    if (gap > 0.0) tr.frame_dt = gap;
  }
  return tracks;
}

void save_formant_csv(const std::filesystem::path& path,
                      const std::vector<FormantTrack>& tracks) {
  auto out = open_out(path);
  out << kFormantHeader << '\n';
  for (const auto& tr : tracks) {
    for (const auto& f : tr.frames) {
      out << tr.class_id << ',' << format_double(f.t_sec);
      for (int k = 0; k < kFormants; ++k) {
        out << ',' << format_double(f.freq_hz[k]) << ','
            << format_double(f.amp[k]);
      }
      out << '\n';
    }
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void save_raster_file(const std::filesystem::path& path, const Dataset& data) {
  data.validate();
  auto out = open_out(path);
  out << kRasterMagic << ' ' << data.neurons() << ' ' << data.steps() << ' '
      << format_double(data.dt()) << '\n';
  for (const auto& s : data.samples) {
    out << s.class_id;
    for (int n = 0; n < s.raster.neurons(); ++n) {
      const auto row = s.raster.row(n);
      for (int t = 0; t < s.raster.steps(); ++t) {
        if (row[t]) out << ' ' << n << ':' << t;
      }
    }
    out << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

Dataset load_raster_file(const std::filesystem::path& path, int n_classes) {
  auto in = open_in(path);
  const std::string src = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(src, 1, "missing header");
  std::istringstream header(line);
  std::string magic, neurons_s, steps_s, dt_s, extra;
  header >> magic >> neurons_s >> steps_s >> dt_s;
  int neurons = 0, steps = 0;
  double dt = 0.0;
  if (magic != kRasterMagic || !parse_number(neurons_s, neurons) ||
      !parse_number(steps_s, steps) || !parse_number(dt_s, dt) ||
      (header >> extra) || neurons < 1 || steps < 0 || !(dt > 0.0)) {
    throw ParseError(src, 1,
                     "expected '" + std::string(kRasterMagic) +
                         " <n_neurons> <T> <dt>'");
  }
  Dataset data;
  data.provenance = "raster " + src;
  int max_class = -1;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    Sample sample{SpikeRaster(neurons, steps, dt), 0};
    std::size_t pos = 0;
    bool first = true;
    while (pos < view.size()) {
      auto next = view.find(' ', pos);
      if (next == std::string_view::npos) next = view.size();
      const auto tok = view.substr(pos, next - pos);
      pos = next + 1;
      if (tok.empty()) continue;
      if (first) {
        if (!parse_number(tok, sample.class_id) || sample.class_id < 0) {
          throw ParseError(src, line_no, "bad class id");
        }
        first = false;
        continue;
      }
      const auto colon = tok.find(':');
      int n = 0, t = 0;
      if (colon == std::string_view::npos ||
          !parse_number(tok.substr(0, colon), n) ||
          !parse_number(tok.substr(colon + 1), t)) {
        throw ParseError(src, line_no, "bad spike token '" + std::string(tok) + "'");
      }
      if (n < 0 || n >= neurons || t < 0 || t >= steps) {
        throw ParseError(src, line_no,
                         "spike " + std::string(tok) + " outside the raster");
      }
      sample.raster.set(n, t, true);
    }
    max_class = std::max(max_class, sample.class_id);
    data.samples.push_back(std::move(sample));
  }
  data.n_classes = n_classes > 0 ? n_classes : max_class + 1;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    if (data.samples[i].class_id >= data.n_classes) {
      throw ParseError(src, static_cast<long>(i) + 2, "class id out of range");
    }
  }
  return data;
}

}  // namespace tdekws
