#include "rainscale/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rainscale {

namespace {

constexpr std::size_t kMaxWarnings = 50;

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  // Trim whitespace and a trailing \r.
  for (auto& f : out) {
    while (!f.empty() && std::isspace(static_cast<unsigned char>(f.back()))) f.pop_back();
    std::size_t i = 0;
    while (i < f.size() && std::isspace(static_cast<unsigned char>(f[i]))) ++i;
    f.erase(0, i);
  }
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

std::ifstream open_checked(const std::string& path, const char* expected_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error(path + ": empty file");
  while (!header.empty() && (header.back() == '\r' || header.back() == '\n')) header.pop_back();
  if (header != expected_header) {
    throw std::runtime_error(path + ": expected header '" + std::string(expected_header) +
                             "', got '" + header + "'");
  }
  return in;
}

struct SeriesBuilder {
  DailySeries meta;
  std::map<Date, std::optional<double>> days;
};

std::vector<DailySeries> finish(std::map<std::string, SeriesBuilder>& builders) {
  std::vector<DailySeries> out;
  out.reserve(builders.size());
  for (auto& [id, b] : builders) {
    DailySeries s = std::move(b.meta);
    s.records.reserve(b.days.size());
    for (const auto& [date, value] : b.days) s.records.push_back({date, value});
    out.push_back(std::move(s));
  }
  return out;  // std::map iteration is already id-sorted
}

}  // namespace

void LoadReport::warn(const std::string& msg) {
  if (warnings.size() < kMaxWarnings) {
    warnings.push_back(msg);
  } else if (warnings.size() == kMaxWarnings) {
    warnings.push_back("(further warnings suppressed)");
  }
}

std::vector<DailySeries> load_station_data(const std::string& stations_path,
                                           const std::string& daily_path, LoadReport* report) {
  LoadReport local;
  LoadReport& rep = report ? *report : local;

  std::map<std::string, SeriesBuilder> builders;
  {
    std::ifstream in = open_checked(stations_path, "station_id,lat_deg,lon_deg,elev_m");
    std::string line;
    long lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto f = split_line(line);
      if (f.size() != 4 || f[0].empty()) {
        ++rep.rows_rejected;
        rep.warn(stations_path + ":" + std::to_string(lineno) + ": malformed row");
        continue;
      }
      const auto lat = parse_double(f[1]);
      const auto lon = parse_double(f[2]);
      if (!lat || !lon) {
        ++rep.rows_rejected;
        rep.warn(stations_path + ":" + std::to_string(lineno) + ": bad coordinates");
        continue;
      }
      if (builders.count(f[0])) {
        ++rep.rows_rejected;
        rep.warn(stations_path + ":" + std::to_string(lineno) + ": duplicate station " + f[0]);
        continue;
      }
      SeriesBuilder b;
      b.meta.site_id = f[0];
      b.meta.lat = *lat;
      b.meta.lon = *lon;
      b.meta.elev = parse_double(f[3]);
      builders.emplace(f[0], std::move(b));
      ++rep.rows_ok;
    }
  }

  {
    std::ifstream in = open_checked(daily_path, "station_id,date,precip_tenths_mm");
    std::string line;
    long lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto f = split_line(line);
      if (f.size() != 3) {
        ++rep.rows_rejected;
        rep.warn(daily_path + ":" + std::to_string(lineno) + ": malformed row");
        continue;
      }
      auto it = builders.find(f[0]);
      if (it == builders.end()) {
        ++rep.rows_rejected;
        rep.warn(daily_path + ":" + std::to_string(lineno) + ": station " + f[0] +
                 " not in metadata");
        continue;
      }
      const auto date = parse_date(f[1]);
      if (!date) {
        ++rep.rows_rejected;
        rep.warn(daily_path + ":" + std::to_string(lineno) + ": bad date '" + f[1] + "'");
        continue;
      }
      std::optional<double> value;
      if (!f[2].empty() && f[2] != "NA") {
        value = parse_double(f[2]);
        if (!value) {
          ++rep.rows_rejected;
          rep.warn(daily_path + ":" + std::to_string(lineno) + ": bad value '" + f[2] + "'");
          continue;
        }
        if (*value < 0.0) {
          ++rep.rows_rejected;
          rep.warn(daily_path + ":" + std::to_string(lineno) + ": negative precipitation");
          continue;
        }
      }
      if (!it->second.days.emplace(*date, value).second) {
        ++rep.rows_rejected;
        rep.warn(daily_path + ":" + std::to_string(lineno) + ": duplicate (" + f[0] + ", " +
                 f[1] + "), first row kept");
        continue;
      }
      ++rep.rows_ok;
    }
  }
  return finish(builders);
}

std::vector<DailySeries> load_grid_data(const std::string& path, LoadReport* report) {
  LoadReport local;
  LoadReport& rep = report ? *report : local;

  std::map<std::string, SeriesBuilder> builders;
  std::ifstream in = open_checked(path, "cell_id,lat_deg,lon_deg,date,precip_tenths_mm");
  std::string line;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != 5 || f[0].empty()) {
      ++rep.rows_rejected;
      rep.warn(path + ":" + std::to_string(lineno) + ": malformed row");
      continue;
    }
    const auto lat = parse_double(f[1]);
    const auto lon = parse_double(f[2]);
    const auto date = parse_date(f[3]);
    if (!lat || !lon || !date) {
      ++rep.rows_rejected;
      rep.warn(path + ":" + std::to_string(lineno) + ": bad coordinates or date");
      continue;
    }
    auto [it, inserted] = builders.try_emplace(f[0]);
    if (inserted) {
      it->second.meta.site_id = f[0];
      it->second.meta.lat = *lat;
      it->second.meta.lon = *lon;
    } else if (it->second.meta.lat != *lat || it->second.meta.lon != *lon) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": cell " + f[0] +
                               " has inconsistent coordinates");
    }
    std::optional<double> value;
    if (!f[4].empty() && f[4] != "NA") {
      value = parse_double(f[4]);
      if (!value || *value < 0.0) {
        ++rep.rows_rejected;
        rep.warn(path + ":" + std::to_string(lineno) + ": bad value '" + f[4] + "'");
        continue;
      }
    }
    if (!it->second.days.emplace(*date, value).second) {
      ++rep.rows_rejected;
      rep.warn(path + ":" + std::to_string(lineno) + ": duplicate (" + f[0] + ", " + f[3] +
               "), first row kept");
      continue;
    }
    ++rep.rows_ok;
  }
  return finish(builders);
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::string format_value(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", *v);
  return buf;
}

}  // namespace

void write_stations_csv(const std::string& path, const std::vector<DailySeries>& stations) {
  std::ofstream out = open_out(path);
  out << "station_id,lat_deg,lon_deg,elev_m\n";
  char buf[128];
  for (const auto& s : stations) {
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,", s.site_id.c_str(), s.lat, s.lon);
    out << buf;
    if (s.elev) {
      std::snprintf(buf, sizeof(buf), "%.0f", *s.elev);
      out << buf;
    }
    out << "\n";
  }
}

void write_daily_csv(const std::string& path, const std::vector<DailySeries>& stations) {
  std::ofstream out = open_out(path);
  out << "station_id,date,precip_tenths_mm\n";
  for (const auto& s : stations) {
    for (const auto& r : s.records) {
      out << s.site_id << ',' << format_date(r.date) << ',' << format_value(r.value) << '\n';
    }
  }
}

void write_grid_daily_csv(const std::string& path, const std::vector<DailySeries>& cells) {
  std::ofstream out = open_out(path);
  out << "cell_id,lat_deg,lon_deg,date,precip_tenths_mm\n";
  char coord[64];
  for (const auto& c : cells) {
    std::snprintf(coord, sizeof(coord), "%.4f,%.4f", c.lat, c.lon);
    for (const auto& r : c.records) {
      out << c.site_id << ',' << coord << ',' << format_date(r.date) << ','
          << format_value(r.value) << '\n';
    }
  }
}

std::vector<std::pair<std::string, std::string>> read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size() || line[i] == '#') continue;
    const std::size_t eq = line.find('=', i);
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = line.substr(i, eq - i);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    std::size_t j = 0;
    while (j < value.size() && std::isspace(static_cast<unsigned char>(value[j]))) ++j;
    value.erase(0, j);
    while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) value.pop_back();
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

}  // namespace rainscale
