#include "rainscale/series.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace rainscale {

namespace chr = std::chrono;

Date make_date(int year, int month, int day) {
  const chr::year_month_day ymd{chr::year{year}, chr::month{static_cast<unsigned>(month)},
                                chr::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw std::invalid_argument("make_date: invalid calendar date");
  return chr::sys_days{ymd};
}

std::optional<Date> parse_date(std::string_view iso) {
  // YYYY-MM-DD, digits only, fixed width.
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!std::isdigit(static_cast<unsigned char>(iso[i]))) return std::nullopt;
  }
  const int y = (iso[0] - '0') * 1000 + (iso[1] - '0') * 100 + (iso[2] - '0') * 10 + (iso[3] - '0');
  const int m = (iso[5] - '0') * 10 + (iso[6] - '0');
  const int d = (iso[8] - '0') * 10 + (iso[9] - '0');
  const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(m)},
                                chr::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return chr::sys_days{ymd};
}

std::string format_date(Date d) {
  const chr::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

int year_of(Date d) { return int(chr::year_month_day{d}.year()); }

int month_of(Date d) { return static_cast<int>(unsigned(chr::year_month_day{d}.month())); }

std::string_view season_name(Season s) {
  switch (s) {
    case Season::DJF: return "DJF";
    case Season::MAM: return "MAM";
    case Season::JJA: return "JJA";
    case Season::SON: return "SON";
  }
  return "?";
}

std::optional<Season> season_from_name(std::string_view name) {
  for (Season s : kSeasons) {
    if (name == season_name(s)) return s;
  }
  return std::nullopt;
}

Season season_of(Date d) {
  switch (month_of(d)) {
    case 12: case 1: case 2: return Season::DJF;
    case 3: case 4: case 5: return Season::MAM;
    case 6: case 7: case 8: return Season::JJA;
    default: return Season::SON;
  }
}

int season_year(Date d) {
  const int y = year_of(d);
  return month_of(d) == 12 ? y + 1 : y;
}

double season_length_days(Season s) {
  switch (s) {
    case Season::DJF: return 90.25;
    case Season::MAM: return 92.0;
    case Season::JJA: return 92.0;
    case Season::SON: return 91.0;
  }
  return 0.0;
}

void DailySeries::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0 && !(records[i - 1].date < records[i].date)) {
      throw std::invalid_argument("DailySeries " + site_id + ": dates must be strictly increasing");
    }
    if (records[i].value && !(*records[i].value >= 0.0)) {
      throw std::invalid_argument("DailySeries " + site_id + ": negative precipitation value");
    }
  }
}

}  // namespace rainscale
