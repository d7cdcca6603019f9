#pragma once

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rainscale {

using Date = std::chrono::sys_days;

Date make_date(int year, int month, int day);
std::optional<Date> parse_date(std::string_view iso);  // strict YYYY-MM-DD
std::string format_date(Date d);
int year_of(Date d);
int month_of(Date d);

enum class Season { DJF, MAM, JJA, SON };

inline constexpr std::array<Season, 4> kSeasons{Season::DJF, Season::MAM,
                                                Season::JJA, Season::SON};

std::string_view season_name(Season s);
std::optional<Season> season_from_name(std::string_view name);

/// Month-based season of a calendar day; Feb 29 falls in DJF.
Season season_of(Date d);

/// Season-year a day belongs to: December counts toward the following year's
/// winter, so winter 1950 runs December 1949 through February 1950.
int season_year(Date d);

/// Nominal season length in days: DJF 90.25 (leap-amortized), MAM 92,
/// JJA 92, SON 91.
double season_length_days(Season s);

struct DailyRecord {
  Date date{};
  std::optional<double> value;  ///< tenths of mm, >= 0; nullopt = missing
};

/// One station's or grid cell's daily precipitation record.
struct DailySeries {
  std::string site_id;
  double lat = 0.0;            ///< degrees N
  double lon = 0.0;            ///< degrees E (negative = W)
  std::optional<double> elev;  ///< meters; grid cells usually have none
  std::vector<DailyRecord> records;  ///< strictly increasing dates

  /// Throws std::invalid_argument on out-of-order dates or negative values.
  void validate() const;
};

}  // namespace rainscale
