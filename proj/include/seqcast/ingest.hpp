#ifndef SEQCAST_INGEST_HPP
#define SEQCAST_INGEST_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "seqcast/date.hpp"
#include "seqcast/tensor.hpp"

namespace seqcast {

/// Column mapping and row policies for climate CSV files. The file must
/// carry a header row; cells are comma-separated UTF-8.
struct CsvSchema {
    std::string date_column = "date";
    std::string temp_column = "meantemp";
    std::vector<std::string> extra_columns; // e.g. humidity, wind_speed
    DateFormat date_format = DateFormat::iso;

    /// Collapse multiple rows per calendar day (hourly exports) to their
    /// daily means. Off by default: duplicate dates are rejected.
    bool resample_daily = false;

    /// Sanity band for temperatures; rows outside it are rejected.
    double temp_min = -40.0;
    double temp_max = 60.0;
    bool enforce_band = true;
};

struct ClimateRecord {
    Date date;
    double temperature = 0.0;
    bool temperature_missing = false;
    std::vector<double> extras; // parallel to CsvSchema::extra_columns
    std::vector<bool> extras_missing;
};

struct IngestReport {
    std::size_t rows_read = 0; // data rows in the file
    std::size_t records = 0;   // records produced
    std::size_t gaps = 0;      // breaks in the daily date sequence
    std::size_t resampled_rows = 0; // input rows merged away by resampling
    std::vector<std::string> notes;
};

/// Parses and validates a climate CSV. Dates must end up strictly
/// increasing; duplicates and disorder are errors unless resampling
/// repairs them. Gaps are tolerated and logged in the report. Errors name
/// the offending line and column.
std::vector<ClimateRecord> read_csv(const std::string& path, const CsvSchema& schema,
                                    IngestReport* report = nullptr);

/// Dense [L x F] matrix with temperature as column 0, then the schema's
/// extra columns, then optionally month/season calendar features. The
/// missing mask (1 = present) aligns with the matrix; calendar columns are
/// never missing.
struct SeriesBundle {
    Tensor values;
    Tensor missing; // 1 present, 0 missing
    std::vector<Date> dates;

    std::size_t length() const { return dates.size(); }
};

SeriesBundle to_series(const std::vector<ClimateRecord>& records, bool with_calendar);

/// Writes records back out in the schema's column layout, round-tripping
/// values to full double precision. Used by tests and data generators.
void write_csv(const std::string& path, const std::vector<ClimateRecord>& records,
               const CsvSchema& schema);

} // namespace seqcast

#endif // SEQCAST_INGEST_HPP
