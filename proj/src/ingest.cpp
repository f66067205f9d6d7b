#include "seqcast/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "seqcast/error.hpp"
#include "seqcast/preprocess.hpp"

namespace seqcast {

namespace {

/// Splits one CSV line; double quotes wrap fields, "" escapes a quote.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(std::move(field));
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

std::string strip_bom(std::string s) {
    if (s.size() >= 3 && s[0] == '\xEF' && s[1] == '\xBB' && s[2] == '\xBF') s.erase(0, 3);
    return s;
}

bool parse_double(const std::string& text, double& out) {
    const char* begin = text.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end != begin && *end == '\0' && std::isfinite(out);
}

[[noreturn]] void row_error(std::size_t line, const std::string& column, const std::string& what) {
    raise(ErrorKind::data,
          "line " + std::to_string(line) + ", column " + column + ": " + what);
}

struct DayAccumulator {
    double temp_sum = 0.0;
    std::size_t temp_n = 0;
    std::vector<double> extra_sum;
    std::vector<std::size_t> extra_n;
    std::size_t rows = 0;
};

} // namespace

std::vector<ClimateRecord> read_csv(const std::string& path, const CsvSchema& schema,
                                    IngestReport* report) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::io, "cannot open CSV file: " + path);

    IngestReport local;
    IngestReport& rep = report ? *report : local;
    rep = IngestReport{};

    std::string line;
    if (!std::getline(in, line)) raise(ErrorKind::data, "CSV file is empty (no header): " + path);
    line = strip_bom(line);

    const std::vector<std::string> header = split_csv(line);
    auto find_col = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return i;
        raise(ErrorKind::data, "CSV header has no column \"" + name + "\": " + path);
    };
    const std::size_t date_idx = find_col(schema.date_column);
    const std::size_t temp_idx = find_col(schema.temp_column);
    std::vector<std::size_t> extra_idx;
    extra_idx.reserve(schema.extra_columns.size());
    for (const std::string& name : schema.extra_columns) extra_idx.push_back(find_col(name));

    const std::size_t n_extra = extra_idx.size();
    std::vector<ClimateRecord> records;
    std::map<Date, DayAccumulator> days; // only used when resampling
    bool have_prev = false;
    Date prev{};

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        ++rep.rows_read;
        const std::vector<std::string> cells = split_csv(line);
        auto cell = [&](std::size_t idx, const std::string& name) -> std::string {
            if (idx >= cells.size()) row_error(line_no, name, "row has too few cells");
            return trim(cells[idx]);
        };

        std::string date_text = cell(date_idx, schema.date_column);
        if (schema.resample_daily) {
            // Hourly exports carry a time part; only the calendar day matters.
            const std::size_t cut = date_text.find_first_of(" T");
            if (cut != std::string::npos) date_text = date_text.substr(0, cut);
        }
        Date date;
        if (!parse_date(date_text, schema.date_format, date)) {
            row_error(line_no, schema.date_column, "unparsable date \"" + date_text + "\"");
        }

        const std::string temp_text = cell(temp_idx, schema.temp_column);
        double temp = 0.0;
        bool temp_missing = temp_text.empty();
        if (!temp_missing && !parse_double(temp_text, temp)) {
            row_error(line_no, schema.temp_column, "unparsable number \"" + temp_text + "\"");
        }
        if (!temp_missing && schema.enforce_band &&
            (temp < schema.temp_min || temp > schema.temp_max)) {
            char msg[128];
            std::snprintf(msg, sizeof msg, "temperature %g outside the sanity band [%g, %g]", temp,
                          schema.temp_min, schema.temp_max);
            row_error(line_no, schema.temp_column, msg);
        }

        std::vector<double> extras(n_extra, 0.0);
        std::vector<bool> extras_missing(n_extra, false);
        for (std::size_t e = 0; e < n_extra; ++e) {
            const std::string text = cell(extra_idx[e], schema.extra_columns[e]);
            if (text.empty()) {
                extras_missing[e] = true;
            } else if (!parse_double(text, extras[e])) {
                row_error(line_no, schema.extra_columns[e],
                          "unparsable number \"" + text + "\"");
            }
        }

        if (schema.resample_daily) {
            DayAccumulator& acc = days[date];
            if (acc.extra_sum.empty() && n_extra > 0) {
                acc.extra_sum.assign(n_extra, 0.0);
                acc.extra_n.assign(n_extra, 0);
            }
            ++acc.rows;
            if (!temp_missing) {
                acc.temp_sum += temp;
                ++acc.temp_n;
            }
            for (std::size_t e = 0; e < n_extra; ++e) {
                if (!extras_missing[e]) {
                    acc.extra_sum[e] += extras[e];
                    ++acc.extra_n[e];
                }
            }
            continue;
        }

        if (have_prev) {
            if (date == prev) {
                row_error(line_no, schema.date_column,
                          "duplicate date " + date.iso() +
                              " (use daily resampling for sub-daily data)");
            }
            if (date < prev) {
                row_error(line_no, schema.date_column,
                          "date " + date.iso() + " out of order (previous row was " + prev.iso() +
                              ")");
            }
            if (date != prev.next_day()) {
                ++rep.gaps;
                rep.notes.push_back("gap: " + prev.iso() + " -> " + date.iso());
            }
        }
        prev = date;
        have_prev = true;

        ClimateRecord rec;
        rec.date = date;
        rec.temperature = temp;
        rec.temperature_missing = temp_missing;
        rec.extras = std::move(extras);
        rec.extras_missing = std::move(extras_missing);
        records.push_back(std::move(rec));
    }

    if (schema.resample_daily) {
        for (const auto& [date, acc] : days) {
            ClimateRecord rec;
            rec.date = date;
            rec.temperature_missing = acc.temp_n == 0;
            if (acc.temp_n > 0) rec.temperature = acc.temp_sum / static_cast<double>(acc.temp_n);
            rec.extras.assign(n_extra, 0.0);
            rec.extras_missing.assign(n_extra, false);
            for (std::size_t e = 0; e < n_extra; ++e) {
                if (acc.extra_n.empty() || acc.extra_n[e] == 0) {
                    rec.extras_missing[e] = true;
                } else {
                    rec.extras[e] = acc.extra_sum[e] / static_cast<double>(acc.extra_n[e]);
                }
            }
            rep.resampled_rows += acc.rows - 1;
            if (!records.empty()) {
                const Date p = records.back().date;
                if (date != p.next_day()) {
                    ++rep.gaps;
                    rep.notes.push_back("gap: " + p.iso() + " -> " + date.iso());
                }
            }
            records.push_back(std::move(rec));
        }
        if (rep.resampled_rows > 0) {
            rep.notes.push_back("resampled " + std::to_string(rep.resampled_rows + records.size()) +
                                " rows into " + std::to_string(records.size()) + " days");
        }
    }

    if (records.empty()) raise(ErrorKind::data, "CSV file has no data rows: " + path);
    rep.records = records.size();
    return records;
}

SeriesBundle to_series(const std::vector<ClimateRecord>& records, bool with_calendar) {
    if (records.empty()) raise(ErrorKind::data, "cannot build a series from zero records");
    const std::size_t L = records.size();
    const std::size_t n_extra = records.front().extras.size();
    const std::size_t F = 1 + n_extra + (with_calendar ? 2 : 0);

    SeriesBundle out;
    out.values = Tensor({L, F});
    out.missing = Tensor({L, F});
    out.dates.reserve(L);
    for (std::size_t r = 0; r < L; ++r) {
        const ClimateRecord& rec = records[r];
        if (rec.extras.size() != n_extra) {
            raise(ErrorKind::consistency, "record " + std::to_string(r) +
                                              " has a different extra-column count");
        }
        out.dates.push_back(rec.date);
        out.values.at(r, 0) = rec.temperature_missing ? 0.0 : rec.temperature;
        out.missing.at(r, 0) = rec.temperature_missing ? 0.0 : 1.0;
        for (std::size_t e = 0; e < n_extra; ++e) {
            out.values.at(r, 1 + e) = rec.extras_missing[e] ? 0.0 : rec.extras[e];
            out.missing.at(r, 1 + e) = rec.extras_missing[e] ? 0.0 : 1.0;
        }
    }
    if (with_calendar) {
        const Tensor cal = calendar_features(out.dates);
        for (std::size_t r = 0; r < L; ++r) {
            out.values.at(r, F - 2) = cal.at(r, 0);
            out.values.at(r, F - 1) = cal.at(r, 1);
            out.missing.at(r, F - 2) = 1.0;
            out.missing.at(r, F - 1) = 1.0;
        }
    }
    return out;
}

void write_csv(const std::string& path, const std::vector<ClimateRecord>& records,
               const CsvSchema& schema) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot open CSV for writing: " + path);
    out << schema.date_column << "," << schema.temp_column;
    for (const std::string& name : schema.extra_columns) out << "," << name;
    out << "\n";
    char buf[64];
    for (const ClimateRecord& rec : records) {
        out << rec.date.iso() << ",";
        if (!rec.temperature_missing) {
            std::snprintf(buf, sizeof buf, "%.17g", rec.temperature);
            out << buf;
        }
        for (std::size_t e = 0; e < rec.extras.size(); ++e) {
            out << ",";
            if (!rec.extras_missing[e]) {
                std::snprintf(buf, sizeof buf, "%.17g", rec.extras[e]);
                out << buf;
            }
        }
        out << "\n";
    }
    out.flush();
    if (!out) raise(ErrorKind::io, "failed writing CSV: " + path);
}

} // namespace seqcast
