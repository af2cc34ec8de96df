#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "optospring/sim.hpp"
#include "optospring/spectral.hpp"

namespace optospring {

/// Malformed on-disk data; the message carries file and line context.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Shortest representation that round-trips a double exactly (%.17g).
std::string format_double(double v);

/// FNV-1a 64-bit over a byte string; stable fingerprint for headers.
std::uint64_t fnv1a64(const std::string& bytes);
std::string to_hex(std::uint64_t v);

// ---- Spectrum files -------------------------------------------------------
// Columnar text, two whitespace-separated columns freq_hz psd_m2_per_hz.
// '#' lines carry units, provenance and resolution bandwidth; unknown '#'
// lines are ignored on read. All diagnostics cite file:line.

void write_spectrum(const std::string& path, const NoiseSpectrum& spectrum);
NoiseSpectrum read_spectrum(const std::string& path);

// ---- Trajectory files -----------------------------------------------------
// Text: two columns time_s x_m with '#' headers. Raw: 16-byte header (magic
// "OSPR", little-endian uint32 version = 1, little-endian float64 dt)
// followed by little-endian float64 samples.

struct RawTrajectory {
    double dt = 0.0;
    std::vector<double> samples;
};

void write_trajectory_text(const std::string& path, const Trajectory& trajectory);
void write_trajectory_raw(const std::string& path, const Trajectory& trajectory);
RawTrajectory read_trajectory_raw(const std::string& path);
RawTrajectory read_trajectory_text(const std::string& path);

// ---- Key = value reports --------------------------------------------------

void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& items);
std::vector<std::pair<std::string, std::string>> fit_report_items(const LorentzianFit& fit);

// ---- Calibration tables ---------------------------------------------------
// Text: '#' headers, drive parameters as key = value lines, then two
// columns phi gain.

void write_calibration(const std::string& path, const CalibrationTable& table);
CalibrationTable read_calibration(const std::string& path);

// ---- CSV ------------------------------------------------------------------
// Comma-separated body; '#'-prefixed header lines carry column names, units
// and the config fingerprint. Doubles are emitted with format_double, so a
// fixed input produces byte-identical files.

class CsvWriter {
  public:
    CsvWriter(std::string path, std::vector<std::string> columns,
              std::vector<std::string> units, std::string config_hash_hex);

    void add_comment(const std::string& text);
    void add_row(const std::vector<std::string>& cells);
    /// Flush to disk; no further rows may be added.
    void finish();

  private:
    std::string path_;
    std::size_t n_columns_;
    std::string body_;
    bool finished_ = false;
};

struct CsvTable {
    std::vector<std::string> comments;  // '#' lines, prefix stripped
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);

}  // namespace optospring
